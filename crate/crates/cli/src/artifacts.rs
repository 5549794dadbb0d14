use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use gom_core::rendering::{decode_image, encode_png};
use gom_core::{parse_detection_file, DepthMap, Pipeline, PipelineInput, StageTimings};
use serde::Serialize;

pub const ANNOTATED: &str = "annotated.png";
pub const SCENE_GRAPH: &str = "scene_graph.json";
pub const PROMPT: &str = "prompt.json";
pub const LAYOUT: &str = "layout.json";

/// One image's worth of inputs.
#[derive(Debug, Clone)]
pub struct Request {
    pub image: PathBuf,
    pub detections: PathBuf,
    pub depth: Option<PathBuf>,
    pub query: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub timings: StageTimings,
    pub wall_ms: f64,
    pub warnings: Vec<String>,
    pub objects: usize,
    pub relations: usize,
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn annotate(pipeline: &Pipeline, req: &Request, out_dir: &Path) -> Result<Report> {
    let start = Instant::now();
    let image_bytes =
        fs::read(&req.image).with_context(|| format!("input: reading {}", req.image.display()))?;
    let image = decode_image(&image_bytes)
        .with_context(|| format!("input: decoding {}", req.image.display()))?;
    let det_bytes = fs::read(&req.detections)
        .with_context(|| format!("input: reading {}", req.detections.display()))?;
    let detections = parse_detection_file(&det_bytes)
        .with_context(|| format!("fusion: {}", req.detections.display()))?;
    let depth = match &req.depth {
        Some(p) => {
            let bytes = fs::read(p).with_context(|| format!("input: reading {}", p.display()))?;
            Some(
                DepthMap::from_pgm(&bytes)
                    .with_context(|| format!("relations: depth {}", p.display()))?,
            )
        }
        None => None,
    };

    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let image_ref = out_dir.join(ANNOTATED);
    let image_ref_s = image_ref.to_string_lossy();
    let out = pipeline.run(&PipelineInput {
        image: &image,
        detections: &detections,
        depth: depth.as_ref(),
        query: &req.query,
        image_ref: &image_ref_s,
    })?;

    let png = encode_png(&out.image).context("render")?;
    write_atomic(&image_ref, &png)?;
    write_atomic(
        &out_dir.join(SCENE_GRAPH),
        &json_bytes(&out.document(&pipeline.config))?,
    )?;
    write_atomic(&out_dir.join(PROMPT), &json_bytes(&out.prompt)?)?;
    write_atomic(&out_dir.join(LAYOUT), &json_bytes(&out.layout)?)?;

    Ok(Report {
        timings: out.timings,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
        warnings: out.warnings,
        objects: out.scene_graph.objects.len(),
        relations: out.scene_graph.relations.len(),
    })
}
