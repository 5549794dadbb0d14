use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use gom_core::Pipeline;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{self, Report, Request};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestRow {
    image: PathBuf,
    detections: PathBuf,
    #[serde(default)]
    depth: Option<PathBuf>,
    query: String,
    /// Output subdirectory; defaults to `row_<index>`.
    #[serde(default)]
    name: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct RowSummary {
    pub index: usize,
    pub out_dir: PathBuf,
    pub ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<Report>,
}

#[derive(Debug, Serialize)]
pub struct BatchSummary {
    pub rows: Vec<RowSummary>,
    pub succeeded: usize,
    pub failed: usize,
    pub wall_ms: f64,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Parse the whole manifest up front; any malformed row aborts the run.
fn read_manifest(path: &Path) -> Result<Vec<(String, Request)>> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let mut rows = Vec::new();
    for (i, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let row: ManifestRow = serde_json::from_str(line)
            .with_context(|| format!("manifest {}:{}", path.display(), i + 1))?;
        let name = row.name.unwrap_or_else(|| format!("row_{}", rows.len()));
        rows.push((
            name,
            Request {
                image: resolve(base, &row.image),
                detections: resolve(base, &row.detections),
                depth: row.depth.map(|d| resolve(base, &d)),
                query: row.query,
            },
        ));
    }
    Ok(rows)
}

pub fn run(
    pipeline: &Pipeline,
    manifest: &Path,
    out: &Path,
    workers: usize,
) -> Result<BatchSummary> {
    let start = Instant::now();
    let rows = read_manifest(manifest)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .context("starting worker pool")?;
    let rows: Vec<RowSummary> = pool.install(|| {
        rows.par_iter()
            .enumerate()
            .map(|(index, (name, req))| {
                let out_dir = out.join(name);
                match artifacts::annotate(pipeline, req, &out_dir) {
                    Ok(report) => RowSummary {
                        index,
                        out_dir,
                        ok: true,
                        error: None,
                        report: Some(report),
                    },
                    Err(e) => RowSummary {
                        index,
                        out_dir,
                        ok: false,
                        error: Some(format!("{e:#}")),
                        report: None,
                    },
                }
            })
            .collect()
    });
    let succeeded = rows.iter().filter(|r| r.ok).count();
    Ok(BatchSummary {
        failed: rows.len() - succeeded,
        succeeded,
        rows,
        wall_ms: start.elapsed().as_secs_f64() * 1000.0,
    })
}
