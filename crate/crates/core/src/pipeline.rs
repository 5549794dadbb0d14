//! End-to-end orchestration: fusion, relations, filtering, identifiers,
//! rendering and prompt assembly for one image.

use std::time::{Duration, Instant};

use image::RgbImage;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{PipelineConfig, PromptMode};
use crate::depth::{DepthError, DepthMap};
use crate::filtering::{filter_scene_graph, FilterResources, QueryMatch};
use crate::fusion::{attach_masks, filter_by_confidence, fuse_wbf, DetectionFile, FusionError};
use crate::geometry::{iou, BoundingBox};
use crate::prompting::{
    assign_ids, build_prompt, verbalize_scene_graph, PromptError, PromptPayload,
};
use crate::relations::build_relation_set;
use crate::rendering::{render, FontAtlas, Layout, RenderError};
use crate::types::SceneGraph;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("fusion: {0}")]
    Fusion(#[from] FusionError),
    #[error("relations: {0}")]
    Depth(#[from] DepthError),
    #[error("render: {0}")]
    Render(#[from] RenderError),
    #[error("prompt: {0}")]
    Prompt(#[from] PromptError),
    #[error("input: image is {image_w}x{image_h} but detections declare {det_w}x{det_h}")]
    ImageMismatch {
        image_w: u32,
        image_h: u32,
        det_w: u32,
        det_h: u32,
    },
}

/// Wall time per stage, in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub fusion: f64,
    pub relations: f64,
    pub filtering: f64,
    pub render: f64,
    pub prompt: f64,
}

impl StageTimings {
    pub fn total(&self) -> f64 {
        self.fusion + self.relations + self.filtering + self.render + self.prompt
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: u32,
    /// Identifier as drawn on the image.
    pub mark: String,
    pub class: String,
    #[serde(rename = "box")]
    pub bbox: [f64; 4],
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub head_id: u32,
    pub label: String,
    pub modifier: Option<String>,
    pub tail_id: u32,
}

/// Serialized form of a filtered scene graph (`scene_graph.json`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneGraphDocument {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

impl SceneGraphDocument {
    pub fn from_graph(sg: &SceneGraph, cfg: &PipelineConfig) -> Self {
        let id = |i: usize| {
            sg.objects[i]
                .mark_id
                .as_ref()
                .map_or(i as u32 + 1, |m| m.numeric)
        };
        let nodes = sg
            .objects
            .iter()
            .enumerate()
            .map(|(i, o)| GraphNode {
                id: id(i),
                mark: sg.mark_text(i, cfg.id_style),
                class: o.class_label.clone(),
                bbox: o.bbox.to_array(),
                confidence: o.confidence,
            })
            .collect();
        let edges = sg
            .relations
            .iter()
            .map(|r| GraphEdge {
                head_id: id(r.head),
                label: r.label.as_str().to_string(),
                modifier: r.modifier.map(|m| m.as_str().to_string()),
                tail_id: id(r.tail),
            })
            .collect();
        Self { nodes, edges }
    }

    /// Node whose numeric ID or textual mark equals `mark`.
    pub fn find(&self, mark: &str) -> Option<&GraphNode> {
        let mark = mark.trim();
        self.nodes.iter().find(|n| {
            n.mark == mark || n.id.to_string() == mark || format!("{}_{}", n.class, n.id) == mark
        })
    }
}

/// Minimum IoU, inclusive, for a referring-expression answer to count.
pub const REC_IOU_THRESHOLD: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecVerdict {
    pub correct: bool,
    /// IoU of the predicted region with the ground truth; `None` if the ID is unknown.
    pub iou: Option<f64>,
    pub unknown_id: bool,
}

/// Score one referring-expression prediction against its ground-truth box.
pub fn rec_verdict(doc: &SceneGraphDocument, predicted_id: &str, gt: &BoundingBox) -> RecVerdict {
    match doc
        .find(predicted_id)
        .and_then(|n| BoundingBox::from_array(n.bbox).ok())
    {
        Some(region) => {
            let v = iou(&region, gt);
            RecVerdict {
                correct: v >= REC_IOU_THRESHOLD,
                iou: Some(v),
                unknown_id: false,
            }
        }
        None => RecVerdict {
            correct: false,
            iou: None,
            unknown_id: true,
        },
    }
}

pub struct PipelineInput<'a> {
    pub image: &'a RgbImage,
    pub detections: &'a DetectionFile,
    pub depth: Option<&'a DepthMap>,
    pub query: &'a str,
    /// Path recorded in the prompt payload for the rendered image.
    pub image_ref: &'a str,
}

pub struct PipelineOutput {
    pub scene_graph: SceneGraph,
    pub query_match: QueryMatch,
    pub image: RgbImage,
    pub layout: Layout,
    pub prompt: PromptPayload,
    pub timings: StageTimings,
    pub warnings: Vec<String>,
}

impl PipelineOutput {
    pub fn document(&self, cfg: &PipelineConfig) -> SceneGraphDocument {
        SceneGraphDocument::from_graph(&self.scene_graph, cfg)
    }
}

/// Shared, immutable pipeline state; `run` may be called from many threads.
pub struct Pipeline {
    pub config: PipelineConfig,
    pub resources: FilterResources,
    font: FontAtlas,
}

impl Pipeline {
    pub fn new(config: PipelineConfig, resources: FilterResources) -> Result<Self, RenderError> {
        Ok(Self {
            config,
            resources,
            font: FontAtlas::builtin()?,
        })
    }

    pub fn run(&self, input: &PipelineInput) -> Result<PipelineOutput, PipelineError> {
        let cfg = &self.config;
        let det = input.detections;
        let dims = det.dims;
        if input.image.dimensions() != (dims.width, dims.height) {
            return Err(PipelineError::ImageMismatch {
                image_w: input.image.width(),
                image_h: input.image.height(),
                det_w: dims.width,
                det_h: dims.height,
            });
        }
        let mut warnings = Vec::new();
        let mut timings = StageTimings::default();

        let t = Instant::now();
        let kept = filter_by_confidence(&det.detections, cfg.tau_od_min_conf);
        let fused = fuse_wbf(&kept, cfg.tau_overlap_iou, cfg.score_weighting);
        let objects = attach_masks(fused, det)?;
        timings.fusion = ms(t.elapsed());

        let t = Instant::now();
        if let Some(d) = input.depth {
            d.ensure_dims(dims)?;
        } else {
            warnings.push("no depth map: in_front_of/behind relations omitted".to_string());
        }
        let relations = build_relation_set(&objects, input.depth, dims, cfg);
        timings.relations = ms(t.elapsed());

        let t = Instant::now();
        let (mut sg, query_match) =
            filter_scene_graph(objects, &relations, input.query, &self.resources, cfg);
        assign_ids(&mut sg.objects);
        timings.filtering = ms(t.elapsed());

        let t = Instant::now();
        let rendered = render(input.image, &sg, cfg, &self.font)?;
        if !rendered.layout.resolved {
            warnings.push("mark layout unresolved: some labels still overlap".to_string());
        }
        timings.render = ms(t.elapsed());

        let t = Instant::now();
        let sg_text = match cfg.prompt_mode {
            PromptMode::Visual => None,
            PromptMode::VisualTextual => Some(verbalize_scene_graph(&sg, cfg.id_style)),
        };
        let prompt = build_prompt(
            cfg.prompt_mode,
            input.query,
            sg_text.as_deref(),
            input.image_ref,
        )?;
        timings.prompt = ms(t.elapsed());

        Ok(PipelineOutput {
            scene_graph: sg,
            query_match,
            image: rendered.image,
            layout: rendered.layout,
            prompt,
            timings,
            warnings,
        })
    }
}
