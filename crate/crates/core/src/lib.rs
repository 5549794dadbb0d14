//! Scene-graph visual prompting: fuse detections into object instances,
//! derive spatial relations, keep the part of the graph a query is about,
//! draw it onto the image and assemble prompts for a multimodal model.

pub mod config;
pub mod depth;
pub mod filtering;
pub mod fusion;
pub mod geometry;
pub mod mask;
pub mod pipeline;
pub mod prompting;
pub mod relations;
pub mod rendering;
pub mod types;

pub use config::{ConfigError, PipelineConfig, PromptMode, RenderStyle};
pub use depth::{DepthError, DepthMap};
pub use filtering::FilterResources;
pub use fusion::{parse_detection_file, DetectionFile, FusionError, RawDetection};
pub use geometry::{iou, BoundingBox, ImageDims, Point, Rect};
pub use mask::RegionMask;
pub use pipeline::{
    rec_verdict, Pipeline, PipelineError, PipelineInput, PipelineOutput, RecVerdict,
    SceneGraphDocument, StageTimings,
};
pub use prompting::PromptPayload;
pub use rendering::{Layout, MarkPlacement, RenderError};
pub use types::{IdStyle, MarkId, Modifier, ObjectInstance, Relation, RelationLabel, SceneGraph};
