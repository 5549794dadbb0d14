//! Pairwise spatial relation estimation over ordered object pairs.
//!
//! Every ordered pair `(head, tail)` is classified into at most one
//! directional label, at most one depth label, and a `near` fallback when no
//! directional label applies. Directional labels between objects of
//! different classes may carry a closeness modifier. A triplet
//! `head --(label)--> tail` reads "head is <label> tail".

use crate::config::{DistanceMode, NearMetric, PipelineConfig};
use crate::depth::DepthMap;
use crate::geometry::{iou, ImageDims};
use crate::types::{Modifier, ObjectInstance, Relation, RelationLabel};

/// Geometry of one ordered pair, in the units the thresholds expect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairGeometry {
    /// `center(head) - center(tail)`, threshold units.
    pub dx: f64,
    pub dy: f64,
    pub center_distance_px: f64,
    /// Center distance over the image diagonal.
    pub d_norm: f64,
    pub iou: f64,
    /// Largest axis gap between box edges, threshold units; 0 if overlapping.
    pub box_gap: f64,
}

impl PairGeometry {
    pub fn between(
        head: &ObjectInstance,
        tail: &ObjectInstance,
        dims: ImageDims,
        cfg: &PipelineConfig,
    ) -> Self {
        let (sx, sy) = axis_scales(dims, cfg);
        let ch = head.center();
        let ct = tail.center();
        let (gx, gy) = head.bbox.axis_gaps(&tail.bbox);
        let center_distance_px = ch.distance(ct);
        Self {
            dx: (ch.x - ct.x) * sx,
            dy: (ch.y - ct.y) * sy,
            center_distance_px,
            d_norm: center_distance_px / dims.diagonal(),
            iou: iou(&head.bbox, &tail.bbox),
            box_gap: (gx * sx).max(gy * sy),
        }
    }

    pub fn squared_distance(&self) -> f64 {
        self.dx * self.dx + self.dy * self.dy
    }
}

/// Pixel-to-threshold-unit scale factors for each axis.
fn axis_scales(dims: ImageDims, cfg: &PipelineConfig) -> (f64, f64) {
    match cfg.distance_mode {
        DistanceMode::ReferenceFrame => (
            cfg.reference_frame_size / dims.width as f64,
            cfg.reference_frame_size / dims.height as f64,
        ),
        DistanceMode::Pixel => (1.0, 1.0),
    }
}

/// 3x3 median depth around the object's box center.
pub fn sample_depth(depth: &DepthMap, object: &ObjectInstance) -> f64 {
    depth.sample_median3(object.center())
}

/// Dominant-axis direction of the head relative to the tail.
pub fn directional_relation(geom: &PairGeometry, cfg: &PipelineConfig) -> Option<RelationLabel> {
    let (adx, ady) = (geom.dx.abs(), geom.dy.abs());
    if ady >= adx && ady > cfg.tau_dir_margin {
        Some(if geom.dy < 0.0 {
            RelationLabel::Above
        } else {
            RelationLabel::Below
        })
    } else if adx > cfg.tau_dir_margin {
        Some(if geom.dx < 0.0 {
            RelationLabel::LeftOf
        } else {
            RelationLabel::RightOf
        })
    } else {
        None
    }
}

/// `in_front_of` when the head is substantially nearer, `behind` when farther.
pub fn depth_relation(
    depth_head: f64,
    depth_tail: f64,
    cfg: &PipelineConfig,
) -> Option<RelationLabel> {
    let diff = depth_head - depth_tail;
    if diff.abs() > cfg.tau_z_diff {
        Some(if diff > 0.0 {
            RelationLabel::InFrontOf
        } else {
            RelationLabel::Behind
        })
    } else {
        None
    }
}

/// `near` fallback for pairs without a directional label.
pub fn proximity_relation(
    geom: &PairGeometry,
    existing: &[RelationLabel],
    cfg: &PipelineConfig,
) -> Option<RelationLabel> {
    if existing.iter().any(|l| l.is_directional()) {
        return None;
    }
    let within = match cfg.near_metric {
        NearMetric::Squared => geom.squared_distance() < cfg.tau_near,
        NearMetric::Linear => geom.squared_distance().sqrt() < cfg.tau_near,
    };
    within.then_some(RelationLabel::Near)
}

/// Closeness qualifier for a directional relation between different classes.
pub fn closeness_modifier(
    label: RelationLabel,
    geom: &PairGeometry,
    head_class: &str,
    tail_class: &str,
    cfg: &PipelineConfig,
) -> Option<Modifier> {
    if !label.is_directional() || head_class == tail_class {
        return None;
    }
    if geom.iou > cfg.tau_touch_iou || geom.box_gap <= cfg.tau_touch_gap {
        Some(Modifier::Touching)
    } else if geom.d_norm < cfg.tau_v_close {
        Some(Modifier::VeryClose)
    } else if geom.d_norm < cfg.tau_close {
        Some(Modifier::Close)
    } else {
        None
    }
}

/// Apply [`closeness_modifier`] to `rel` in place.
pub fn attach_modifier(
    rel: &mut Relation,
    geom: &PairGeometry,
    head_class: &str,
    tail_class: &str,
    cfg: &PipelineConfig,
) {
    if rel.label.is_directional() {
        rel.modifier = closeness_modifier(rel.label, geom, head_class, tail_class, cfg);
    }
}

/// Candidate relations over all ordered pairs, in `(head, tail)` order and
/// ontology order within a pair. Depth relations are skipped without a map.
pub fn build_relation_set(
    objects: &[ObjectInstance],
    depth: Option<&DepthMap>,
    dims: ImageDims,
    cfg: &PipelineConfig,
) -> Vec<Relation> {
    let depths: Option<Vec<f64>> =
        depth.map(|d| objects.iter().map(|o| sample_depth(d, o)).collect());
    let mut out = Vec::new();
    let mut labels = Vec::with_capacity(3);
    for (h, head) in objects.iter().enumerate() {
        for (t, tail) in objects.iter().enumerate() {
            if h == t {
                continue;
            }
            let geom = PairGeometry::between(head, tail, dims, cfg);
            labels.clear();
            labels.extend(directional_relation(&geom, cfg));
            if let Some(d) = &depths {
                labels.extend(depth_relation(d[h], d[t], cfg));
            }
            if let Some(near) = proximity_relation(&geom, &labels, cfg) {
                labels.push(near);
            }
            for &label in &labels {
                let mut rel = Relation::new(h, t, label, geom.center_distance_px);
                attach_modifier(&mut rel, &geom, &head.class_label, &tail.class_label, cfg);
                out.push(rel);
            }
        }
    }
    out
}
