//! Detection ingestion and weighted boxes fusion.
//!
//! Detections from every detector in the ensemble are gated by confidence,
//! then same-class boxes overlapping above `tau_overlap_iou` are merged into
//! a single confidence-weighted average box. Masks from the segmenter are
//! attached afterwards, falling back to the box region.

use std::collections::BTreeMap;

use serde_json::Value;
use thiserror::Error;

use crate::config::ScoreWeighting;
use crate::geometry::{iou, BoundingBox, ImageDims};
use crate::mask::RegionMask;
use crate::types::{MaskSource, ObjectInstance};

/// Pixels a segmenter mask may extend past its object's box.
const MASK_BOX_SLACK_PX: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FusionError {
    #[error("malformed detection JSON at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid detection file field `{field}`: {reason}")]
    Validation { field: String, reason: String },
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> FusionError {
    FusionError::Validation {
        field: field.into(),
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDetection {
    pub detector_id: String,
    pub class_label: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
    /// Position in the source file's `detections` array.
    pub source_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFile {
    pub image_path: String,
    pub dims: ImageDims,
    pub detections: Vec<RawDetection>,
    pub masks: BTreeMap<usize, RegionMask>,
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let mut offset = 0;
    for (i, l) in bytes.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return (offset + column.saturating_sub(1)).min(bytes.len());
        }
        offset += l.len() + 1;
    }
    bytes.len()
}

fn get<'a>(obj: &'a Value, key: &str, path: &str) -> Result<&'a Value, FusionError> {
    obj.get(key)
        .ok_or_else(|| invalid(format!("{path}{key}"), "missing"))
}

fn as_finite(v: &Value, field: &str) -> Result<f64, FusionError> {
    let x = v
        .as_f64()
        .ok_or_else(|| invalid(field, format!("expected a number, got {v}")))?;
    if !x.is_finite() {
        return Err(invalid(field, "non-finite value"));
    }
    Ok(x)
}

fn as_dim(v: &Value, field: &str) -> Result<u32, FusionError> {
    v.as_u64()
        .filter(|&d| d > 0 && d <= u32::MAX as u64)
        .map(|d| d as u32)
        .ok_or_else(|| invalid(field, format!("expected a positive integer, got {v}")))
}

fn as_str<'a>(v: &'a Value, field: &str) -> Result<&'a str, FusionError> {
    v.as_str()
        .ok_or_else(|| invalid(field, format!("expected a string, got {v}")))
}

/// Parse and validate a detection interchange file. Boxes overshooting the
/// image are clamped; class labels are lowercased.
pub fn parse_detection_file(bytes: &[u8]) -> Result<DetectionFile, FusionError> {
    let root: Value = serde_json::from_slice(bytes).map_err(|e| FusionError::Parse {
        offset: byte_offset(bytes, e.line(), e.column()),
        message: e.to_string(),
    })?;
    if !root.is_object() {
        return Err(invalid("<root>", "expected a JSON object"));
    }

    let image = get(&root, "image", "")?;
    let image_path = as_str(get(image, "path", "image.")?, "image.path")?.to_string();
    let width = as_dim(get(image, "width", "image.")?, "image.width")?;
    let height = as_dim(get(image, "height", "image.")?, "image.height")?;
    let dims = ImageDims { width, height };

    let entries = get(&root, "detections", "")?
        .as_array()
        .ok_or_else(|| invalid("detections", "expected an array"))?;
    let mut detections = Vec::with_capacity(entries.len());
    for (i, entry) in entries.iter().enumerate() {
        let p = format!("detections[{i}].");
        let detector_id = as_str(get(entry, "detector_id", &p)?, &format!("{p}detector_id"))?;
        let class_label = as_str(get(entry, "class_label", &p)?, &format!("{p}class_label"))?
            .trim()
            .to_lowercase();
        if class_label.is_empty() {
            return Err(invalid(format!("{p}class_label"), "empty label"));
        }
        let conf_field = format!("{p}confidence");
        let confidence = as_finite(get(entry, "confidence", &p)?, &conf_field)?;
        if !(0.0..=1.0).contains(&confidence) {
            return Err(invalid(conf_field, format!("{confidence} not in [0, 1]")));
        }
        let box_field = format!("{p}box");
        let coords = get(entry, "box", &p)?
            .as_array()
            .filter(|a| a.len() == 4)
            .ok_or_else(|| invalid(&box_field, "expected [x_min, y_min, x_max, y_max]"))?;
        let mut c = [0f64; 4];
        for (slot, v) in c.iter_mut().zip(coords) {
            *slot = as_finite(v, &box_field)?;
        }
        if c[0] >= c[2] || c[1] >= c[3] {
            return Err(invalid(box_field, "min must be below max on both axes"));
        }
        let w = width as f64;
        let h = height as f64;
        let bbox = BoundingBox::new(
            c[0].clamp(0.0, w),
            c[1].clamp(0.0, h),
            c[2].clamp(0.0, w),
            c[3].clamp(0.0, h),
        )
        .map_err(|_| invalid(&box_field, "box lies outside the image"))?;
        detections.push(RawDetection {
            detector_id: detector_id.to_string(),
            class_label,
            confidence,
            bbox,
            source_index: i,
        });
    }

    let mut masks = BTreeMap::new();
    if let Some(mask_obj) = root.get("masks").filter(|v| !v.is_null()) {
        let map = mask_obj
            .as_object()
            .ok_or_else(|| invalid("masks", "expected an object keyed by detection index"))?;
        for (key, m) in map {
            let p = format!("masks.{key}.");
            let index: usize = key
                .parse()
                .ok()
                .filter(|&i| i < detections.len())
                .ok_or_else(|| invalid(format!("masks.{key}"), "not a valid detection index"))?;
            let mw = as_dim(get(m, "width", &p)?, &format!("{p}width"))?;
            let mh = as_dim(get(m, "height", &p)?, &format!("{p}height"))?;
            let rle_field = format!("{p}rle");
            let rle = get(m, "rle", &p)?
                .as_array()
                .ok_or_else(|| invalid(&rle_field, "expected an array of counts"))?
                .iter()
                .map(|c| {
                    c.as_u64()
                        .filter(|&c| c <= u32::MAX as u64)
                        .map(|c| c as u32)
                        .ok_or_else(|| invalid(&rle_field, format!("bad count {c}")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            let mask =
                RegionMask::new(mw, mh, rle).map_err(|e| invalid(&rle_field, e.to_string()))?;
            masks.insert(index, mask);
        }
    }

    Ok(DetectionFile {
        image_path,
        dims,
        detections,
        masks,
    })
}

/// Keep detections with `confidence >= tau`, preserving order.
pub fn filter_by_confidence(dets: &[RawDetection], tau: f64) -> Vec<RawDetection> {
    dets.iter()
        .filter(|d| d.confidence >= tau)
        .cloned()
        .collect()
}

struct Cluster {
    class_label: String,
    members: Vec<usize>,
    fused: BoundingBox,
}

impl Cluster {
    fn refuse(&mut self, dets: &[RawDetection]) {
        let mut acc = [0f64; 4];
        let mut weight = 0f64;
        for &m in &self.members {
            let d = &dets[m];
            for (a, v) in acc.iter_mut().zip(d.bbox.to_array()) {
                *a += v * d.confidence;
            }
            weight += d.confidence;
        }
        if weight > 0.0 {
            let c = acc.map(|a| a / weight);
            // A weighted mean of valid boxes is itself valid.
            self.fused = BoundingBox {
                x_min: c[0],
                y_min: c[1],
                x_max: c[2],
                y_max: c[3],
            };
        } else {
            // All-zero confidences: fall back to the plain mean.
            let n = self.members.len() as f64;
            let mut c = [0f64; 4];
            for &m in &self.members {
                for (a, v) in c.iter_mut().zip(dets[m].bbox.to_array()) {
                    *a += v / n;
                }
            }
            self.fused = BoundingBox {
                x_min: c[0],
                y_min: c[1],
                x_max: c[2],
                y_max: c[3],
            };
        }
    }
}

/// Greedy weighted boxes fusion.
///
/// Detections are visited in descending confidence. Each joins the
/// same-class cluster whose running fused box it overlaps most, provided
/// that IoU exceeds `tau_overlap_iou`; otherwise it seeds a new cluster.
/// Output is sorted by descending fused confidence, then class label, then
/// `x_min`.
pub fn fuse_wbf(
    dets: &[RawDetection],
    tau_overlap_iou: f64,
    weighting: ScoreWeighting,
) -> Vec<ObjectInstance> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .confidence
            .total_cmp(&dets[a].confidence)
            .then(dets[a].source_index.cmp(&dets[b].source_index))
    });

    let mut clusters: Vec<Cluster> = Vec::new();
    for i in order {
        let det = &dets[i];
        let best = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.class_label == det.class_label)
            .map(|(ci, c)| (ci, iou(&det.bbox, &c.fused)))
            .filter(|&(_, o)| o > tau_overlap_iou)
            .fold(None::<(usize, f64)>, |acc, cand| match acc {
                Some((_, o)) if o >= cand.1 => acc,
                _ => Some(cand),
            });
        match best {
            Some((ci, _)) => {
                clusters[ci].members.push(i);
                clusters[ci].refuse(dets);
            }
            None => clusters.push(Cluster {
                class_label: det.class_label.clone(),
                members: vec![i],
                fused: det.bbox,
            }),
        }
    }

    let mut objects: Vec<ObjectInstance> = clusters
        .into_iter()
        .map(|c| {
            let confs: Vec<f64> = c.members.iter().map(|&m| dets[m].confidence).collect();
            let sum: f64 = confs.iter().sum();
            let confidence = match weighting {
                ScoreWeighting::Mean => sum / confs.len() as f64,
                ScoreWeighting::WeightedMean if sum > 0.0 => {
                    confs.iter().map(|c| c * c).sum::<f64>() / sum
                }
                ScoreWeighting::WeightedMean => 0.0,
            };
            let mut obj = ObjectInstance::new(c.class_label, confidence, c.fused);
            obj.members = c.members.iter().map(|&m| dets[m].source_index).collect();
            obj
        })
        .collect();
    objects.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.class_label.cmp(&b.class_label))
            .then(a.bbox.x_min.total_cmp(&b.bbox.x_min))
            .then(a.bbox.y_min.total_cmp(&b.bbox.y_min))
    });
    objects
}

/// Give each object the mask of its most confident member that has one,
/// clipped to the object's box plus a small slack; others get their box as
/// a rectangular mask.
pub fn attach_masks(
    mut objects: Vec<ObjectInstance>,
    file: &DetectionFile,
) -> Result<Vec<ObjectInstance>, FusionError> {
    for (index, mask) in &file.masks {
        if mask.width != file.dims.width || mask.height != file.dims.height {
            return Err(invalid(
                format!("masks.{index}"),
                format!(
                    "mask is {}x{}, image is {}x{}",
                    mask.width, mask.height, file.dims.width, file.dims.height
                ),
            ));
        }
    }
    let by_index: BTreeMap<usize, &RawDetection> = file
        .detections
        .iter()
        .map(|d| (d.source_index, d))
        .collect();
    for obj in &mut objects {
        let best = obj
            .members
            .iter()
            .filter(|m| file.masks.contains_key(m))
            .max_by(|a, b| {
                let ca = by_index.get(a).map_or(0.0, |d| d.confidence);
                let cb = by_index.get(b).map_or(0.0, |d| d.confidence);
                ca.total_cmp(&cb).then(b.cmp(a))
            });
        let segmented = best.map(|m| {
            let b = &obj.bbox;
            let slack = BoundingBox {
                x_min: (b.x_min - MASK_BOX_SLACK_PX).max(0.0),
                y_min: (b.y_min - MASK_BOX_SLACK_PX).max(0.0),
                x_max: b.x_max + MASK_BOX_SLACK_PX,
                y_max: b.y_max + MASK_BOX_SLACK_PX,
            };
            file.masks[m].clipped_to(&slack)
        });
        match segmented.filter(|m| m.area() > 0) {
            Some(mask) => {
                obj.mask = Some(mask);
                obj.mask_source = MaskSource::Segmenter;
            }
            None => {
                obj.mask = Some(RegionMask::from_box(&obj.bbox, file.dims));
                obj.mask_source = MaskSource::BoxFallback;
            }
        }
    }
    Ok(objects)
}
