use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use gom_core::{rec_verdict, BoundingBox, SceneGraphDocument};
use serde::{Deserialize, Serialize};

#[derive(Debug, Deserialize)]
struct Prediction {
    item: String,
    predicted_id: String,
}

#[derive(Debug, Deserialize)]
struct GroundTruth {
    item: String,
    #[serde(rename = "box")]
    bbox: [f64; 4],
}

#[derive(Debug, Serialize)]
pub struct ItemReport {
    pub item: String,
    pub predicted_id: String,
    pub correct: bool,
    pub iou: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct RecReport {
    pub items: Vec<ItemReport>,
    pub correct: usize,
    pub total: usize,
    pub accuracy: f64,
    pub unknown_ids: usize,
}

fn json_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

/// `item=path`, or a bare path whose parent directory names the item.
fn graph_entry(entry: &str) -> Result<(String, PathBuf)> {
    if let Some((item, path)) = entry.split_once('=') {
        return Ok((item.to_string(), PathBuf::from(path)));
    }
    let path = PathBuf::from(entry);
    let item = path
        .parent()
        .and_then(|p| p.file_name())
        .map(|n| n.to_string_lossy().into_owned())
        .with_context(|| format!("cannot derive an item name from `{entry}`; use ITEM=PATH"))?;
    Ok((item, path))
}

pub fn evaluate(predictions: &Path, graphs: &[String], ground_truth: &Path) -> Result<RecReport> {
    let mut docs: BTreeMap<String, SceneGraphDocument> = BTreeMap::new();
    for entry in graphs {
        let (item, path) = graph_entry(entry)?;
        let text =
            fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
        let doc = serde_json::from_str(&text)
            .with_context(|| format!("scene graph {}", path.display()))?;
        if docs.insert(item.clone(), doc).is_some() {
            bail!("duplicate scene graph for item `{item}`");
        }
    }
    let mut gts: BTreeMap<String, BoundingBox> = BTreeMap::new();
    for g in json_lines::<GroundTruth>(ground_truth)? {
        let b = BoundingBox::from_array(g.bbox)
            .with_context(|| format!("ground truth box for `{}`", g.item))?;
        gts.insert(g.item, b);
    }

    let mut items = Vec::new();
    for p in json_lines::<Prediction>(predictions)? {
        let gt = gts
            .get(&p.item)
            .with_context(|| format!("no ground truth for item `{}`", p.item))?;
        let mut flags = Vec::new();
        let (correct, iou) = match docs.get(&p.item) {
            Some(doc) => {
                let v = rec_verdict(doc, &p.predicted_id, gt);
                if v.unknown_id {
                    flags.push("unknown_id".to_string());
                }
                (v.correct, v.iou)
            }
            None => {
                flags.push("missing_scene_graph".to_string());
                (false, None)
            }
        };
        items.push(ItemReport {
            item: p.item,
            predicted_id: p.predicted_id,
            correct,
            iou,
            flags,
        });
    }
    let total = items.len();
    let correct = items.iter().filter(|i| i.correct).count();
    let unknown_ids = items
        .iter()
        .filter(|i| i.flags.iter().any(|f| f == "unknown_id"))
        .count();
    Ok(RecReport {
        items,
        correct,
        total,
        accuracy: if total == 0 {
            0.0
        } else {
            correct as f64 / total as f64
        },
        unknown_ids,
    })
}
