//! Scene-graph domain types: object instances, relations and the graph itself.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geometry::{BoundingBox, Point};
use crate::mask::RegionMask;

/// How an object's mark identifier is spoken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdStyle {
    #[default]
    Numeric,
    Textual,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarkId {
    pub numeric: u32,
    pub textual: String,
}

impl MarkId {
    pub fn new(numeric: u32, class_label: &str) -> Self {
        Self {
            numeric,
            textual: format!("{class_label}_{numeric}"),
        }
    }

    pub fn render(&self, style: IdStyle) -> String {
        match style {
            IdStyle::Numeric => self.numeric.to_string(),
            IdStyle::Textual => self.textual.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSource {
    Segmenter,
    BoxFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub class_label: String,
    pub confidence: f64,
    pub bbox: BoundingBox,
    pub mask: Option<RegionMask>,
    pub mask_source: MaskSource,
    pub mark_id: Option<MarkId>,
    /// Indices (into the detection file) of the detections fused into this object.
    pub members: Vec<usize>,
}

impl ObjectInstance {
    pub fn new(class_label: impl Into<String>, confidence: f64, bbox: BoundingBox) -> Self {
        Self {
            class_label: class_label.into(),
            confidence,
            bbox,
            mask: None,
            mask_source: MaskSource::BoxFallback,
            mark_id: None,
            members: Vec::new(),
        }
    }

    pub fn center(&self) -> Point {
        self.bbox.center()
    }

    /// Mask centroid for segmenter masks, box center otherwise.
    pub fn mark_anchor(&self) -> Point {
        match (&self.mask, self.mask_source) {
            (Some(m), MaskSource::Segmenter) => m.centroid().unwrap_or_else(|| self.center()),
            _ => self.center(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationGroup {
    Directional,
    Depth,
    Proximity,
}

/// The seven-label spatial ontology. Declaration order is the canonical
/// ontology order used for output ordering and tie-breaking.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationLabel {
    Above,
    Below,
    LeftOf,
    RightOf,
    InFrontOf,
    Behind,
    Near,
}

impl RelationLabel {
    pub const ALL: [RelationLabel; 7] = [
        RelationLabel::Above,
        RelationLabel::Below,
        RelationLabel::LeftOf,
        RelationLabel::RightOf,
        RelationLabel::InFrontOf,
        RelationLabel::Behind,
        RelationLabel::Near,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationLabel::Above => "above",
            RelationLabel::Below => "below",
            RelationLabel::LeftOf => "left_of",
            RelationLabel::RightOf => "right_of",
            RelationLabel::InFrontOf => "in_front_of",
            RelationLabel::Behind => "behind",
            RelationLabel::Near => "near",
        }
    }

    pub fn parse(s: &str) -> Option<RelationLabel> {
        Self::ALL.into_iter().find(|l| l.as_str() == s)
    }

    pub fn group(self) -> RelationGroup {
        match self {
            RelationLabel::Above
            | RelationLabel::Below
            | RelationLabel::LeftOf
            | RelationLabel::RightOf => RelationGroup::Directional,
            RelationLabel::InFrontOf | RelationLabel::Behind => RelationGroup::Depth,
            RelationLabel::Near => RelationGroup::Proximity,
        }
    }

    pub fn is_directional(self) -> bool {
        self.group() == RelationGroup::Directional
    }

    pub fn inverse(self) -> RelationLabel {
        match self {
            RelationLabel::Above => RelationLabel::Below,
            RelationLabel::Below => RelationLabel::Above,
            RelationLabel::LeftOf => RelationLabel::RightOf,
            RelationLabel::RightOf => RelationLabel::LeftOf,
            RelationLabel::InFrontOf => RelationLabel::Behind,
            RelationLabel::Behind => RelationLabel::InFrontOf,
            RelationLabel::Near => RelationLabel::Near,
        }
    }
}

impl fmt::Display for RelationLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Closeness qualifier, strongest first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modifier {
    Touching,
    VeryClose,
    Close,
}

impl Modifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::Touching => "touching",
            Modifier::VeryClose => "very_close",
            Modifier::Close => "close",
        }
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Directed edge: `head` is `label` `tail`.
#[derive(Debug, Clone, PartialEq)]
pub struct Relation {
    pub head: usize,
    pub tail: usize,
    pub label: RelationLabel,
    pub modifier: Option<Modifier>,
    /// Euclidean distance between box centers, in pixels.
    pub center_distance: f64,
    /// 0 when the relation matches the query, 1 otherwise. Set by filtering.
    pub relevance_rank: u8,
}

impl Relation {
    pub fn new(head: usize, tail: usize, label: RelationLabel, center_distance: f64) -> Self {
        Self {
            head,
            tail,
            label,
            modifier: None,
            center_distance,
            relevance_rank: 1,
        }
    }

    /// Label text including the modifier suffix, e.g. `left_of_touching`.
    pub fn label_text(&self) -> String {
        match self.modifier {
            Some(m) => format!("{}_{}", self.label, m),
            None => self.label.as_str().to_string(),
        }
    }

    pub fn unordered_pair(&self) -> (usize, usize) {
        (self.head.min(self.tail), self.head.max(self.tail))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SceneGraph {
    pub objects: Vec<ObjectInstance>,
    pub relations: Vec<Relation>,
}

impl SceneGraph {
    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn mark_text(&self, index: usize, style: IdStyle) -> String {
        match &self.objects[index].mark_id {
            Some(id) => id.render(style),
            None => (index + 1).to_string(),
        }
    }
}
