//! Initial mark placement.
//!
//! Edge labels go first at the midpoint between head and tail centers, then
//! ID boxes at region centroids (inside the box when they fit, otherwise at
//! the nearest free exterior spot), then curved head-to-tail arrows whose
//! bend grows for arrows leaving the same object in similar directions.

use serde::{Deserialize, Serialize};

use super::color::{class_color, Rgb};
use super::font::FontAtlas;
use super::RenderError;
use crate::config::{PipelineConfig, RenderStyle};
use crate::geometry::{ImageDims, Point, Rect};
use crate::types::SceneGraph;

/// Smallest image side that can host marks.
pub const MIN_RENDER_SIDE: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkKind {
    Mask,
    IdBox,
    Arrow,
    EdgeLabel,
    DashedGuide,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MarkOwner {
    Object(usize),
    Relation(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarkPlacement {
    pub kind: MarkKind,
    /// Collision rectangle; empty for masks, arrows and guides.
    pub rect: Rect,
    pub anchor: Point,
    pub owner: MarkOwner,
    pub color: Rgb,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    /// Arrow: `[start, control, end]` of a quadratic curve. Guide: `[from, to]`.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub path: Vec<Point>,
}

impl MarkPlacement {
    pub fn has_rect(&self) -> bool {
        !self.rect.is_empty()
    }
}

/// Pixel geometry derived from the style for one image.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LabelMetrics {
    pub font_px: u32,
    pub padding: u32,
    pub border: u32,
}

impl LabelMetrics {
    pub fn new(dims: ImageDims, style: &RenderStyle) -> Self {
        Self {
            font_px: style.font_px(dims.width, dims.height),
            padding: style.label_padding_px,
            border: style.border_width_px,
        }
    }

    pub fn inset(&self) -> u32 {
        self.padding + self.border
    }

    /// Box size for `text`, truncating the text so the box fits `max_w`.
    pub fn fit(&self, text: &str, max_w: u32) -> (String, i32, i32) {
        let chrome = 2 * self.inset();
        let max_chars = (max_w.saturating_sub(chrome) / self.font_px).max(1) as usize;
        let text: String = text.chars().take(max_chars).collect();
        let (tw, th) = FontAtlas::measure(&text, self.font_px);
        (text, (tw + chrome) as i32, (th + chrome) as i32)
    }
}

fn clamp_into(r: Rect, dims: ImageDims) -> Rect {
    r.clamped_within(dims.width as i32, dims.height as i32)
}

/// Integer rectangle enclosing a box.
fn box_rect(b: &crate::geometry::BoundingBox) -> Rect {
    let x0 = b.x_min.floor() as i32;
    let y0 = b.y_min.floor() as i32;
    let x1 = b.x_max.ceil() as i32;
    let y1 = b.y_max.ceil() as i32;
    Rect::new(x0, y0, x1 - x0, y1 - y0)
}

/// Parameter `t` where the ray `origin + t*dir` leaves the box.
fn ray_exit(b: &crate::geometry::BoundingBox, origin: Point, dir: Point) -> f64 {
    let axis = |o: f64, d: f64, lo: f64, hi: f64| {
        if d > 1e-12 {
            (hi - o) / d
        } else if d < -1e-12 {
            (lo - o) / d
        } else {
            f64::INFINITY
        }
    };
    axis(origin.x, dir.x, b.x_min, b.x_max)
        .min(axis(origin.y, dir.y, b.y_min, b.y_max))
        .max(0.0)
}

fn angle_between(a: Point, b: Point) -> f64 {
    let d = (a.y.atan2(a.x) - b.y.atan2(b.x)).abs();
    let d = d % std::f64::consts::TAU;
    d.min(std::f64::consts::TAU - d).to_degrees()
}

/// Place every mark for `sg`. Masks come first in the list, then edge
/// labels, ID boxes and arrows; dashed guides are added by the resolver.
pub fn layout_marks(
    dims: ImageDims,
    sg: &SceneGraph,
    cfg: &PipelineConfig,
) -> Result<Vec<MarkPlacement>, RenderError> {
    if dims.min_side() < MIN_RENDER_SIDE {
        return Err(RenderError::ImageTooSmall {
            width: dims.width,
            height: dims.height,
        });
    }
    let style = &cfg.style;
    let metrics = LabelMetrics::new(dims, style);
    let colors: Vec<Rgb> = sg
        .objects
        .iter()
        .map(|o| class_color(&o.class_label, style.palette_seed))
        .collect();
    let mut out = Vec::new();

    for (i, obj) in sg.objects.iter().enumerate() {
        out.push(MarkPlacement {
            kind: MarkKind::Mask,
            rect: Rect::EMPTY,
            anchor: obj.mark_anchor(),
            owner: MarkOwner::Object(i),
            color: colors[i],
            text: None,
            path: Vec::new(),
        });
    }

    let mut occupied: Vec<Rect> = Vec::new();
    if cfg.render_relation_labels {
        for (ri, rel) in sg.relations.iter().enumerate() {
            let mid = sg.objects[rel.head]
                .center()
                .midpoint(sg.objects[rel.tail].center());
            let (text, w, h) = metrics.fit(&rel.label_text(), dims.width);
            let rect = clamp_into(Rect::centered_at(mid, w, h), dims);
            occupied.push(rect);
            out.push(MarkPlacement {
                kind: MarkKind::EdgeLabel,
                rect,
                anchor: mid,
                owner: MarkOwner::Relation(ri),
                color: colors[rel.head],
                text: Some(text),
                path: Vec::new(),
            });
        }
    }

    let mut id_heights = vec![0i32; sg.objects.len()];
    for (i, obj) in sg.objects.iter().enumerate() {
        let (text, w, h) = metrics.fit(&sg.mark_text(i, cfg.id_style), dims.width);
        id_heights[i] = h;
        let anchor = obj.mark_anchor();
        let inside = box_rect(&obj.bbox);
        let centered = Rect::centered_at(anchor, w, h);
        let rect = if w <= inside.w && h <= inside.h {
            clamp_into(centered.clamped_within_rect(&inside), dims)
        } else {
            exterior_slot(
                &inside,
                anchor,
                w,
                h,
                &occupied,
                dims,
                style.resolver_step_px as i32,
            )
        };
        occupied.push(rect);
        out.push(MarkPlacement {
            kind: MarkKind::IdBox,
            rect,
            anchor,
            owner: MarkOwner::Object(i),
            color: colors[i],
            text: Some(text),
            path: Vec::new(),
        });
    }

    // Per head: chord directions of the arrows placed so far.
    let mut chords: Vec<Vec<Point>> = vec![Vec::new(); sg.objects.len()];
    for (ri, rel) in sg.relations.iter().enumerate() {
        let head = &sg.objects[rel.head];
        let tail = &sg.objects[rel.tail];
        let ch = head.center();
        let ct = tail.center();
        let chord = Point::new(ct.x - ch.x, ct.y - ch.y);
        let len = chord.x.hypot(chord.y);
        let mut path = Vec::new();
        if len > 1e-9 {
            let u = Point::new(chord.x / len, chord.y / len);
            let similar = chords[rel.head]
                .iter()
                .filter(|c| angle_between(**c, chord) < style.similar_direction_deg)
                .count();
            chords[rel.head].push(chord);
            let bend = style.arrow_base_bend_px + style.arrow_bend_step_px * similar as f64;

            let t_start = ray_exit(&head.bbox, ch, u);
            let t_end = len - ray_exit(&tail.bbox, ct, Point::new(-u.x, -u.y));
            let (mut s, mut e) = if t_end > t_start {
                (t_start, t_end)
            } else {
                // Overlapping boxes: no clear boundary crossing along the chord.
                (len * 0.35, len * 0.65)
            };
            let half_extent = id_heights[rel.head].max(id_heights[rel.tail]) as f64 / 2.0;
            let shorten =
                (half_extent + style.arrow_endpoint_gap_px).min(((e - s) - 4.0).max(0.0) / 2.0);
            s += shorten;
            e -= shorten;
            let start = Point::new(ch.x + u.x * s, ch.y + u.y * s);
            let end = Point::new(ch.x + u.x * e, ch.y + u.y * e);
            let mid = start.midpoint(end);
            let control = Point::new(mid.x - u.y * bend, mid.y + u.x * bend);
            path = vec![start, control, end];
        }
        out.push(MarkPlacement {
            kind: MarkKind::Arrow,
            rect: Rect::EMPTY,
            anchor: ch.midpoint(ct),
            owner: MarkOwner::Relation(ri),
            color: colors[rel.head],
            text: None,
            path,
        });
    }

    Ok(out)
}

/// Nearest position just outside `inside` that is free and in bounds,
/// stepping outward by `step`. Falls back to directly above, clamped.
fn exterior_slot(
    inside: &Rect,
    anchor: Point,
    w: i32,
    h: i32,
    occupied: &[Rect],
    dims: ImageDims,
    step: i32,
) -> Rect {
    let cx = (anchor.x - w as f64 / 2.0).round() as i32;
    let cy = (anchor.y - h as f64 / 2.0).round() as i32;
    let max_rings = (dims.width.max(dims.height) as i32 / step.max(1)).min(128);
    let mut candidates = Vec::with_capacity(4 * max_rings as usize);
    for ring in 0..max_rings {
        let off = ring * step;
        candidates.push(Rect::new(cx, inside.y - h - off, w, h));
        candidates.push(Rect::new(cx, inside.bottom() + off, w, h));
        candidates.push(Rect::new(inside.x - w - off, cy, w, h));
        candidates.push(Rect::new(inside.right() + off, cy, w, h));
    }
    let dist = |r: &Rect| {
        let c = r.center();
        (c.x - anchor.x).powi(2) + (c.y - anchor.y).powi(2)
    };
    let mut best: Option<(f64, Rect)> = None;
    for r in candidates {
        if !r.within(dims.width as i32, dims.height as i32)
            || occupied.iter().any(|o| o.intersects(&r))
        {
            continue;
        }
        let d = dist(&r);
        if best.is_none_or(|(bd, _)| d < bd) {
            best = Some((d, r));
        }
    }
    best.map(|(_, r)| r)
        .unwrap_or_else(|| clamp_into(Rect::new(cx, inside.y - h, w, h), dims))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::types::{MarkId, ObjectInstance, Relation, RelationLabel};

    fn object(class: &str, b: [f64; 4], id: u32) -> ObjectInstance {
        let mut o = ObjectInstance::new(class, 0.9, BoundingBox::from_array(b).unwrap());
        o.mark_id = Some(MarkId::new(id, class));
        o
    }

    fn dims() -> ImageDims {
        ImageDims::new(640, 480).unwrap()
    }

    #[test]
    fn rejects_tiny_image() {
        let sg = SceneGraph::default();
        let err = layout_marks(
            ImageDims::new(63, 200).unwrap(),
            &sg,
            &PipelineConfig::default(),
        );
        assert!(matches!(err, Err(RenderError::ImageTooSmall { .. })));
    }

    #[test]
    fn id_box_inside_large_object() {
        let sg = SceneGraph {
            objects: vec![object("oven", [100.0, 100.0, 300.0, 260.0], 1)],
            relations: vec![],
        };
        let marks = layout_marks(dims(), &sg, &PipelineConfig::default()).unwrap();
        let id = marks.iter().find(|m| m.kind == MarkKind::IdBox).unwrap();
        assert!(box_rect(&sg.objects[0].bbox).contains_rect(&id.rect));
        let c = id.rect.center();
        assert!((c.x - 200.0).abs() <= 0.5 && (c.y - 180.0).abs() <= 0.5);
        assert_eq!(id.text.as_deref(), Some("1"));
    }

    #[test]
    fn id_box_moves_outside_small_object() {
        let mut cfg = PipelineConfig::default();
        cfg.id_style = crate::types::IdStyle::Textual;
        let sg = SceneGraph {
            objects: vec![object("cup", [300.0, 200.0, 320.0, 215.0], 2)],
            relations: vec![],
        };
        let marks = layout_marks(dims(), &sg, &cfg).unwrap();
        let id = marks.iter().find(|m| m.kind == MarkKind::IdBox).unwrap();
        assert_eq!(id.text.as_deref(), Some("cup_2"));
        assert!(!id.rect.intersects(&box_rect(&sg.objects[0].bbox)));
        assert!(id.rect.within(640, 480));
    }

    #[test]
    fn edge_label_at_center_midpoint() {
        let sg = SceneGraph {
            objects: vec![
                object("lamp", [100.0, 40.0, 140.0, 80.0], 1),
                object("chair", [300.0, 300.0, 400.0, 420.0], 2),
            ],
            relations: vec![Relation::new(0, 1, RelationLabel::Above, 100.0)],
        };
        let marks = layout_marks(dims(), &sg, &PipelineConfig::default()).unwrap();
        let label = marks
            .iter()
            .find(|m| m.kind == MarkKind::EdgeLabel)
            .unwrap();
        assert_eq!(
            label.anchor,
            Point::new((120.0 + 350.0) / 2.0, (60.0 + 360.0) / 2.0)
        );
        assert_eq!(label.text.as_deref(), Some("above"));

        let mut no_labels = PipelineConfig::default();
        no_labels.render_relation_labels = false;
        let marks = layout_marks(dims(), &sg, &no_labels).unwrap();
        assert!(marks.iter().all(|m| m.kind != MarkKind::EdgeLabel));
    }

    #[test]
    fn similar_arrows_bend_progressively() {
        // Tails at 0 and 10 degrees from the head.
        let c = Point::new(100.0, 240.0);
        let at = |deg: f64, r: f64| {
            let t = deg.to_radians();
            Point::new(c.x + r * t.cos(), c.y + r * t.sin())
        };
        let p1 = at(0.0, 300.0);
        let p2 = at(10.0, 300.0);
        let sq = |p: Point| [p.x - 10.0, p.y - 10.0, p.x + 10.0, p.y + 10.0];
        let sg = SceneGraph {
            objects: vec![
                object("a", [c.x - 10.0, c.y - 10.0, c.x + 10.0, c.y + 10.0], 1),
                object("b", sq(p1), 2),
                object("c", sq(p2), 3),
            ],
            relations: vec![
                Relation::new(0, 1, RelationLabel::LeftOf, 300.0),
                Relation::new(0, 2, RelationLabel::LeftOf, 300.0),
            ],
        };
        let cfg = PipelineConfig::default();
        let marks = layout_marks(dims(), &sg, &cfg).unwrap();
        let arrows: Vec<&MarkPlacement> =
            marks.iter().filter(|m| m.kind == MarkKind::Arrow).collect();
        let bend = |m: &MarkPlacement| {
            let mid = m.path[0].midpoint(m.path[2]);
            mid.distance(m.path[1])
        };
        assert!((bend(arrows[0]) - cfg.style.arrow_base_bend_px).abs() < 1e-9);
        assert!((bend(arrows[1]) - bend(arrows[0]) - 12.0).abs() < 1e-9);
    }

    #[test]
    fn arrow_endpoints_outside_boxes() {
        let sg = SceneGraph {
            objects: vec![
                object("a", [50.0, 50.0, 150.0, 150.0], 1),
                object("b", [400.0, 300.0, 500.0, 400.0], 2),
            ],
            relations: vec![Relation::new(0, 1, RelationLabel::LeftOf, 100.0)],
        };
        let marks = layout_marks(dims(), &sg, &PipelineConfig::default()).unwrap();
        let arrow = marks.iter().find(|m| m.kind == MarkKind::Arrow).unwrap();
        for p in [arrow.path[0], arrow.path[2]] {
            for o in &sg.objects {
                let b = &o.bbox;
                let strictly_inside =
                    p.x > b.x_min && p.x < b.x_max && p.y > b.y_min && p.y < b.y_max;
                assert!(!strictly_inside);
            }
        }
    }
}
