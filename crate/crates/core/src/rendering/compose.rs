//! Paint resolved marks onto a copy of the source image.

use image::RgbImage;

use super::color::{contrast_colors, Rgb};
use super::font::FontAtlas;
use super::layout::{LabelMetrics, MarkKind, MarkOwner, MarkPlacement};
use super::raster::Canvas;
use super::resolve::Layout;
use crate::config::RenderStyle;
use crate::geometry::{ImageDims, Point};
use crate::mask::RegionMask;
use crate::types::SceneGraph;

const GUIDE_DASH_PX: f64 = 6.0;
const GUIDE_GAP_PX: f64 = 4.0;

/// Points along the quadratic curve `path = [start, control, end]`.
fn sample_quadratic(path: &[Point]) -> Vec<Point> {
    let [p0, p1, p2] = [path[0], path[1], path[2]];
    let approx_len = p0.distance(p1) + p1.distance(p2);
    let n = ((approx_len / 6.0).ceil() as usize).clamp(4, 64);
    (0..=n)
        .map(|i| {
            let t = i as f64 / n as f64;
            let a = p0.lerp(p1, t);
            let b = p1.lerp(p2, t);
            a.lerp(b, t)
        })
        .collect()
}

fn draw_arrow(canvas: &mut Canvas, path: &[Point], width: u32, color: Rgb) {
    if path.len() < 3 {
        return;
    }
    let tip = path[2];
    let tangent = Point::new(tip.x - path[1].x, tip.y - path[1].y);
    let len = tangent.x.hypot(tangent.y);
    let head = 4.0 * width as f64 + 4.0;
    let pts = sample_quadratic(path);
    if len < 1e-9 {
        canvas.polyline(&pts, width, color);
        return;
    }
    let u = Point::new(tangent.x / len, tangent.y / len);
    // Stop the shaft under the arrowhead so the tip stays sharp.
    let base = Point::new(tip.x - u.x * head, tip.y - u.y * head);
    let shaft: Vec<Point> = pts
        .iter()
        .copied()
        .take_while(|p| p.distance(tip) > head * 0.5)
        .chain(std::iter::once(base))
        .collect();
    canvas.polyline(&shaft, width, color);
    let half = head * 0.5;
    let left = Point::new(base.x - u.y * half, base.y + u.x * half);
    let right = Point::new(base.x + u.y * half, base.y - u.x * half);
    canvas.fill_triangle(tip, left, right, color);
}

fn draw_box(
    canvas: &mut Canvas,
    font: &FontAtlas,
    m: &MarkPlacement,
    metrics: &LabelMetrics,
    fill: Rgb,
    ink: Rgb,
) {
    canvas.fill_rect(m.rect, fill);
    canvas.stroke_rect(m.rect, metrics.border as i32, m.color);
    if let Some(text) = &m.text {
        let inset = metrics.inset() as i32;
        canvas.text(
            font,
            m.rect.x + inset,
            m.rect.y + inset,
            text,
            metrics.font_px,
            ink,
        );
    }
}

/// Draw `layout` over `image`. An empty scene graph yields an exact copy.
pub fn compose_image(
    image: &RgbImage,
    sg: &SceneGraph,
    layout: &Layout,
    style: &RenderStyle,
    font: &FontAtlas,
) -> RgbImage {
    let mut out = image.clone();
    if sg.is_empty() {
        return out;
    }
    let dims = ImageDims {
        width: image.width(),
        height: image.height(),
    };
    let metrics = LabelMetrics::new(dims, style);
    let of_kind = |k: MarkKind| layout.placements.iter().filter(move |p| p.kind == k);
    let masks: Vec<(RegionMask, Rgb)> = of_kind(MarkKind::Mask)
        .filter_map(|m| match m.owner {
            MarkOwner::Object(i) => sg.objects.get(i).map(|o| {
                let mask = o
                    .mask
                    .clone()
                    .unwrap_or_else(|| RegionMask::from_box(&o.bbox, dims));
                (mask, m.color)
            }),
            MarkOwner::Relation(_) => None,
        })
        .collect();

    let mut canvas = Canvas::new(&mut out);
    for (mask, color) in &masks {
        canvas.blend_mask(mask, *color, style.mask_alpha);
    }
    for (mask, color) in &masks {
        canvas.mask_contour(mask, style.border_width_px, *color);
    }
    for m in of_kind(MarkKind::Arrow) {
        draw_arrow(&mut canvas, &m.path, style.arrow_width_px, m.color);
    }
    for m in of_kind(MarkKind::DashedGuide) {
        if let [a, b] = m.path[..] {
            canvas.dashed_line(a, b, 1, GUIDE_DASH_PX, GUIDE_GAP_PX, m.color);
        }
    }
    for m in of_kind(MarkKind::EdgeLabel) {
        draw_box(&mut canvas, font, m, &metrics, Rgb::WHITE, Rgb::BLACK);
    }
    for m in of_kind(MarkKind::IdBox) {
        let (fill, ink) = contrast_colors(m.color);
        draw_box(&mut canvas, font, m, &metrics, fill, ink);
    }
    out
}
