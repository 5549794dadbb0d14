//! Scene-graph rendering: per-class colors, mark layout, collision
//! resolution and rasterization.

pub mod color;
pub mod compose;
pub mod font;
pub mod layout;
pub mod raster;
pub mod resolve;

use std::io::Cursor;

use image::{ImageFormat, RgbImage};
use thiserror::Error;

pub use color::{class_color, contrast_colors, Rgb};
pub use compose::compose_image;
pub use font::FontAtlas;
pub use layout::{layout_marks, MarkKind, MarkOwner, MarkPlacement};
pub use resolve::{resolve_collisions, Layout};

use crate::config::PipelineConfig;
use crate::geometry::ImageDims;
use crate::types::SceneGraph;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("image {width}x{height} is too small to host marks")]
    ImageTooSmall { width: u32, height: u32 },
    #[error("bundled font has no glyph for {0:?}")]
    MissingGlyph(char),
    #[error("image decode failed: {0}")]
    Decode(String),
    #[error("image encode failed: {0}")]
    Encode(String),
}

pub struct Rendered {
    pub image: RgbImage,
    pub layout: Layout,
}

/// Lay out, resolve and paint `sg` over `image`.
pub fn render(
    image: &RgbImage,
    sg: &SceneGraph,
    cfg: &PipelineConfig,
    font: &FontAtlas,
) -> Result<Rendered, RenderError> {
    if sg.is_empty() {
        return Ok(Rendered {
            image: image.clone(),
            layout: Layout {
                placements: Vec::new(),
                resolved: true,
                iterations: 0,
            },
        });
    }
    let dims = ImageDims {
        width: image.width(),
        height: image.height(),
    };
    let placements = layout_marks(dims, sg, cfg)?;
    let layout = resolve_collisions(placements, dims, &cfg.style);
    let image = compose_image(image, sg, &layout, &cfg.style, font);
    Ok(Rendered { image, layout })
}

pub fn decode_image(bytes: &[u8]) -> Result<RgbImage, RenderError> {
    image::load_from_memory(bytes)
        .map(|img| img.to_rgb8())
        .map_err(|e| RenderError::Decode(e.to_string()))
}

pub fn encode_png(image: &RgbImage) -> Result<Vec<u8>, RenderError> {
    let mut buf = Cursor::new(Vec::new());
    image
        .write_to(&mut buf, ImageFormat::Png)
        .map_err(|e| RenderError::Encode(e.to_string()))?;
    Ok(buf.into_inner())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::BoundingBox;
    use crate::rendering::raster::blend_channel;
    use crate::types::{MarkId, ObjectInstance, Relation, RelationLabel};

    fn gradient(w: u32, h: u32) -> RgbImage {
        RgbImage::from_fn(w, h, |x, y| {
            image::Rgb([(x % 256) as u8, (y % 256) as u8, ((x + y) % 256) as u8])
        })
    }

    fn object(class: &str, b: [f64; 4], id: u32) -> ObjectInstance {
        let mut o = ObjectInstance::new(class, 0.9, BoundingBox::from_array(b).unwrap());
        o.mark_id = Some(MarkId::new(id, class));
        o
    }

    fn two_object_graph() -> SceneGraph {
        SceneGraph {
            objects: vec![
                object("chair", [40.0, 200.0, 200.0, 400.0], 1),
                object("table", [360.0, 180.0, 600.0, 420.0], 2),
            ],
            relations: vec![Relation::new(0, 1, RelationLabel::LeftOf, 300.0)],
        }
    }

    #[test]
    fn empty_graph_copies_input() {
        let img = gradient(128, 96);
        let font = FontAtlas::builtin().unwrap();
        let out = render(
            &img,
            &SceneGraph::default(),
            &PipelineConfig::default(),
            &font,
        )
        .unwrap();
        assert_eq!(out.image.as_raw(), img.as_raw());
        assert!(out.layout.placements.is_empty());
    }

    #[test]
    fn interior_pixel_is_alpha_blend() {
        let img = gradient(320, 240);
        let sg = SceneGraph {
            objects: vec![object("oven", [20.0, 20.0, 300.0, 220.0], 1)],
            relations: vec![],
        };
        let cfg = PipelineConfig::default();
        let font = FontAtlas::builtin().unwrap();
        let out = render(&img, &sg, &cfg, &font).unwrap();
        let c = class_color("oven", cfg.style.palette_seed);
        // Well inside the box, away from the contour and the centered ID box.
        for (x, y) in [(40u32, 40u32), (270, 200), (60, 180)] {
            let src = img.get_pixel(x, y).0;
            let got = out.image.get_pixel(x, y).0;
            for ch in 0..3 {
                let expected = src[ch] as f64 * 0.65 + c.0[ch] as f64 * 0.35;
                assert!((got[ch] as f64 - expected).abs() <= 1.0, "({x},{y}) ch{ch}");
                assert_eq!(got[ch], blend_channel(src[ch], c.0[ch], 0.35));
            }
        }
        // Pixel outside every mark is untouched.
        assert_eq!(out.image.get_pixel(5, 5), img.get_pixel(5, 5));
    }

    #[test]
    fn render_is_deterministic() {
        let img = gradient(640, 480);
        let sg = two_object_graph();
        let cfg = PipelineConfig::default();
        let font = FontAtlas::builtin().unwrap();
        let a = encode_png(&render(&img, &sg, &cfg, &font).unwrap().image).unwrap();
        let b = encode_png(&render(&img, &sg, &cfg, &font).unwrap().image).unwrap();
        assert_eq!(a, b);
        assert_eq!(decode_image(&a).unwrap().dimensions(), (640, 480));
    }

    #[test]
    fn id_box_uses_contrast_colors() {
        let img = RgbImage::new(640, 480);
        let sg = two_object_graph();
        let cfg = PipelineConfig::default();
        let font = FontAtlas::builtin().unwrap();
        let out = render(&img, &sg, &cfg, &font).unwrap();
        let id = out
            .layout
            .placements
            .iter()
            .find(|p| p.kind == MarkKind::IdBox)
            .unwrap();
        let (fill, _) = contrast_colors(id.color);
        let inset = cfg.style.border_width_px + 1;
        let px = out
            .image
            .get_pixel(id.rect.x as u32 + inset, id.rect.y as u32 + inset);
        assert_eq!(px.0, fill.0);
        let border = out.image.get_pixel(id.rect.x as u32, id.rect.y as u32);
        assert_eq!(border.0, id.color.0);
    }

    #[test]
    fn layout_is_collision_free() {
        let sg = two_object_graph();
        let dims = ImageDims::new(640, 480).unwrap();
        let cfg = PipelineConfig::default();
        let layout = resolve_collisions(layout_marks(dims, &sg, &cfg).unwrap(), dims, &cfg.style);
        assert!(layout.resolved);
        let rects: Vec<_> = layout.collision_rects().collect();
        for (i, a) in rects.iter().enumerate() {
            assert!(a.within(640, 480));
            for b in &rects[i + 1..] {
                assert_eq!(a.intersection_area(b), 0);
            }
        }
    }
}
