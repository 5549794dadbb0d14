//! Integer raster primitives over an RGB8 buffer. All operations are
//! deterministic: coordinates are rounded once and blending is rounded
//! per channel.

use image::RgbImage;

use super::color::Rgb;
use super::font::FontAtlas;
use crate::geometry::{Point, Rect};
use crate::mask::RegionMask;

pub struct Canvas<'a> {
    img: &'a mut RgbImage,
    w: i32,
    h: i32,
}

pub fn blend_channel(src: u8, color: u8, alpha: f64) -> u8 {
    (src as f64 * (1.0 - alpha) + color as f64 * alpha)
        .round()
        .clamp(0.0, 255.0) as u8
}

impl<'a> Canvas<'a> {
    pub fn new(img: &'a mut RgbImage) -> Self {
        let (w, h) = img.dimensions();
        Self {
            img,
            w: w as i32,
            h: h as i32,
        }
    }

    #[inline]
    pub fn put(&mut self, x: i32, y: i32, c: Rgb) {
        if x >= 0 && y >= 0 && x < self.w && y < self.h {
            self.img.put_pixel(x as u32, y as u32, image::Rgb(c.0));
        }
    }

    pub fn fill_rect(&mut self, r: Rect, c: Rgb) {
        let x0 = r.x.max(0);
        let y0 = r.y.max(0);
        let x1 = r.right().min(self.w);
        let y1 = r.bottom().min(self.h);
        for y in y0..y1 {
            for x in x0..x1 {
                self.img.put_pixel(x as u32, y as u32, image::Rgb(c.0));
            }
        }
    }

    /// Border drawn inside `r`.
    pub fn stroke_rect(&mut self, r: Rect, width: i32, c: Rgb) {
        let width = width.min(r.w / 2).min(r.h / 2).max(1);
        self.fill_rect(Rect::new(r.x, r.y, r.w, width), c);
        self.fill_rect(Rect::new(r.x, r.bottom() - width, r.w, width), c);
        self.fill_rect(Rect::new(r.x, r.y, width, r.h), c);
        self.fill_rect(Rect::new(r.right() - width, r.y, width, r.h), c);
    }

    /// Alpha-blend `c` over every foreground pixel of `mask`.
    pub fn blend_mask(&mut self, mask: &RegionMask, c: Rgb, alpha: f64) {
        let w = self.w as usize;
        let h = self.h as usize;
        mask.for_each_span(|y, x0, x1| {
            if y >= h {
                return;
            }
            for x in x0..x1.min(w) {
                let p = self.img.get_pixel_mut(x as u32, y as u32);
                for ch in 0..3 {
                    p.0[ch] = blend_channel(p.0[ch], c.0[ch], alpha);
                }
            }
        });
    }

    /// Paint foreground pixels of `mask` lying within `width` pixels
    /// (Chebyshev) of the background.
    pub fn mask_contour(&mut self, mask: &RegionMask, width: u32, c: Rgb) {
        let Some((bx0, by0, bx1, by1)) = mask.bounding_rect() else {
            return;
        };
        let r = width as usize;
        // Pad the window so everything outside it is background.
        let x0 = bx0.saturating_sub(r + 1);
        let y0 = by0.saturating_sub(r + 1);
        let x1 = (bx1 + r + 1).min(mask.width as usize);
        let y1 = (by1 + r + 1).min(mask.height as usize);
        let cw = x1 - x0;
        let ch = y1 - y0;
        let bits = mask.crop_bitmap(x0, y0, x1, y1);
        // Window pixels closer than `r` to its edge never erode, so mask
        // pixels at the image border count as contour.
        let eroded_rows = erode_1d_rows(&bits, cw, ch, r);
        let eroded = erode_1d_cols(&eroded_rows, cw, ch, r);
        for y in 0..ch {
            for x in 0..cw {
                let i = y * cw + x;
                if bits[i] && !eroded[i] {
                    self.put((x0 + x) as i32, (y0 + y) as i32, c);
                }
            }
        }
    }

    /// Square brush of side `width` stamped along the segment.
    pub fn line(&mut self, a: Point, b: Point, width: u32, c: Rgb) {
        let (mut x0, mut y0) = (a.x.round() as i32, a.y.round() as i32);
        let (x1, y1) = (b.x.round() as i32, b.y.round() as i32);
        let dx = (x1 - x0).abs();
        let dy = -(y1 - y0).abs();
        let sx = if x0 < x1 { 1 } else { -1 };
        let sy = if y0 < y1 { 1 } else { -1 };
        let mut err = dx + dy;
        loop {
            self.stamp(x0, y0, width, c);
            if x0 == x1 && y0 == y1 {
                break;
            }
            let e2 = 2 * err;
            if e2 >= dy {
                err += dy;
                x0 += sx;
            }
            if e2 <= dx {
                err += dx;
                y0 += sy;
            }
        }
    }

    fn stamp(&mut self, x: i32, y: i32, width: u32, c: Rgb) {
        let w = width.max(1) as i32;
        let off = (w - 1) / 2;
        for yy in 0..w {
            for xx in 0..w {
                self.put(x - off + xx, y - off + yy, c);
            }
        }
    }

    pub fn polyline(&mut self, pts: &[Point], width: u32, c: Rgb) {
        for pair in pts.windows(2) {
            self.line(pair[0], pair[1], width, c);
        }
    }

    /// Alternating `on`/`off` pixel runs along the segment.
    pub fn dashed_line(&mut self, a: Point, b: Point, width: u32, on: f64, off: f64, c: Rgb) {
        let len = a.distance(b);
        if len < 1e-9 {
            return;
        }
        let mut s = 0.0;
        while s < len {
            let e = (s + on).min(len);
            self.line(a.lerp(b, s / len), a.lerp(b, e / len), width, c);
            s += on + off;
        }
    }

    pub fn fill_triangle(&mut self, a: Point, b: Point, c: Point, color: Rgb) {
        let min_x = a.x.min(b.x).min(c.x).floor().max(0.0) as i32;
        let max_x = (a.x.max(b.x).max(c.x).ceil() as i32).min(self.w - 1);
        let min_y = a.y.min(b.y).min(c.y).floor().max(0.0) as i32;
        let max_y = (a.y.max(b.y).max(c.y).ceil() as i32).min(self.h - 1);
        let edge =
            |p: Point, q: Point, r: Point| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
        let area = edge(a, b, c);
        if area.abs() < 1e-12 {
            return;
        }
        for y in min_y..=max_y {
            for x in min_x..=max_x {
                let p = Point::new(x as f64 + 0.5, y as f64 + 0.5);
                let w0 = edge(b, c, p) / area;
                let w1 = edge(c, a, p) / area;
                let w2 = edge(a, b, p) / area;
                if w0 >= 0.0 && w1 >= 0.0 && w2 >= 0.0 {
                    self.put(x, y, color);
                }
            }
        }
    }

    pub fn text(&mut self, font: &FontAtlas, x: i32, y: i32, text: &str, px: u32, c: Rgb) {
        for (i, ch) in text.chars().enumerate() {
            let cx = x + (i as u32 * px) as i32;
            for gy in 0..px {
                for gx in 0..px {
                    if font.ink(ch, px, gx, gy) {
                        self.put(cx + gx as i32, y + gy as i32, c);
                    }
                }
            }
        }
    }
}

/// `out[i]` is set iff every pixel within `r` along the row is set.
fn erode_1d_rows(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    let mut prefix = vec![0u32; w + 1];
    for y in 0..h {
        let row = &bits[y * w..(y + 1) * w];
        for x in 0..w {
            prefix[x + 1] = prefix[x] + row[x] as u32;
        }
        for x in 0..w {
            if x < r || x + r >= w {
                continue;
            }
            let count = prefix[x + r + 1] - prefix[x - r];
            out[y * w + x] = count as usize == 2 * r + 1;
        }
    }
    out
}

fn erode_1d_cols(bits: &[bool], w: usize, h: usize, r: usize) -> Vec<bool> {
    let mut out = vec![false; bits.len()];
    let mut prefix = vec![0u32; h + 1];
    for x in 0..w {
        for y in 0..h {
            prefix[y + 1] = prefix[y] + bits[y * w + x] as u32;
        }
        for y in 0..h {
            if y < r || y + r >= h {
                continue;
            }
            let count = prefix[y + r + 1] - prefix[y - r];
            out[y * w + x] = count as usize == 2 * r + 1;
        }
    }
    out
}
