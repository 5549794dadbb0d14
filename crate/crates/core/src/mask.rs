//! Run-length encoded instance masks.
//!
//! Counts are row-major and alternate background/foreground, starting with a
//! (possibly empty) background run. Masks always cover the full image.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{BoundingBox, ImageDims, Point};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MaskError {
    #[error("rle counts sum to {sum}, expected {expected} ({width}x{height})")]
    CountMismatch {
        sum: u64,
        expected: u64,
        width: u32,
        height: u32,
    },
    #[error("mask has zero dimension {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionMask {
    pub width: u32,
    pub height: u32,
    pub rle: Vec<u32>,
}

impl RegionMask {
    pub fn new(width: u32, height: u32, rle: Vec<u32>) -> Result<Self, MaskError> {
        let mask = Self { width, height, rle };
        mask.validate()?;
        Ok(mask)
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        if self.width == 0 || self.height == 0 {
            return Err(MaskError::ZeroDimension {
                width: self.width,
                height: self.height,
            });
        }
        let sum: u64 = self.rle.iter().map(|&c| c as u64).sum();
        let expected = self.width as u64 * self.height as u64;
        if sum != expected {
            return Err(MaskError::CountMismatch {
                sum,
                expected,
                width: self.width,
                height: self.height,
            });
        }
        Ok(())
    }

    pub fn dims(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    /// Encode a row-major bitmap.
    pub fn from_bitmap(width: u32, height: u32, bits: &[bool]) -> Self {
        assert_eq!(bits.len(), width as usize * height as usize);
        let mut rle = Vec::new();
        let mut current = false;
        let mut run = 0u32;
        for &b in bits {
            if b != current {
                rle.push(run);
                run = 0;
                current = b;
            }
            run += 1;
        }
        rle.push(run);
        Self { width, height, rle }
    }

    /// Rectangular mask covering the pixels whose centers fall inside `b`.
    /// For integer boxes the foreground count equals the box area.
    pub fn from_box(b: &BoundingBox, dims: ImageDims) -> Self {
        let (x0, y0, x1, y1) = pixel_span(b, dims);
        let w = dims.width as usize;
        let total = dims.pixel_count();
        let mut rle = Vec::with_capacity(2 * (y1 - y0) + 2);
        if x0 >= x1 || y0 >= y1 {
            return Self {
                width: dims.width,
                height: dims.height,
                rle: vec![total as u32],
            };
        }
        let row_len = x1 - x0;
        let mut cursor = 0usize;
        for y in y0..y1 {
            let start = y * w + x0;
            rle.push((start - cursor) as u32);
            rle.push(row_len as u32);
            cursor = start + row_len;
        }
        rle.push((total - cursor) as u32);
        Self {
            width: dims.width,
            height: dims.height,
            rle,
        }
    }

    pub fn decode(&self) -> Vec<bool> {
        let mut out = vec![false; self.width as usize * self.height as usize];
        for (start, len) in self.foreground_runs() {
            out[start..start + len].fill(true);
        }
        out
    }

    /// `(start_index, length)` of every foreground run.
    pub fn foreground_runs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let mut cursor = 0usize;
        self.rle.iter().enumerate().filter_map(move |(i, &c)| {
            let start = cursor;
            cursor += c as usize;
            (i % 2 == 1 && c > 0).then_some((start, c as usize))
        })
    }

    /// Calls `f(y, x_start, x_end)` for every horizontal foreground span
    /// (end exclusive).
    pub fn for_each_span(&self, mut f: impl FnMut(usize, usize, usize)) {
        let w = self.width as usize;
        for (start, len) in self.foreground_runs() {
            let mut s = start;
            let end = start + len;
            while s < end {
                let y = s / w;
                let row_end = ((y + 1) * w).min(end);
                f(y, s - y * w, row_end - y * w);
                s = row_end;
            }
        }
    }

    pub fn area(&self) -> u64 {
        self.rle.iter().skip(1).step_by(2).map(|&c| c as u64).sum()
    }

    /// Mean of foreground pixel-center coordinates.
    pub fn centroid(&self) -> Option<Point> {
        let (mut sx, mut sy, mut n) = (0f64, 0f64, 0u64);
        self.for_each_span(|y, x0, x1| {
            let count = (x1 - x0) as u64;
            // Sum of (x + 0.5) for x in x0..x1.
            sx += (x0 + x1) as f64 / 2.0 * count as f64;
            sy += (y as f64 + 0.5) * count as f64;
            n += count;
        });
        (n > 0).then(|| Point::new(sx / n as f64, sy / n as f64))
    }

    /// Exclusive pixel bounds `(x0, y0, x1, y1)` of the foreground.
    pub fn bounding_rect(&self) -> Option<(usize, usize, usize, usize)> {
        let mut bounds: Option<(usize, usize, usize, usize)> = None;
        self.for_each_span(|y, x0, x1| {
            bounds = Some(match bounds {
                None => (x0, y, x1, y + 1),
                Some((a, b, c, _)) => (a.min(x0), b, c.max(x1), y + 1),
            });
        });
        bounds
    }

    /// Drop foreground pixels whose centers fall outside `b`.
    pub fn clipped_to(&self, b: &BoundingBox) -> RegionMask {
        let dims = ImageDims {
            width: self.width,
            height: self.height,
        };
        let (bx0, by0, bx1, by1) = pixel_span(b, dims);
        let mut bits = vec![false; dims.pixel_count()];
        let w = self.width as usize;
        self.for_each_span(|y, x0, x1| {
            if y < by0 || y >= by1 {
                return;
            }
            let (s, e) = (x0.max(bx0), x1.min(bx1));
            if s < e {
                bits[y * w + s..y * w + e].fill(true);
            }
        });
        RegionMask::from_bitmap(self.width, self.height, &bits)
    }

    /// Foreground bitmap of the window `[x0, x1) x [y0, y1)`, row-major.
    pub fn crop_bitmap(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Vec<bool> {
        let cw = x1.saturating_sub(x0);
        let ch = y1.saturating_sub(y0);
        let mut out = vec![false; cw * ch];
        self.for_each_span(|y, sx, ex| {
            if y < y0 || y >= y1 {
                return;
            }
            let (s, e) = (sx.max(x0), ex.min(x1));
            if s < e {
                let row = (y - y0) * cw;
                out[row + s - x0..row + e - x0].fill(true);
            }
        });
        out
    }
}

/// Pixel index span `[x0, x1) x [y0, y1)` of pixels whose centers lie in `b`.
pub(crate) fn pixel_span(b: &BoundingBox, dims: ImageDims) -> (usize, usize, usize, usize) {
    let clampx = |v: f64| (v.round().max(0.0) as usize).min(dims.width as usize);
    let clampy = |v: f64| (v.round().max(0.0) as usize).min(dims.height as usize);
    (
        clampx(b.x_min),
        clampy(b.y_min),
        clampx(b.x_max),
        clampy(b.y_max),
    )
}
