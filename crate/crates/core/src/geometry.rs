//! Planar geometry shared by every stage: boxes, points, image dimensions
//! and the reference frame in which distance thresholds are evaluated.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("invalid bounding box [{x_min}, {y_min}, {x_max}, {y_max}]: {reason}")]
    InvalidBox {
        x_min: f64,
        y_min: f64,
        x_max: f64,
        y_max: f64,
        reason: &'static str,
    },
    #[error("image dimensions must be positive, got {width}x{height}")]
    ZeroDimension { width: u32, height: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point::new((self.x + other.x) / 2.0, (self.y + other.y) / 2.0)
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }
}

/// Width and height of a raster, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self, GeometryError> {
        if width == 0 || height == 0 {
            return Err(GeometryError::ZeroDimension { width, height });
        }
        Ok(Self { width, height })
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn min_side(&self) -> u32 {
        self.width.min(self.height)
    }
}

/// Axis-aligned box in image pixels, origin top-left, y growing downward.
///
/// Construction through [`BoundingBox::new`] guarantees `x_min < x_max`,
/// `y_min < y_max` and finite non-negative coordinates, so every box has a
/// strictly positive area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, y_min: f64, x_max: f64, y_max: f64) -> Result<Self, GeometryError> {
        let err = |reason| GeometryError::InvalidBox {
            x_min,
            y_min,
            x_max,
            y_max,
            reason,
        };
        if ![x_min, y_min, x_max, y_max].iter().all(|v| v.is_finite()) {
            return Err(err("coordinates must be finite"));
        }
        if x_min < 0.0 || y_min < 0.0 {
            return Err(err("coordinates must be non-negative"));
        }
        if x_min >= x_max || y_min >= y_max {
            return Err(err("min must be strictly below max on both axes"));
        }
        Ok(Self {
            x_min,
            y_min,
            x_max,
            y_max,
        })
    }

    pub fn from_array(coords: [f64; 4]) -> Result<Self, GeometryError> {
        Self::new(coords[0], coords[1], coords[2], coords[3])
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.x_min, self.y_min, self.x_max, self.y_max]
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn center(&self) -> Point {
        box_center(self)
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn intersection_area(&self, other: &BoundingBox) -> f64 {
        let w = self.x_max.min(other.x_max) - self.x_min.max(other.x_min);
        let h = self.y_max.min(other.y_max) - self.y_min.max(other.y_min);
        if w <= 0.0 || h <= 0.0 {
            0.0
        } else {
            w * h
        }
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min.min(other.x_min),
            y_min: self.y_min.min(other.y_min),
            x_max: self.x_max.max(other.x_max),
            y_max: self.y_max.max(other.y_max),
        }
    }

    /// Separation between the two boxes along each axis, 0 where their
    /// projections overlap.
    pub fn axis_gaps(&self, other: &BoundingBox) -> (f64, f64) {
        let gx = (self.x_min - other.x_max)
            .max(other.x_min - self.x_max)
            .max(0.0);
        let gy = (self.y_min - other.y_max)
            .max(other.y_min - self.y_max)
            .max(0.0);
        (gx, gy)
    }

    /// Clamp to the image rectangle. Fails when nothing of the box remains.
    pub fn clamped_to(&self, dims: ImageDims) -> Result<BoundingBox, GeometryError> {
        let w = dims.width as f64;
        let h = dims.height as f64;
        BoundingBox::new(
            self.x_min.clamp(0.0, w),
            self.y_min.clamp(0.0, h),
            self.x_max.clamp(0.0, w),
            self.y_max.clamp(0.0, h),
        )
    }

    /// Uniformly scale all coordinates.
    pub fn scaled(&self, factor: f64) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min * factor,
            y_min: self.y_min * factor,
            x_max: self.x_max * factor,
            y_max: self.y_max * factor,
        }
    }
}

impl<'de> Deserialize<'de> for BoundingBox {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let coords = <[f64; 4]>::deserialize(deserializer)?;
        BoundingBox::from_array(coords).map_err(serde::de::Error::custom)
    }
}

/// Intersection over union. Always in `[0, 1]`; 0 for disjoint boxes.
pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    let inter = a.intersection_area(b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.area() + b.area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

pub fn box_center(b: &BoundingBox) -> Point {
    Point::new((b.x_min + b.x_max) / 2.0, (b.y_min + b.y_max) / 2.0)
}

/// Map a pixel position into the square reference frame of side `frame`.
pub fn to_reference_frame(p: Point, dims: ImageDims, frame: f64) -> Point {
    Point::new(
        p.x * frame / dims.width as f64,
        p.y * frame / dims.height as f64,
    )
}

pub fn from_reference_frame(p: Point, dims: ImageDims, frame: f64) -> Point {
    Point::new(
        p.x * dims.width as f64 / frame,
        p.y * dims.height as f64 / frame,
    )
}

/// Euclidean distance between the two box centers divided by the image diagonal.
pub fn normalized_center_distance(a: &BoundingBox, b: &BoundingBox, dims: ImageDims) -> f64 {
    a.center().distance(b.center()) / dims.diagonal()
}

/// Integer pixel rectangle used for mark collision tests. `w == 0 || h == 0`
/// denotes an empty rectangle that never collides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rect {
    pub x: i32,
    pub y: i32,
    pub w: i32,
    pub h: i32,
}

impl Rect {
    pub const EMPTY: Rect = Rect {
        x: 0,
        y: 0,
        w: 0,
        h: 0,
    };

    pub const fn new(x: i32, y: i32, w: i32, h: i32) -> Self {
        Self { x, y, w, h }
    }

    /// Rectangle of size `w`x`h` whose center is as close to `c` as the
    /// integer grid allows.
    pub fn centered_at(c: Point, w: i32, h: i32) -> Self {
        let x = (c.x - w as f64 / 2.0).round() as i32;
        let y = (c.y - h as f64 / 2.0).round() as i32;
        Self { x, y, w, h }
    }

    pub fn is_empty(&self) -> bool {
        self.w <= 0 || self.h <= 0
    }

    pub fn right(&self) -> i32 {
        self.x + self.w
    }

    pub fn bottom(&self) -> i32 {
        self.y + self.h
    }

    pub fn center(&self) -> Point {
        Point::new(
            self.x as f64 + self.w as f64 / 2.0,
            self.y as f64 + self.h as f64 / 2.0,
        )
    }

    /// Overlap extents on (x, y); both positive iff the rects intersect.
    pub fn overlap(&self, other: &Rect) -> (i32, i32) {
        let ox = self.right().min(other.right()) - self.x.max(other.x);
        let oy = self.bottom().min(other.bottom()) - self.y.max(other.y);
        (ox, oy)
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        if self.is_empty() || other.is_empty() {
            return false;
        }
        let (ox, oy) = self.overlap(other);
        ox > 0 && oy > 0
    }

    pub fn intersection_area(&self, other: &Rect) -> i64 {
        if !self.intersects(other) {
            return 0;
        }
        let (ox, oy) = self.overlap(other);
        ox as i64 * oy as i64
    }

    pub fn translated(&self, dx: i32, dy: i32) -> Rect {
        Rect::new(self.x + dx, self.y + dy, self.w, self.h)
    }

    /// Shift (without resizing) so the rect lies inside `[0, width) x [0, height)`.
    /// A rect larger than the bounds is pinned to the origin on that axis.
    pub fn clamped_within(&self, width: i32, height: i32) -> Rect {
        let x = self.x.min(width - self.w).max(0);
        let y = self.y.min(height - self.h).max(0);
        Rect::new(x, y, self.w, self.h)
    }

    /// Shift (without resizing) to lie inside `outer`; assumes it fits.
    pub fn clamped_within_rect(&self, outer: &Rect) -> Rect {
        let x = self.x.min(outer.right() - self.w).max(outer.x);
        let y = self.y.min(outer.bottom() - self.h).max(outer.y);
        Rect::new(x, y, self.w, self.h)
    }

    pub fn within(&self, width: i32, height: i32) -> bool {
        self.x >= 0 && self.y >= 0 && self.right() <= width && self.bottom() <= height
    }

    pub fn contains_rect(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.right() <= self.right()
            && other.bottom() <= self.bottom()
    }

    pub fn contains_point(&self, p: Point) -> bool {
        p.x > self.x as f64
            && p.x < self.right() as f64
            && p.y > self.y as f64
            && p.y < self.bottom() as f64
    }
}
