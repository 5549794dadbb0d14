//! Relative depth maps, higher = nearer to the camera, and their binary PGM
//! interchange form.

use thiserror::Error;

use crate::geometry::{ImageDims, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DepthError {
    #[error("malformed PGM header: {0}")]
    Header(String),
    #[error("PGM payload truncated: expected {expected} bytes, got {actual}")]
    Truncated { expected: usize, actual: usize },
    #[error("depth map is {actual_w}x{actual_h}, image is {expected_w}x{expected_h}")]
    DimensionMismatch {
        expected_w: u32,
        expected_h: u32,
        actual_w: u32,
        actual_h: u32,
    },
    #[error("depth value {value} at index {index} outside [0, 1]")]
    OutOfRange { index: usize, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    width: u32,
    height: u32,
    values: Vec<f64>,
}

impl DepthMap {
    pub fn new(width: u32, height: u32, values: Vec<f64>) -> Result<Self, DepthError> {
        let expected = width as usize * height as usize;
        if values.len() != expected || expected == 0 {
            return Err(DepthError::Truncated {
                expected,
                actual: values.len(),
            });
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(DepthError::OutOfRange { index, value });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn uniform(width: u32, height: u32, value: f64) -> Result<Self, DepthError> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> f64 {
        self.values[y as usize * self.width as usize + x as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, value: f64) {
        let w = self.width as usize;
        self.values[y as usize * w + x as usize] = value.clamp(0.0, 1.0);
    }

    pub fn ensure_dims(&self, dims: ImageDims) -> Result<(), DepthError> {
        if self.width != dims.width || self.height != dims.height {
            return Err(DepthError::DimensionMismatch {
                expected_w: dims.width,
                expected_h: dims.height,
                actual_w: self.width,
                actual_h: self.height,
            });
        }
        Ok(())
    }

    /// Median of the 3x3 window around the pixel containing `p`, restricted
    /// to pixels inside the map. Even-sized windows (borders) average the two
    /// middle values.
    pub fn sample_median3(&self, p: Point) -> f64 {
        let cx = (p.x.floor().max(0.0) as i64).min(self.width as i64 - 1);
        let cy = (p.y.floor().max(0.0) as i64).min(self.height as i64 - 1);
        let mut window = [0f64; 9];
        let mut n = 0;
        for y in cy - 1..=cy + 1 {
            for x in cx - 1..=cx + 1 {
                if x >= 0 && y >= 0 && x < self.width as i64 && y < self.height as i64 {
                    window[n] = self.get(x as u32, y as u32);
                    n += 1;
                }
            }
        }
        let window = &mut window[..n];
        window.sort_by(f64::total_cmp);
        if n % 2 == 1 {
            window[n / 2]
        } else {
            (window[n / 2 - 1] + window[n / 2]) / 2.0
        }
    }

    /// Parse a binary `P5` PGM. Values are divided by maxval.
    pub fn from_pgm(bytes: &[u8]) -> Result<Self, DepthError> {
        let mut pos = 0usize;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && (bytes[pos].is_ascii_whitespace() || bytes[pos] == b'#') {
                if bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                } else {
                    pos += 1;
                }
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(DepthError::Header("unexpected end of header".into()));
            }
            fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
        }
        if fields[0] != "P5" {
            return Err(DepthError::Header(format!(
                "magic {:?}, expected P5",
                fields[0]
            )));
        }
        let num = |s: &str, what: &str| {
            s.parse::<u32>()
                .map_err(|_| DepthError::Header(format!("{what} {s:?} is not a number")))
        };
        let width = num(&fields[1], "width")?;
        let height = num(&fields[2], "height")?;
        let maxval = num(&fields[3], "maxval")?;
        if width == 0 || height == 0 {
            return Err(DepthError::Header("zero dimension".into()));
        }
        if maxval == 0 || maxval > 65535 {
            return Err(DepthError::Header(format!("maxval {maxval} out of range")));
        }
        // Exactly one whitespace byte separates header and raster.
        pos += 1;
        let bpp = if maxval > 255 { 2 } else { 1 };
        let count = width as usize * height as usize;
        let payload = bytes.get(pos..).unwrap_or_default();
        if payload.len() < count * bpp {
            return Err(DepthError::Truncated {
                expected: count * bpp,
                actual: payload.len(),
            });
        }
        let max = maxval as f64;
        let values = if bpp == 2 {
            payload
                .chunks_exact(2)
                .take(count)
                .map(|c| (u16::from_be_bytes([c[0], c[1]]) as f64 / max).min(1.0))
                .collect()
        } else {
            payload[..count]
                .iter()
                .map(|&v| (v as f64 / max).min(1.0))
                .collect()
        };
        Self::new(width, height, values)
    }

    /// Encode as 16-bit `P5` PGM with maxval 65535.
    pub fn to_pgm16(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        out.reserve(self.values.len() * 2);
        for &v in &self.values {
            let q = (v * 65535.0).round() as u16;
            out.extend_from_slice(&q.to_be_bytes());
        }
        out
    }
}
