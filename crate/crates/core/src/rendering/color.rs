use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Rgb(pub [u8; 3]);

impl Rgb {
    pub const WHITE: Rgb = Rgb([255, 255, 255]);
    pub const BLACK: Rgb = Rgb([0, 0, 0]);
    pub const DARK_GRAY: Rgb = Rgb([40, 40, 40]);
}

const GOLDEN_RATIO_CONJUGATE: f64 = 0.618_033_988_749_894_9;
const PALETTE_SLOTS: u64 = 4096;
const SATURATION: f64 = 0.85;
const VALUE: f64 = 0.95;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn hsv_to_rgb(h: f64, s: f64, v: f64) -> Rgb {
    let h6 = (h.rem_euclid(1.0)) * 6.0;
    let sector = h6.floor();
    let f = h6 - sector;
    let p = v * (1.0 - s);
    let q = v * (1.0 - s * f);
    let t = v * (1.0 - s * (1.0 - f));
    let (r, g, b) = match sector as u32 % 6 {
        0 => (v, t, p),
        1 => (q, v, p),
        2 => (p, v, t),
        3 => (p, q, v),
        4 => (t, p, v),
        _ => (v, p, q),
    };
    let q8 = |c: f64| (c * 255.0).round().clamp(0.0, 255.0) as u8;
    Rgb([q8(r), q8(g), q8(b)])
}

/// Stable per-class color: the label hash picks a slot on a golden-ratio
/// stepped hue wheel, offset by `palette_seed`.
pub fn class_color(class_label: &str, palette_seed: u64) -> Rgb {
    let slot = fnv1a64(class_label.as_bytes()) % PALETTE_SLOTS;
    let phase = (palette_seed % PALETTE_SLOTS) as f64 * GOLDEN_RATIO_CONJUGATE;
    let hue = (phase + slot as f64 * GOLDEN_RATIO_CONJUGATE).fract();
    hsv_to_rgb(hue, SATURATION, VALUE)
}

/// WCAG relative luminance of an sRGB color.
pub fn relative_luminance(c: Rgb) -> f64 {
    let lin = |v: u8| {
        let s = v as f64 / 255.0;
        if s <= 0.04045 {
            s / 12.92
        } else {
            ((s + 0.055) / 1.055).powf(2.4)
        }
    };
    0.2126 * lin(c.0[0]) + 0.7152 * lin(c.0[1]) + 0.0722 * lin(c.0[2])
}

pub fn contrast_ratio(a: Rgb, b: Rgb) -> f64 {
    let (la, lb) = (relative_luminance(a), relative_luminance(b));
    (la.max(lb) + 0.05) / (la.min(lb) + 0.05)
}

/// `(fill, font)` for an ID box drawn with the given border color.
pub fn contrast_colors(border: Rgb) -> (Rgb, Rgb) {
    if relative_luminance(border) > 0.5 {
        (Rgb::WHITE, Rgb::BLACK)
    } else {
        (Rgb::DARK_GRAY, Rgb::WHITE)
    }
}
