//! Synthetic fixtures shared by the benchmarks.

use std::collections::BTreeMap;

use gom_core::{BoundingBox, DepthMap, DetectionFile, ImageDims, RawDetection, RegionMask};
use image::{Rgb, RgbImage};

const CLASSES: [&str; 20] = [
    "clock",
    "chair",
    "couch",
    "potted plant",
    "bed",
    "dining table",
    "tv",
    "laptop",
    "mouse",
    "remote",
    "keyboard",
    "cell phone",
    "microwave",
    "oven",
    "toaster",
    "sink",
    "refrigerator",
    "book",
    "vase",
    "teddy bear",
];

pub struct Scene {
    pub image: RgbImage,
    pub detections: DetectionFile,
    pub depth: DepthMap,
}

/// `n` objects ringed around a central one on a `w`x`h` canvas. Every other
/// object carries an elliptical mask.
pub fn ring_scene(w: u32, h: u32, n: usize) -> Scene {
    let dims = ImageDims::new(w, h).expect("nonzero dims");
    let (cx0, cy0) = (w as f64 / 2.0, h as f64 / 2.0);
    let (rx, ry) = (w as f64 * 0.37, h as f64 * 0.39);
    let (hw, hh) = (w as f64 * 0.044, h as f64 * 0.045);
    let mut detections = Vec::with_capacity(n);
    let mut masks = BTreeMap::new();
    for i in 0..n {
        let (cx, cy) = if i == 0 {
            (cx0, cy0)
        } else {
            let a = i as f64 / (n - 1).max(1) as f64 * std::f64::consts::TAU;
            (cx0 + rx * a.cos(), cy0 + ry * a.sin())
        };
        let bbox = BoundingBox::new(cx - hw, cy - hh, cx + hw, cy + hh).expect("box inside canvas");
        detections.push(RawDetection {
            detector_id: format!("d{}", i % 3),
            class_label: CLASSES[i % CLASSES.len()].to_string(),
            confidence: 0.6 + (i % 40) as f64 * 0.01,
            bbox,
            source_index: i,
        });
        if i % 2 == 0 {
            let bits: Vec<bool> = (0..h)
                .flat_map(|y| {
                    (0..w).map(move |x| {
                        let dx = (x as f64 + 0.5 - cx) / hw;
                        let dy = (y as f64 + 0.5 - cy) / hh;
                        dx * dx + dy * dy <= 1.0
                    })
                })
                .collect();
            masks.insert(i, RegionMask::from_bitmap(w, h, &bits));
        }
    }
    let image = RgbImage::from_fn(w, h, |x, y| {
        Rgb([(x * 255 / w) as u8, (y * 255 / h) as u8, 128])
    });
    let depth = DepthMap::new(
        w,
        h,
        (0..w * h).map(|i| 0.5 + (i % 7) as f64 * 0.01).collect(),
    )
    .expect("depth size");
    Scene {
        image,
        detections: DetectionFile {
            image_path: "bench.png".into(),
            dims,
            detections,
            masks,
        },
        depth,
    }
}
