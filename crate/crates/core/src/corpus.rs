//! Source image collections: loading a directory of photos, or rendering a
//! deterministic synthetic corpus when no photos are at hand.

use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::image::{decode_image, ImageF32, ImageFormat, Rgb};
use crate::seed::{mix, rng};

#[derive(Clone, Debug, PartialEq)]
pub struct CorpusImage {
    pub id: String,
    pub image: ImageF32,
}

/// Loads every PNG/PPM in `dir`, sorted by file name; ids are file stems.
pub fn load_corpus(dir: &Path) -> Result<Vec<CorpusImage>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| ImageFormat::from_path(p).is_some())
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let format = ImageFormat::from_path(&p).expect("filtered above");
            let bytes = std::fs::read(&p).map_err(|e| Error::io(&p, e))?;
            let image = decode_image(&bytes, format)?;
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok(CorpusImage { id, image })
        })
        .collect()
}

fn hsv(h: f64, s: f64, v: f64) -> [f64; 3] {
    let h = h.rem_euclid(1.0) * 6.0;
    let i = h.floor();
    let f = h - i;
    let (p, q, t) = (v * (1.0 - s), v * (1.0 - s * f), v * (1.0 - s * (1.0 - f)));
    match i as u32 {
        0 => [v, t, p],
        1 => [q, v, p],
        2 => [p, v, t],
        3 => [p, q, v],
        4 => [t, p, v],
        _ => [v, p, q],
    }
}

enum Shape {
    Rect { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { cx: f64, cy: f64, rx: f64, ry: f64 },
}

impl Shape {
    fn contains(&self, x: f64, y: f64) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => x >= x0 && x < x1 && y >= y0 && y < y1,
            Shape::Ellipse { cx, cy, rx, ry } => {
                let (dx, dy) = ((x - cx) / rx, (y - cy) / ry);
                dx * dx + dy * dy <= 1.0
            }
        }
    }
}

/// Renders one synthetic "photo": a two-tone gradient backdrop, a handful of
/// colored shapes with shading, low-frequency texture, and a scene-wide
/// illuminant cast so that different crops share one appearance.
pub fn synthetic_photo(width: usize, height: usize, seed: u64) -> ImageF32 {
    let mut rng = rng(seed);
    let (w, h) = (width as f64, height as f64);
    let base_hue: f64 = rng.gen();
    let top = hsv(base_hue, rng.gen_range(0.1..0.6), rng.gen_range(0.5..0.95));
    let bottom = hsv(
        base_hue + rng.gen_range(-0.3..0.3),
        rng.gen_range(0.2..0.8),
        rng.gen_range(0.2..0.7),
    );
    let horizon = rng.gen_range(0.3..0.7);

    let n_shapes = rng.gen_range(5..11);
    let shapes: Vec<(Shape, [f64; 3], f64)> = (0..n_shapes)
        .map(|_| {
            let shape = if rng.gen_bool(0.5) {
                let (x0, y0) = (rng.gen_range(0.0..w), rng.gen_range(0.0..h));
                Shape::Rect {
                    x0,
                    y0,
                    x1: x0 + rng.gen_range(0.08..0.4) * w,
                    y1: y0 + rng.gen_range(0.08..0.4) * h,
                }
            } else {
                Shape::Ellipse {
                    cx: rng.gen_range(0.0..w),
                    cy: rng.gen_range(0.0..h),
                    rx: rng.gen_range(0.05..0.25) * w,
                    ry: rng.gen_range(0.05..0.25) * h,
                }
            };
            let color = hsv(
                base_hue + rng.gen_range(-0.5..0.5),
                rng.gen_range(0.1..0.9),
                rng.gen_range(0.15..1.0),
            );
            (shape, color, rng.gen_range(-0.4..0.4))
        })
        .collect();

    // a few sinusoids standing in for texture
    let waves: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(2.0..18.0) / w,
                rng.gen_range(2.0..18.0) / h,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.01..0.05),
            )
        })
        .collect();

    let cast = [
        rng.gen_range(0.85..1.15),
        rng.gen_range(0.85..1.15),
        rng.gen_range(0.85..1.15),
    ];
    let exposure = rng.gen_range(0.8..1.2);

    ImageF32::from_fn(width, height, |x, y| {
        let (fx, fy) = (x as f64 + 0.5, y as f64 + 0.5);
        let t = (fy / h / horizon).min(1.0);
        let mut c = if fy / h < horizon {
            [0, 1, 2].map(|k| top[k] * (1.0 - 0.3 * t))
        } else {
            let s = (fy / h - horizon) / (1.0 - horizon);
            [0, 1, 2].map(|k| bottom[k] * (1.0 - 0.4 * s))
        };
        for (shape, color, shade) in &shapes {
            if shape.contains(fx, fy) {
                let g = 1.0 + shade * (fx / w - 0.5);
                c = [0, 1, 2].map(|k| color[k] * g);
            }
        }
        let tex: f64 = waves
            .iter()
            .map(|(kx, ky, ph, amp)| amp * (std::f64::consts::TAU * (kx * fx + ky * fy) + ph).sin())
            .sum();
        let out: Rgb = [0, 1, 2].map(|k| ((c[k] + tex) * cast[k] * exposure).clamp(0.0, 1.0) as f32);
        out
    })
}

/// `count` synthetic photos with ids `synth_{i:03}`; photo `i` uses `mix(seed, i)`.
pub fn synthetic_corpus(count: usize, seed: u64, width: usize, height: usize) -> Vec<CorpusImage> {
    (0..count)
        .map(|i| CorpusImage {
            id: format!("synth_{i:03}"),
            image: synthetic_photo(width, height, mix(seed, i as u64)),
        })
        .collect()
}
