//! 3D color lookup tables: `.cube` parsing and serialization, trilinear
//! application, and a synthetic generator of smooth random grades.
//!
//! Table entries are stored red-fastest: `index = r + N*g + N*N*b`.

mod cube;
mod synth;

pub use cube::{parse_cube, write_cube};
pub use synth::{random_smooth_lut, smooth_lut, synthetic_bank, SmoothLutParams, ToneCurve};

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{ImageF32, Rgb};

pub const MIN_SIZE: usize = 2;
pub const MAX_SIZE: usize = 256;
pub const DEFAULT_SYNTH_SIZE: usize = 17;

#[derive(Clone, Debug, PartialEq)]
pub struct Lut3d {
    size: usize,
    domain_min: Rgb,
    domain_max: Rgb,
    table: Vec<Rgb>,
    title: Option<String>,
}

impl Lut3d {
    pub fn new(size: usize, table: Vec<Rgb>) -> Result<Self> {
        Self::with_domain(size, [0.0; 3], [1.0; 3], table, None)
    }

    pub fn with_domain(
        size: usize,
        domain_min: Rgb,
        domain_max: Rgb,
        table: Vec<Rgb>,
        title: Option<String>,
    ) -> Result<Self> {
        check_size(size)?;
        if table.len() != size * size * size {
            return Err(Error::InvalidArgument(format!(
                "LUT of size {size} needs {} entries, got {}",
                size * size * size,
                table.len()
            )));
        }
        if table.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite LUT entry".into()));
        }
        for c in 0..3 {
            if !(domain_min[c].is_finite() && domain_max[c].is_finite()) || domain_min[c] >= domain_max[c] {
                return Err(Error::InvalidArgument(format!(
                    "domain_min must be below domain_max on channel {c}"
                )));
            }
        }
        Ok(Self {
            size,
            domain_min,
            domain_max,
            table,
            title,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn domain_min(&self) -> Rgb {
        self.domain_min
    }

    pub fn domain_max(&self) -> Rgb {
        self.domain_max
    }

    pub fn table(&self) -> &[Rgb] {
        &self.table
    }

    pub fn title(&self) -> Option<&str> {
        self.title.as_deref()
    }

    pub fn set_title(&mut self, title: Option<String>) {
        self.title = title;
    }

    #[inline]
    pub fn index(&self, r: usize, g: usize, b: usize) -> usize {
        r + self.size * (g + self.size * b)
    }

    #[inline]
    pub fn entry(&self, r: usize, g: usize, b: usize) -> Rgb {
        self.table[self.index(r, g, b)]
    }

    pub fn has_default_domain(&self) -> bool {
        self.domain_min == [0.0; 3] && self.domain_max == [1.0; 3]
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_cube(&text)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, write_cube(self)).map_err(|e| Error::io(path, e))
    }
}

fn check_size(size: usize) -> Result<()> {
    if !(MIN_SIZE..=MAX_SIZE).contains(&size) {
        return Err(Error::InvalidArgument(format!(
            "LUT size {size} outside [{MIN_SIZE}, {MAX_SIZE}]"
        )));
    }
    Ok(())
}

/// Lattice whose entry at `(r, g, b)` is `(r, g, b) / (n - 1)`.
pub fn identity_lut(n: usize) -> Result<Lut3d> {
    check_size(n)?;
    let scale = (n - 1) as f32;
    let mut table = Vec::with_capacity(n * n * n);
    for b in 0..n {
        for g in 0..n {
            for r in 0..n {
                table.push([r as f32 / scale, g as f32 / scale, b as f32 / scale]);
            }
        }
    }
    Lut3d::new(n, table)
}

/// Trilinear lookup. Inputs are clamped to the LUT domain first.
pub fn apply_lut(lut: &Lut3d, color: Rgb) -> Rgb {
    let top = (lut.size - 1) as f64;
    let mut base = [0usize; 3];
    let mut frac = [0f64; 3];
    for c in 0..3 {
        let lo = lut.domain_min[c] as f64;
        let hi = lut.domain_max[c] as f64;
        let u = ((color[c] as f64 - lo) / (hi - lo)).clamp(0.0, 1.0) * top;
        let i = (u.floor() as usize).min(lut.size - 2);
        base[c] = i;
        frac[c] = u - i as f64;
    }
    let [r0, g0, b0] = base;
    let [fr, fg, fb] = frac;
    let lerp = |a: Rgb, b: Rgb, t: f64| -> [f64; 3] {
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (1.0 - t) * a[c] as f64 + t * b[c] as f64;
        }
        out
    };
    let lerp64 = |a: [f64; 3], b: [f64; 3], t: f64| -> [f64; 3] {
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (1.0 - t) * a[c] + t * b[c];
        }
        out
    };
    let c00 = lerp(lut.entry(r0, g0, b0), lut.entry(r0 + 1, g0, b0), fr);
    let c10 = lerp(lut.entry(r0, g0 + 1, b0), lut.entry(r0 + 1, g0 + 1, b0), fr);
    let c01 = lerp(lut.entry(r0, g0, b0 + 1), lut.entry(r0 + 1, g0, b0 + 1), fr);
    let c11 = lerp(lut.entry(r0, g0 + 1, b0 + 1), lut.entry(r0 + 1, g0 + 1, b0 + 1), fr);
    let c0 = lerp64(c00, c10, fg);
    let c1 = lerp64(c01, c11, fg);
    let out = lerp64(c0, c1, fb);
    [out[0] as f32, out[1] as f32, out[2] as f32]
}

/// Per-pixel [`apply_lut`], output clamped to `[0, 1]`.
pub fn apply_lut_image(lut: &Lut3d, image: &ImageF32) -> ImageF32 {
    image.map_pixels(|p| apply_lut(lut, p).map(|v| v.clamp(0.0, 1.0)))
}

/// A LUT together with a stable identifier (file stem or generator index).
#[derive(Clone, Debug, PartialEq)]
pub struct NamedLut {
    pub id: String,
    pub lut: Lut3d,
}

/// Loads every `*.cube` file in `dir`, sorted by file name.
pub fn load_bank(dir: &Path) -> Result<Vec<NamedLut>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("cube"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
            Ok(NamedLut {
                id,
                lut: Lut3d::load(&p)?,
            })
        })
        .collect()
}
