//! Inference: mask-based harmonization of a pasted foreground, reference
//! selection around the placement, a high-resolution color-mapping path, and
//! the synthetic held-out-LUT benchmark.

mod benchmark;
mod colormap;

pub use benchmark::{
    load_benchmark, run_benchmark, score_cases, synth_benchmark, write_benchmark, BenchmarkCase, BenchmarkManifest,
    CaseRecord, MaskStyle, BENCH_SIDE,
};
pub use colormap::{apply_color_map, fit_color_map, PolyColorMap, BASIS_LEN, MIN_FIT_PIXELS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonizer::HarmonizerModel;
use crate::image::{composite, crop, resize_bilinear, ImageF32, Mask, Rect};

pub const DEFAULT_EXPAND: f64 = 2.0;
pub const MIN_REFERENCE_SIDE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarmonizeOptions {
    /// Use a crop of the background around the placement as reference
    /// instead of the whole background.
    pub locality: bool,
    pub expand: f64,
}

impl Default for HarmonizeOptions {
    fn default() -> Self {
        Self {
            locality: false,
            expand: DEFAULT_EXPAND,
        }
    }
}

impl HarmonizeOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.expand.is_finite() && self.expand >= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "expand must be >= 1, got {}",
                self.expand
            )));
        }
        Ok(())
    }
}

fn scaled_span(start: usize, len: usize, expand: f64, limit: usize) -> (usize, usize) {
    let min_len = MIN_REFERENCE_SIDE.min(limit);
    let new_len = ((len as f64 * expand).round() as usize).clamp(min_len, limit);
    let center = start as f64 + len as f64 / 2.0;
    let max_start = (limit - new_len) as f64;
    let new_start = (center - new_len as f64 / 2.0).round().clamp(0.0, max_start);
    (new_start as usize, new_len)
}

/// The reference rect: `placement` scaled about its center by `expand`,
/// at least 32 px per side where the image allows, shifted into bounds.
pub fn locality_rect(width: usize, height: usize, placement: Rect, expand: f64) -> Rect {
    let expand = if expand.is_finite() { expand.max(1.0) } else { 1.0 };
    let (x, w) = scaled_span(placement.x, placement.w, expand, width);
    let (y, h) = scaled_span(placement.y, placement.h, expand, height);
    Rect::new(x, y, w, h)
}

pub fn locality_crop(bg: &ImageF32, placement: Rect, expand: f64) -> Result<ImageF32> {
    placement.validate(bg.width(), bg.height())?;
    crop(bg, locality_rect(bg.width(), bg.height(), placement, expand))
}

/// The reference image for a composite. Depends only on `bg` and
/// `placement`, never on the pasted foreground.
pub fn reference_for(bg: &ImageF32, placement: Rect, opts: &HarmonizeOptions) -> Result<ImageF32> {
    if opts.locality {
        locality_crop(bg, placement, opts.expand)
    } else {
        placement.validate(bg.width(), bg.height())?;
        Ok(bg.clone())
    }
}

fn check_inputs(fg: &ImageF32, mask: &Mask, placement: Rect) -> Result<()> {
    if fg.width() != placement.w || fg.height() != placement.h {
        return Err(Error::DimensionMismatch(format!(
            "foreground {}x{} does not match placement {placement}",
            fg.width(),
            fg.height()
        )));
    }
    if mask.width() != placement.w || mask.height() != placement.h {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} does not match placement {placement}",
            mask.width(),
            mask.height()
        )));
    }
    Ok(())
}

pub fn harmonize_composite(
    model: &HarmonizerModel,
    fg: &ImageF32,
    bg: &ImageF32,
    mask: &Mask,
    placement: Rect,
    opts: &HarmonizeOptions,
) -> Result<ImageF32> {
    opts.validate()?;
    check_inputs(fg, mask, placement)?;
    let reference = reference_for(bg, placement, opts)?;
    let harmonized = model.harmonize(fg, &reference)?;
    composite(&harmonized, bg, mask, placement)
}

fn downscale_to(image: &ImageF32, target_pixels: usize) -> Result<ImageF32> {
    let n = image.pixel_count();
    if n <= target_pixels {
        return Ok(image.clone());
    }
    let s = (target_pixels as f64 / n as f64).sqrt();
    // Ceil keeps the copy at no fewer than `target_pixels`, so the color-map fit
    // always sees the pixel floor.
    let w = ((image.width() as f64 * s).ceil() as usize).min(image.width());
    let h = ((image.height() as f64 * s).ceil() as usize).min(image.height());
    resize_bilinear(image, w, h)
}

/// Harmonizes downscaled copies (about `work_pixels` each), fits a
/// polynomial color map from the low-res foreground to its harmonized
/// version and applies it to the full-resolution foreground.
pub fn harmonize_composite_highres(
    model: &HarmonizerModel,
    fg: &ImageF32,
    bg: &ImageF32,
    mask: &Mask,
    placement: Rect,
    opts: &HarmonizeOptions,
    work_pixels: usize,
) -> Result<ImageF32> {
    opts.validate()?;
    check_inputs(fg, mask, placement)?;
    let work_pixels = work_pixels.max(MIN_FIT_PIXELS);
    let reference = downscale_to(&reference_for(bg, placement, opts)?, work_pixels)?;
    let low_fg = downscale_to(fg, work_pixels)?;
    let low_out = model.harmonize(&low_fg, &reference)?;
    let map = fit_color_map(&low_fg, &low_out)?;
    composite(&apply_color_map(&map, fg), bg, mask, placement)
}
