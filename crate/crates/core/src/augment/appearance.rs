//! Appearance perturbations: 3D LUTs and the two global baselines used in the
//! augmentation ablation (mean/std color transfer, saturation jitter).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::image::{ImageF32, LUMA_601};
use crate::lut::{apply_lut_image, NamedLut};

/// Per-channel mean and standard deviation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
}

impl ChannelStats {
    /// Population statistics, accumulated in 64-bit.
    pub fn of(image: &ImageF32) -> Self {
        let n = image.pixel_count() as f64;
        let mut sum = [0f64; 3];
        for p in image.pixels() {
            for c in 0..3 {
                sum[c] += p[c] as f64;
            }
        }
        let mean = sum.map(|s| s / n);
        let mut var = [0f64; 3];
        for p in image.pixels() {
            for c in 0..3 {
                let d = p[c] as f64 - mean[c];
                var[c] += d * d;
            }
        }
        Self {
            mean,
            std: var.map(|v| (v / n).sqrt()),
        }
    }
}

/// Per-channel affine map moving `source` statistics onto `target`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StatsTransfer {
    pub source: ChannelStats,
    pub target: ChannelStats,
}

impl StatsTransfer {
    pub fn apply(&self, image: &ImageF32) -> ImageF32 {
        let s = self.source;
        let t = self.target;
        let gain = [0, 1, 2].map(|c| t.std[c] / s.std[c].max(1e-6));
        image.map_pixels(|p| {
            [0, 1, 2].map(|c| (((p[c] as f64 - s.mean[c]) * gain[c] + t.mean[c]) as f32).clamp(0.0, 1.0))
        })
    }
}

/// Reinhard-style mean/std matching in RGB, clamped to `[0, 1]`.
pub fn color_transfer_meanstd(src: &ImageF32, target: &ChannelStats) -> ImageF32 {
    StatsTransfer {
        source: ChannelStats::of(src),
        target: *target,
    }
    .apply(src)
}

/// `gray + factor * (src - gray)` with Rec.601 gray, clamped to `[0, 1]`.
pub fn saturation_jitter(src: &ImageF32, factor: f32) -> ImageF32 {
    let f = factor as f64;
    src.map_pixels(|p| {
        let y = LUMA_601[0] * p[0] as f64 + LUMA_601[1] * p[1] as f64 + LUMA_601[2] * p[2] as f64;
        p.map(|v| ((y + f * (v as f64 - y)) as f32).clamp(0.0, 1.0))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AppearanceMode {
    #[default]
    Lut,
    ColorTransfer,
    Saturation,
}

impl std::str::FromStr for AppearanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "lut" => Ok(Self::Lut),
            "color_transfer" => Ok(Self::ColorTransfer),
            "saturation" => Ok(Self::Saturation),
            other => Err(format!(
                "unknown appearance '{other}' (expected lut, color_transfer or saturation)"
            )),
        }
    }
}

/// One sampled appearance, before it is bound to a source image.
#[derive(Clone, Debug, PartialEq)]
pub enum AppearanceDraw {
    Lut(usize),
    /// Target mean = source mean + shift, target std = source std * scale.
    Transfer {
        mean_shift: [f64; 3],
        std_scale: [f64; 3],
    },
    Saturation(f32),
}

impl AppearanceDraw {
    pub fn sample(mode: AppearanceMode, rng: &mut impl Rng) -> Self {
        match mode {
            AppearanceMode::Lut => unreachable!("LUT draws are paired, see draw_lut_pair"),
            AppearanceMode::ColorTransfer => AppearanceDraw::Transfer {
                mean_shift: [0; 3].map(|_| rng.gen_range(-0.2..0.2)),
                std_scale: [0; 3].map(|_| rng.gen_range(0.6..1.4)),
            },
            AppearanceMode::Saturation => AppearanceDraw::Saturation(rng.gen_range(0.2..1.8)),
        }
    }

    pub fn label(&self, bank: &[NamedLut]) -> String {
        match self {
            AppearanceDraw::Lut(i) => bank[*i].id.clone(),
            AppearanceDraw::Transfer { mean_shift, std_scale } => format!(
                "transfer:{:.4},{:.4},{:.4}/{:.4},{:.4},{:.4}",
                mean_shift[0], mean_shift[1], mean_shift[2], std_scale[0], std_scale[1], std_scale[2]
            ),
            AppearanceDraw::Saturation(f) => format!("saturation:{f:.4}"),
        }
    }
}

/// An appearance bound to a particular source image, applicable pixelwise to
/// any crop of that image.
pub enum Appearance<'a> {
    Lut(&'a NamedLut),
    Transfer(StatsTransfer),
    Saturation(f32),
}

impl<'a> Appearance<'a> {
    pub fn bind(draw: &AppearanceDraw, bank: &'a [NamedLut], source: &ImageF32) -> Self {
        match draw {
            AppearanceDraw::Lut(i) => Appearance::Lut(&bank[*i]),
            AppearanceDraw::Transfer { mean_shift, std_scale } => {
                let s = ChannelStats::of(source);
                let target = ChannelStats {
                    mean: [0, 1, 2].map(|c| (s.mean[c] + mean_shift[c]).clamp(0.05, 0.95)),
                    std: [0, 1, 2].map(|c| s.std[c] * std_scale[c]),
                };
                Appearance::Transfer(StatsTransfer { source: s, target })
            }
            AppearanceDraw::Saturation(f) => Appearance::Saturation(*f),
        }
    }

    pub fn apply(&self, image: &ImageF32) -> ImageF32 {
        match self {
            Appearance::Lut(l) => apply_lut_image(&l.lut, image),
            Appearance::Transfer(t) => t.apply(image),
            Appearance::Saturation(f) => saturation_jitter(image, *f),
        }
    }
}
