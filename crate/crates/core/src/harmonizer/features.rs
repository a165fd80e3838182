//! Handcrafted appearance descriptor fed to the reference encoder.
//!
//! Layout (30 values): per-channel mean (3), per-channel population std (3),
//! then an 8-bin normalized histogram per channel (R bins, G bins, B bins).
//! Bin `k` covers `[k/8, (k+1)/8)`; the last bin is closed at 1.

use crate::image::ImageF32;

pub const HIST_BINS: usize = 8;
pub const FEATURE_DIM: usize = 6 + 3 * HIST_BINS;

#[derive(Clone, Debug, PartialEq)]
pub struct AppearanceFeatures(pub [f64; FEATURE_DIM]);

impl AppearanceFeatures {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> [f64; 3] {
        [self.0[0], self.0[1], self.0[2]]
    }

    pub fn std(&self) -> [f64; 3] {
        [self.0[3], self.0[4], self.0[5]]
    }

    pub fn histogram(&self, channel: usize) -> &[f64] {
        let start = 6 + channel * HIST_BINS;
        &self.0[start..start + HIST_BINS]
    }

    pub fn distance(&self, other: &AppearanceFeatures) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

#[inline]
pub fn hist_bin(v: f32) -> usize {
    ((v.clamp(0.0, 1.0) * HIST_BINS as f32) as usize).min(HIST_BINS - 1)
}

pub fn extract_features(image: &ImageF32) -> AppearanceFeatures {
    let n = image.pixel_count() as f64;
    let mut sum = [0f64; 3];
    let mut counts = [[0u64; HIST_BINS]; 3];
    for p in image.pixels() {
        for c in 0..3 {
            sum[c] += p[c] as f64;
            counts[c][hist_bin(p[c])] += 1;
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
    let mut out = [0f64; FEATURE_DIM];
    for c in 0..3 {
        out[c] = mean[c];
        out[3 + c] = (var[c] / n).sqrt();
        for k in 0..HIST_BINS {
            out[6 + c * HIST_BINS + k] = counts[c][k] as f64 / n;
        }
    }
    AppearanceFeatures(out)
}
