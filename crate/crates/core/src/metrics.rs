//! Full-reference quality metrics: MSE and PSNR on the 0-255 scale, and
//! single-scale SSIM on Rec.601 luminance.
//!
//! SSIM uses an 11x11 Gaussian window (sigma 1.5), `C1 = 0.01^2`,
//! `C2 = 0.03^2` for a dynamic range of 1, valid-window filtering (no
//! padding), and averages the SSIM map.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageF32;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;
const PEAK_SQ: f64 = 255.0 * 255.0;

fn same_size(a: &ImageF32, b: &ImageF32) -> Result<()> {
    if a.same_size(b) {
        Ok(())
    } else {
        Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )))
    }
}

/// Mean of `(255 * (a - b))^2` over all samples.
pub fn mse(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    same_size(a, b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = 255.0 * (*x as f64 - *y as f64);
            d * d
        })
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// `10 log10(255^2 / mse)`; `+inf` when `mse == 0`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (PEAK_SQ / mse).log10()
    }
}

pub fn psnr(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Normalized 1-D Gaussian taps; the 2-D window is their outer product.
pub fn gaussian_taps() -> [f64; SSIM_WINDOW] {
    let half = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0f64; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - half;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.map(|t| t / sum)
}

// Valid-window separable filtering of a plane.
fn filter_valid(plane: &[f64], width: usize, height: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let out_w = width - k + 1;
    let out_h = height - k + 1;
    let mut horiz = vec![0f64; out_w * height];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..out_w {
            horiz[y * out_w + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0f64; out_w * out_h];
    for y in 0..out_h {
        for x in 0..out_w {
            out[y * out_w + x] = taps
                .iter()
                .enumerate()
                .map(|(j, t)| t * horiz[(y + j) * out_w + x])
                .sum();
        }
    }
    out
}

pub fn ssim(a: &ImageF32, b: &ImageF32) -> Result<f64> {
    same_size(a, b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "SSIM needs images of at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let x = a.luma();
    let y = b.luma();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let taps = gaussian_taps();
    let mu_x = filter_valid(&x, w, h, &taps);
    let mu_y = filter_valid(&y, w, h, &taps);
    let e_xx = filter_valid(&xx, w, h, &taps);
    let e_yy = filter_valid(&yy, w, h, &taps);
    let e_xy = filter_valid(&xy, w, h, &taps);
    let mut total = 0f64;
    for i in 0..mu_x.len() {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let vx = e_xx[i] - mx * mx;
        let vy = e_yy[i] - my * my;
        let cxy = e_xy[i] - mx * my;
        total +=
            ((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2)) / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
    }
    Ok(total / mu_x.len() as f64)
}

mod psnr_repr {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(de::Error::custom(format!("invalid psnr '{t}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mse: f64,
    /// dB; `+inf` (serialized as `"inf"`) for identical images.
    #[serde(with = "psnr_repr")]
    pub psnr: f64,
    pub ssim: f64,
}

impl MetricsReport {
    pub fn compute(output: &ImageF32, gt: &ImageF32) -> Result<Self> {
        let mse = mse(output, gt)?;
        Ok(Self {
            mse,
            psnr: psnr_from_mse(mse),
            ssim: ssim(output, gt)?,
        })
    }
}

/// Scores `output` and the direct-composite `baseline` against `gt`.
pub fn evaluate_pair(output: &ImageF32, gt: &ImageF32, baseline: &ImageF32) -> Result<(MetricsReport, MetricsReport)> {
    Ok((
        MetricsReport::compute(output, gt)?,
        MetricsReport::compute(baseline, gt)?,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case_id: String,
    pub method: MetricsReport,
    pub baseline: MetricsReport,
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        let (lo, hi) = (v[n / 2 - 1], v[n / 2]);
        if lo == hi {
            lo
        } else {
            (lo + hi) / 2.0
        }
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: MetricsReport,
    pub median: MetricsReport,
}

impl Summary {
    pub fn of(reports: &[MetricsReport]) -> Self {
        let pick = |f: fn(&MetricsReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
        let (m, p, s) = (pick(|r| r.mse), pick(|r| r.psnr), pick(|r| r.ssim));
        Self {
            mean: MetricsReport {
                mse: mean(&m),
                psnr: mean(&p),
                ssim: mean(&s),
            },
            median: MetricsReport {
                mse: median(&m),
                psnr: median(&p),
                ssim: median(&s),
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub count: usize,
    pub method: Summary,
    pub baseline: Summary,
    /// Cases where the method's MSE is strictly below the baseline's.
    pub method_wins: usize,
    pub cases: Vec<CaseReport>,
}

impl AggregateReport {
    pub fn from_cases(cases: Vec<CaseReport>) -> Self {
        let method: Vec<_> = cases.iter().map(|c| c.method).collect();
        let baseline: Vec<_> = cases.iter().map(|c| c.baseline).collect();
        Self {
            count: cases.len(),
            method: Summary::of(&method),
            baseline: Summary::of(&baseline),
            method_wins: cases.iter().filter(|c| c.method.mse < c.baseline.mse).count(),
            cases,
        }
    }

    pub fn win_rate(&self) -> f64 {
        self.method_wins as f64 / self.count.max(1) as f64
    }

    /// `stat,system,mse,psnr,ssim` rows for mean and median.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stat,system,mse,psnr,ssim\n");
        for (stat, m, b) in [
            ("mean", &self.method.mean, &self.baseline.mean),
            ("median", &self.method.median, &self.baseline.median),
        ] {
            for (system, r) in [("method", m), ("baseline", b)] {
                let _ = writeln!(out, "{stat},{system},{},{},{}", r.mse, r.psnr, r.ssim);
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn random(seed: u64, w: usize, h: usize) -> ImageF32 {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        ImageF32::from_fn(w, h, |_, _| [rng.gen(), rng.gen(), rng.gen()])
    }

    #[test]
    fn mse_examples() {
        let a = ImageF32::filled(4, 4, [0.0; 3]);
        let b = ImageF32::filled(4, 4, [1.0; 3]);
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 65025.0);
        let c = ImageF32::filled(4, 4, [0.2; 3]);
        let d = ImageF32::filled(4, 4, [0.2 + 10.0 / 255.0; 3]);
        assert!((mse(&c, &d).unwrap() - 100.0).abs() < 1e-3);
    }

    #[test]
    fn psnr_examples() {
        assert_eq!(psnr_from_mse(0.0), f64::INFINITY);
        assert_eq!(psnr_from_mse(65025.0), 0.0);
        assert!((psnr_from_mse(100.0) - 28.1308).abs() < 1e-3);
        let x = random(1, 5, 5);
        assert_eq!(psnr(&x, &x).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_identity_and_constants() {
        let x = random(2, 20, 16);
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-9);
        let a = ImageF32::filled(16, 16, [0.2; 3]);
        let b = ImageF32::filled(16, 16, [0.8; 3]);
        let expect = (2.0 * 0.16 + 1e-4) / (0.68 + 1e-4);
        assert!((ssim(&a, &b).unwrap() - expect).abs() < 1e-4);
        assert!((expect - 0.47067).abs() < 1e-4);
    }

    #[test]
    fn ssim_rejects_small_and_mismatched() {
        let s = ImageF32::filled(10, 20, [0.5; 3]);
        assert!(ssim(&s, &s).is_err());
        assert!(matches!(
            mse(&s, &ImageF32::filled(20, 10, [0.5; 3])),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn ssim_symmetric_and_bounded() {
        for s in 0..5 {
            let (a, b) = (random(s, 24, 18), random(s + 50, 24, 18));
            let ab = ssim(&a, &b).unwrap();
            assert!((ab - ssim(&b, &a).unwrap()).abs() < 1e-12);
            assert!((-1.0..=1.0).contains(&ab));
            assert!(mse(&a, &b).unwrap() == mse(&b, &a).unwrap());
        }
    }

    #[test]
    fn report_json_uses_inf_sentinel() {
        let x = random(3, 12, 12);
        let (m, b) = evaluate_pair(&x, &x, &x).unwrap();
        assert_eq!(m, b);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"psnr\":\"inf\""), "{json}");
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[f64::INFINITY, f64::INFINITY]), f64::INFINITY);
    }
}
