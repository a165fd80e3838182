//! Synthetic smooth color grades.
//!
//! A generated LUT is `clamp(M * [t_r(r), t_g(g), t_b(b)])` sampled on the
//! lattice, where each `t_c` is a monotone cubic through four knots and `M`
//! is a 3x3 mixing matrix within `0.3 * strength` of the identity. Strength
//! 0 reproduces the identity lattice exactly.

use rand::Rng;

use super::{identity_lut, Lut3d, NamedLut, DEFAULT_SYNTH_SIZE};
use crate::seed::{mix, rng};

const KNOT_X: [f64; 4] = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
const MIX_RANGE: f64 = 0.3;

/// Monotone piecewise-cubic Hermite curve (Fritsch-Carlson slopes).
#[derive(Clone, Debug, PartialEq)]
pub struct ToneCurve {
    ys: [f64; 4],
    slopes: [f64; 4],
}

impl ToneCurve {
    /// `ys` must be non-decreasing.
    pub fn through(ys: [f64; 4]) -> Self {
        let mut secants = [0f64; 3];
        for k in 0..3 {
            secants[k] = (ys[k + 1] - ys[k]) / (KNOT_X[k + 1] - KNOT_X[k]);
        }
        let mut slopes = [secants[0], 0.0, 0.0, secants[2]];
        for k in 1..3 {
            slopes[k] = if secants[k - 1] * secants[k] <= 0.0 {
                0.0
            } else {
                (secants[k - 1] + secants[k]) / 2.0
            };
        }
        for k in 0..3 {
            if secants[k] == 0.0 {
                slopes[k] = 0.0;
                slopes[k + 1] = 0.0;
                continue;
            }
            let a = slopes[k] / secants[k];
            let b = slopes[k + 1] / secants[k];
            let r = a * a + b * b;
            if r > 9.0 {
                let t = 3.0 / r.sqrt();
                slopes[k] = t * a * secants[k];
                slopes[k + 1] = t * b * secants[k];
            }
        }
        Self { ys, slopes }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let k = ((x * 3.0).floor() as usize).min(2);
        let h = KNOT_X[k + 1] - KNOT_X[k];
        let t = (x - KNOT_X[k]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[k] + h10 * h * self.slopes[k] + h01 * self.ys[k + 1] + h11 * h * self.slopes[k + 1]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothLutParams {
    pub size: usize,
    /// In `[0, 1]`.
    pub strength: f64,
    /// When false the mixing matrix is the identity (tone curves only).
    pub mixing: bool,
}

impl Default for SmoothLutParams {
    fn default() -> Self {
        Self {
            size: DEFAULT_SYNTH_SIZE,
            strength: 0.5,
            mixing: true,
        }
    }
}

fn random_tone_curve(rng: &mut impl Rng, strength: f64) -> ToneCurve {
    let lo = rng.gen_range(0.0..0.25);
    let hi = rng.gen_range(0.75..1.0);
    let mut mid = [rng.gen_range(lo..hi), rng.gen_range(lo..hi)];
    if mid[0] > mid[1] {
        mid.swap(0, 1);
    }
    let random = [lo, mid[0], mid[1], hi];
    let mut ys = [0f64; 4];
    for k in 0..4 {
        ys[k] = (1.0 - strength) * KNOT_X[k] + strength * random[k];
    }
    ToneCurve::through(ys)
}

/// The tone curves and mixing matrix a seed produces.
pub(crate) fn draw_grade(params: &SmoothLutParams, seed: u64) -> ([ToneCurve; 3], [[f64; 3]; 3]) {
    let mut rng = rng(seed);
    let strength = params.strength.clamp(0.0, 1.0);
    let curves = [
        random_tone_curve(&mut rng, strength),
        random_tone_curve(&mut rng, strength),
        random_tone_curve(&mut rng, strength),
    ];
    let mut m = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    for row in m.iter_mut() {
        for v in row.iter_mut() {
            let jitter = rng.gen_range(-1.0..=1.0) * MIX_RANGE * strength;
            if params.mixing {
                *v += jitter;
            }
        }
    }
    (curves, m)
}

pub fn smooth_lut(params: &SmoothLutParams, seed: u64) -> Lut3d {
    let n = params.size;
    let identity = identity_lut(n).expect("LUT size out of range");
    if params.strength <= 0.0 {
        return identity;
    }
    let (curves, m) = draw_grade(params, seed);
    let samples: Vec<Vec<f64>> = curves
        .iter()
        .map(|c| (0..n).map(|i| c.eval(i as f64 / (n - 1) as f64)).collect())
        .collect();
    let mut table = Vec::with_capacity(n * n * n);
    for b in 0..n {
        for g in 0..n {
            for r in 0..n {
                let t = [samples[0][r], samples[1][g], samples[2][b]];
                let mut out = [0f32; 3];
                for c in 0..3 {
                    let v = m[c][0] * t[0] + m[c][1] * t[1] + m[c][2] * t[2];
                    out[c] = v.clamp(0.0, 1.0) as f32;
                }
                table.push(out);
            }
        }
    }
    Lut3d::new(n, table).expect("generated table is valid")
}

/// Size-17 smooth LUT with mixing enabled.
pub fn random_smooth_lut(seed: u64, strength: f64) -> Lut3d {
    smooth_lut(
        &SmoothLutParams {
            strength,
            ..SmoothLutParams::default()
        },
        seed,
    )
}

/// `count` LUTs with ids `{prefix}{i:03}`; LUT `i` uses seed `mix(seed, i)`.
pub fn synthetic_bank(prefix: &str, count: usize, seed: u64, params: &SmoothLutParams) -> Vec<NamedLut> {
    (0..count)
        .map(|i| {
            let mut lut = smooth_lut(params, mix(seed, i as u64));
            let id = format!("{prefix}{i:03}");
            lut.set_title(Some(id.clone()));
            NamedLut { id, lut }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strength_zero_is_identity() {
        for seed in [0, 1, 99] {
            assert_eq!(random_smooth_lut(seed, 0.0), identity_lut(17).unwrap());
        }
    }

    #[test]
    fn same_seed_same_table() {
        assert_eq!(random_smooth_lut(5, 0.5), random_smooth_lut(5, 0.5));
        assert_ne!(random_smooth_lut(5, 0.5), random_smooth_lut(6, 0.5));
    }

    #[test]
    fn generated_entries_in_unit_range_and_tone_monotone() {
        let params = SmoothLutParams::default();
        for seed in 0..100 {
            let lut = smooth_lut(&params, seed);
            assert!(lut.table().iter().flatten().all(|v| (0.0..=1.0).contains(v)));

            let (curves, _) = draw_grade(&params, seed);
            for curve in &curves {
                let mut prev = f64::NEG_INFINITY;
                for i in 0..=1000 {
                    let y = curve.eval(i as f64 / 1000.0);
                    assert!(y >= prev - 1e-12, "seed {seed}: tone curve decreases");
                    prev = y;
                }
            }

            // tone stage alone: entries non-decreasing along each channel's own axis
            let tone_only = smooth_lut(
                &SmoothLutParams {
                    mixing: false,
                    ..params.clone()
                },
                seed,
            );
            let n = tone_only.size();
            for b in 0..n {
                for g in 0..n {
                    for r in 1..n {
                        assert!(tone_only.entry(r, g, b)[0] >= tone_only.entry(r - 1, g, b)[0]);
                        assert!(tone_only.entry(g, r, b)[1] >= tone_only.entry(g, r - 1, b)[1]);
                        assert!(tone_only.entry(g, b, r)[2] >= tone_only.entry(g, b, r - 1)[2]);
                    }
                }
            }
        }
    }

    #[test]
    fn tone_curve_interpolates_knots() {
        let c = ToneCurve::through([0.1, 0.2, 0.7, 0.9]);
        for (x, y) in KNOT_X.iter().zip([0.1, 0.2, 0.7, 0.9]) {
            assert!((c.eval(*x) - y).abs() < 1e-12);
        }
        let linear = ToneCurve::through(KNOT_X);
        assert!((linear.eval(0.37) - 0.37).abs() < 1e-12);
    }

    #[test]
    fn bank_ids_and_seeds() {
        let bank = synthetic_bank("train_", 3, 7, &SmoothLutParams::default());
        assert_eq!(bank[2].id, "train_002");
        assert_eq!(bank[1].lut.table(), random_smooth_lut(mix(7, 1), 0.5).table());
    }
}
