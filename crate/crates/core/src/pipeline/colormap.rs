//! Degree-2 polynomial color maps fitted by damped least squares.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{ImageF32, Rgb};

pub const BASIS_LEN: usize = 10;
pub const MIN_FIT_PIXELS: usize = 1000;
const DAMPING: f64 = 1e-6;
const RANK_TOL: f64 = 1e-9;
const DEGENERATE_RESIDUAL: f64 = 1e-3;

type Gram = SMatrix<f64, BASIS_LEN, BASIS_LEN>;
type Col = SVector<f64, BASIS_LEN>;

/// `[1, r, g, b, r², g², b², rg, rb, gb]`.
pub fn basis(p: Rgb) -> [f64; BASIS_LEN] {
    let [r, g, b] = p.map(f64::from);
    [1.0, r, g, b, r * r, g * g, b * b, r * g, r * b, g * b]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolyColorMap {
    /// One row of basis coefficients per output channel.
    pub coeffs: [[f64; BASIS_LEN]; 3],
}

impl PolyColorMap {
    pub fn identity() -> Self {
        let mut coeffs = [[0.0; BASIS_LEN]; 3];
        for (c, row) in coeffs.iter_mut().enumerate() {
            row[1 + c] = 1.0;
        }
        Self { coeffs }
    }

    pub fn eval(&self, p: Rgb) -> [f64; 3] {
        let phi = basis(p);
        self.coeffs.map(|row| row.iter().zip(&phi).map(|(a, x)| a * x).sum())
    }
}

pub fn fit_color_map(lowres_in: &ImageF32, lowres_out: &ImageF32) -> Result<PolyColorMap> {
    if !lowres_in.same_size(lowres_out) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            lowres_in.width(),
            lowres_in.height(),
            lowres_out.width(),
            lowres_out.height()
        )));
    }
    let n = lowres_in.pixel_count();
    if n < MIN_FIT_PIXELS {
        return Err(Error::InvalidArgument(format!(
            "color-map fit needs at least {MIN_FIT_PIXELS} pixels, got {n}"
        )));
    }
    let mut gram = Gram::zeros();
    let mut rhs = [Col::zeros(); 3];
    for (p, q) in lowres_in.pixels().zip(lowres_out.pixels()) {
        let phi = Col::from(basis(p));
        gram += phi * phi.transpose();
        for c in 0..3 {
            rhs[c] += phi * q[c] as f64;
        }
    }
    let eig = gram.symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    let damped = gram + Gram::identity() * DAMPING;
    let chol = damped
        .cholesky()
        .ok_or_else(|| Error::Fit("normal equations are not positive definite".into()))?;
    let mut coeffs = [[0.0; BASIS_LEN]; 3];
    for c in 0..3 {
        let sol = chol.solve(&rhs[c]);
        coeffs[c].copy_from_slice(sol.as_slice());
    }
    let map = PolyColorMap { coeffs };

    if lo <= RANK_TOL * hi {
        let resid = mean_abs_residual(&map, lowres_in, lowres_out);
        if resid > DEGENERATE_RESIDUAL {
            return Err(Error::Fit(format!(
                "input colors do not span the basis (eigenvalue ratio {:.3e}); \
                 mean residual {resid:.4} cannot be fitted",
                lo / hi
            )));
        }
    }
    Ok(map)
}

pub(crate) fn mean_abs_residual(map: &PolyColorMap, input: &ImageF32, output: &ImageF32) -> f64 {
    let mut sum = 0.0;
    for (p, q) in input.pixels().zip(output.pixels()) {
        let y = map.eval(p);
        sum += (0..3).map(|c| (y[c] - q[c] as f64).abs()).sum::<f64>();
    }
    sum / (3 * input.pixel_count()) as f64
}

pub fn apply_color_map(map: &PolyColorMap, fullres_in: &ImageF32) -> ImageF32 {
    fullres_in.map_pixels(|p| map.eval(p).map(|v| v.clamp(0.0, 1.0) as f32))
}
