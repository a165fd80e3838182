//! Training objective and its exact gradient.
//!
//! For a triplet `(C_a, C_b, R_a, R_b)`:
//!
//! * `l_harm  = mean((F(C_a, G_r(R_b)) - C_b)^2)`
//! * `l_recon = mean((F(C_a, G_r(R_a)) - C_a)^2)`
//! * `l_dis   = mean((G_r(C_a) - G_r(R_a))^2)` over the code dimensions
//! * `l_dis_content = mean((C_a - C_b)^2)`; the content encoder is the
//!   identity, so this term has no parameters and is reported only
//! * `total = l_harm + w1 * l_recon + w2 * l_dis`
//!
//! Squared errors are means over all elements. Gradients are accumulated by
//! hand-written reverse mode through the pixel transform, the fusion MLP and
//! all three reference-encoder calls.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::features::extract_features;
use super::model::{
    check_finite, mlp_backward, ColorTransform, HarmonizerModel, MlpTrace, CODE_DIM, COEFF_DIM, FUSE_1, FUSE_2,
    PARAM_COUNT, REF_1, REF_2,
};
use crate::augment::TripletSample;
use crate::error::{Error, Result};
use crate::image::ImageF32;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { w1: 0.4, w2: 0.05 }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(self.w1 >= 0.0 && self.w2 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "loss weights must be non-negative, got w1={} w2={}",
                self.w1, self.w2
            )));
        }
        Ok(())
    }

    pub fn combine(&self, l_harm: f64, l_recon: f64, l_dis: f64) -> f64 {
        l_harm + self.w1 * l_recon + self.w2 * l_dis
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossReport {
    pub l_harm: f64,
    pub l_recon: f64,
    pub l_dis: f64,
    pub l_dis_content: f64,
    pub total: f64,
}

impl LossReport {
    pub fn accumulate(&mut self, other: &LossReport) {
        self.l_harm += other.l_harm;
        self.l_recon += other.l_recon;
        self.l_dis += other.l_dis;
        self.l_dis_content += other.l_dis_content;
        self.total += other.total;
    }

    pub fn scaled(&self, s: f64) -> LossReport {
        LossReport {
            l_harm: self.l_harm * s,
            l_recon: self.l_recon * s,
            l_dis: self.l_dis * s,
            l_dis_content: self.l_dis_content * s,
            total: self.total * s,
        }
    }
}

/// Mean squared error of `transform(input)` against `target` and, when
/// requested, its gradient with respect to the 15 raw coefficients.
fn transform_loss(
    transform: &ColorTransform,
    input: &ImageF32,
    target: &ImageF32,
    want_grad: bool,
) -> (f64, [f64; COEFF_DIM]) {
    let n = input.data().len() as f64;
    let mut sse = 0f64;
    // sums of e_c * x_j, e_c, e_c * x_c^2
    let mut ex = [[0f64; 3]; 3];
    let mut e1 = [0f64; 3];
    let mut ex2 = [0f64; 3];
    for (p, q) in input.pixels().zip(target.pixels()) {
        let out = transform.apply_pixel(p);
        let x = [p[0] as f64, p[1] as f64, p[2] as f64];
        for c in 0..3 {
            let e = out[c] - q[c] as f64;
            sse += e * e;
            if want_grad {
                for j in 0..3 {
                    ex[c][j] += e * x[j];
                }
                e1[c] += e;
                ex2[c] += e * x[c] * x[c];
            }
        }
    }
    let mut grad = [0f64; COEFF_DIM];
    if want_grad {
        let k = 2.0 / n;
        for c in 0..3 {
            for j in 0..3 {
                grad[c * 3 + j] = k * ex[c][j];
            }
            grad[9 + c] = k * e1[c];
            grad[12 + c] = k * ex2[c];
        }
    }
    (sse / n, grad)
}

fn mean_sq_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

fn pixel_mse(a: &ImageF32, b: &ImageF32) -> f64 {
    a.data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let d = *x as f64 - *y as f64;
            d * d
        })
        .sum::<f64>()
        / a.data().len() as f64
}

fn check_sizes(t: &TripletSample) -> Result<()> {
    let ca = &t.content_a;
    if !(ca.same_size(&t.content_b) && ca.same_size(&t.ref_a) && ca.same_size(&t.ref_b)) {
        return Err(Error::DimensionMismatch("triplet images must share one size".into()));
    }
    Ok(())
}

fn add_to(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Forward pass over one triplet; accumulates `d total / d params` into
/// `grad` when given.
fn evaluate(
    model: &HarmonizerModel,
    t: &TripletSample,
    w: &LossWeights,
    grad: Option<&mut [f64]>,
) -> Result<LossReport> {
    check_sizes(t)?;
    check_finite(model.params(), "parameters")?;
    let params = model.params();
    let f_ca = extract_features(&t.content_a);
    let f_ra = extract_features(&t.ref_a);
    let f_rb = extract_features(&t.ref_b);

    let ref_b: MlpTrace = model.ref_trace(&f_rb);
    let ref_a: MlpTrace = model.ref_trace(&f_ra);
    let ref_c: MlpTrace = model.ref_trace(&f_ca);
    check_finite(&ref_b.output, "appearance code of R_b")?;
    check_finite(&ref_a.output, "appearance code of R_a")?;
    check_finite(&ref_c.output, "appearance code of C_a")?;

    let fuse_b = model.fusion_trace(&ref_b.output, &f_ca);
    let fuse_a = model.fusion_trace(&ref_a.output, &f_ca);
    check_finite(&fuse_b.output, "fusion output (harmonization pass)")?;
    check_finite(&fuse_a.output, "fusion output (reconstruction pass)")?;
    let tf_b = ColorTransform::from_raw(&fuse_b.output);
    let tf_a = ColorTransform::from_raw(&fuse_a.output);

    let want = grad.is_some();
    let (l_harm, d_coeff_b) = transform_loss(&tf_b, &t.content_a, &t.content_b, want);
    let (l_recon, d_coeff_a) = transform_loss(&tf_a, &t.content_a, &t.content_a, want);
    let l_dis = mean_sq_diff(&ref_c.output, &ref_a.output);
    let l_dis_content = pixel_mse(&t.content_a, &t.content_b);
    let total = w.combine(l_harm, l_recon, l_dis);
    if !(l_harm.is_finite() && l_recon.is_finite() && total.is_finite()) {
        return Err(Error::Numeric { tensor: "loss".into() });
    }
    let report = LossReport {
        l_harm,
        l_recon,
        l_dis,
        l_dis_content,
        total,
    };

    if let Some(grad) = grad {
        // harmonization pass
        let dx_b = mlp_backward(params, FUSE_1, FUSE_2, &fuse_b, &d_coeff_b, grad);
        mlp_backward(params, REF_1, REF_2, &ref_b, &dx_b[..CODE_DIM], grad);

        // reconstruction pass, weighted by w1
        let d_a: Vec<f64> = d_coeff_a.iter().map(|d| w.w1 * d).collect();
        let dx_a = mlp_backward(params, FUSE_1, FUSE_2, &fuse_a, &d_a, grad);

        // disentanglement term on the codes of C_a and R_a, weighted by w2
        let k = w.w2 * 2.0 / CODE_DIM as f64;
        let d_zc: Vec<f64> = ref_c
            .output
            .iter()
            .zip(&ref_a.output)
            .map(|(c, a)| k * (c - a))
            .collect();
        let mut d_za = dx_a[..CODE_DIM].to_vec();
        add_to(&mut d_za, &d_zc.iter().map(|d| -d).collect::<Vec<_>>());
        mlp_backward(params, REF_1, REF_2, &ref_a, &d_za, grad);
        mlp_backward(params, REF_1, REF_2, &ref_c, &d_zc, grad);
        check_finite(grad, "gradient")?;
    }
    Ok(report)
}

pub fn loss_total(model: &HarmonizerModel, t: &TripletSample, w: &LossWeights) -> Result<LossReport> {
    evaluate(model, t, w, None)
}

/// Loss and gradient of `total` for one triplet.
pub fn loss_and_grad(model: &HarmonizerModel, t: &TripletSample, w: &LossWeights) -> Result<(LossReport, Vec<f64>)> {
    let mut grad = vec![0f64; PARAM_COUNT];
    let report = evaluate(model, t, w, Some(&mut grad))?;
    Ok((report, grad))
}

pub fn grad(model: &HarmonizerModel, t: &TripletSample, w: &LossWeights) -> Result<Vec<f64>> {
    loss_and_grad(model, t, w).map(|(_, g)| g)
}

/// Summed loss reports and gradients over a batch. Per-sample work may run
/// in parallel; the reduction always proceeds in index order.
pub fn batch_loss_and_grad(
    model: &HarmonizerModel,
    batch: &[TripletSample],
    w: &LossWeights,
) -> Result<(LossReport, Vec<f64>)> {
    let parts = batch
        .par_iter()
        .map(|t| loss_and_grad(model, t, w))
        .collect::<Result<Vec<_>>>()?;
    let mut report = LossReport::default();
    let mut sum = vec![0f64; PARAM_COUNT];
    for (r, g) in &parts {
        report.accumulate(r);
        add_to(&mut sum, g);
    }
    Ok((report, sum))
}
