//! Harmonizer parameters and forward pass.
//!
//! * content encoder: identity (the content crop's pixels pass through)
//! * reference encoder: `30 -> 32 (tanh) -> 16`, appearance code `z`
//! * fusion: `[z, features(content)] 46 -> 32 (tanh) -> 15`, read as the
//!   offsets of a [`ColorTransform`] from the identity
//!
//! All parameters live in one flat `f64` vector, layer by layer, each layer
//! stored as a row-major `out x in` weight matrix followed by its bias.

use rand::Rng;

use super::features::{extract_features, AppearanceFeatures, FEATURE_DIM};
use crate::error::{Error, Result};
use crate::image::ImageF32;
use crate::seed::rng;

pub const CODE_DIM: usize = 16;
pub const REF_HIDDEN: usize = 32;
pub const FUSE_IN: usize = CODE_DIM + FEATURE_DIM;
pub const FUSE_HIDDEN: usize = 32;
pub const COEFF_DIM: usize = 15;

/// A dense layer's slot in the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub offset: usize,
}

impl Dense {
    const fn after(prev_end: usize, inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            offset: prev_end,
        }
    }

    pub const fn param_count(&self) -> usize {
        self.inputs * self.outputs + self.outputs
    }

    pub const fn end(&self) -> usize {
        self.offset + self.param_count()
    }

    #[inline]
    pub fn weights<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset..self.offset + self.inputs * self.outputs]
    }

    #[inline]
    pub fn bias<'a>(&self, params: &'a [f64]) -> &'a [f64] {
        &params[self.offset + self.inputs * self.outputs..self.end()]
    }

    /// `W x + b`
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.inputs);
        let w = self.weights(params);
        self.bias(params)
            .iter()
            .enumerate()
            .map(|(o, b)| {
                let row = &w[o * self.inputs..(o + 1) * self.inputs];
                b + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()
            })
            .collect()
    }

    /// Accumulates `dW += dy x^T`, `db += dy` into `grad` and returns `W^T dy`.
    pub fn backward(&self, params: &[f64], x: &[f64], dy: &[f64], grad: &mut [f64]) -> Vec<f64> {
        let n_in = self.inputs;
        let w = self.weights(params);
        let mut dx = vec![0f64; n_in];
        let (gw, gb) = grad[self.offset..self.end()].split_at_mut(n_in * self.outputs);
        for (o, &d) in dy.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            gb[o] += d;
            let row = &w[o * n_in..(o + 1) * n_in];
            let grow = &mut gw[o * n_in..(o + 1) * n_in];
            for i in 0..n_in {
                grow[i] += d * x[i];
                dx[i] += d * row[i];
            }
        }
        dx
    }
}

pub const REF_1: Dense = Dense::after(0, FEATURE_DIM, REF_HIDDEN);
pub const REF_2: Dense = Dense::after(REF_1.end(), REF_HIDDEN, CODE_DIM);
pub const FUSE_1: Dense = Dense::after(REF_2.end(), FUSE_IN, FUSE_HIDDEN);
pub const FUSE_2: Dense = Dense::after(FUSE_1.end(), FUSE_HIDDEN, COEFF_DIM);
pub const LAYERS: [Dense; 4] = [REF_1, REF_2, FUSE_1, FUSE_2];
pub const REF_PARAMS: usize = REF_2.end();
pub const FUSE_PARAMS: usize = FUSE_2.end() - REF_2.end();
pub const PARAM_COUNT: usize = FUSE_2.end();

/// Per-pixel color transform
/// `out_c = sum_j M[c][j] in_j + b_c + g_c in_c^2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ColorTransform {
    pub m: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub g: [f64; 3],
}

impl ColorTransform {
    pub const IDENTITY: ColorTransform = ColorTransform {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        b: [0.0; 3],
        g: [0.0; 3],
    };

    /// Identity plus the 15 raw network outputs (`M` row-major, then `b`, then `g`).
    pub fn from_raw(raw: &[f64]) -> Self {
        assert_eq!(raw.len(), COEFF_DIM);
        let mut t = Self::IDENTITY;
        for c in 0..3 {
            for j in 0..3 {
                t.m[c][j] += raw[c * 3 + j];
            }
            t.b[c] += raw[9 + c];
            t.g[c] += raw[12 + c];
        }
        t
    }

    #[inline]
    pub fn apply_pixel(&self, p: [f32; 3]) -> [f64; 3] {
        let x = [p[0] as f64, p[1] as f64, p[2] as f64];
        let mut out = [0f64; 3];
        for c in 0..3 {
            out[c] =
                self.m[c][0] * x[0] + self.m[c][1] * x[1] + self.m[c][2] * x[2] + self.b[c] + self.g[c] * x[c] * x[c];
        }
        out
    }

    /// Unclamped output in 64-bit, interleaved RGB.
    pub fn apply_raw(&self, image: &ImageF32) -> Vec<f64> {
        let mut out = Vec::with_capacity(image.data().len());
        for p in image.pixels() {
            out.extend_from_slice(&self.apply_pixel(p));
        }
        out
    }

    /// Output clamped to `[0, 1]`.
    pub fn apply(&self, image: &ImageF32) -> ImageF32 {
        image.map_pixels(|p| self.apply_pixel(p).map(|v| v.clamp(0.0, 1.0) as f32))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HarmonizerModel {
    params: Vec<f64>,
}

/// Intermediate values of a two-layer tanh MLP, kept for backprop.
#[derive(Clone, Debug)]
pub struct MlpTrace {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

pub(crate) fn mlp_forward(params: &[f64], l1: Dense, l2: Dense, input: &[f64]) -> MlpTrace {
    let hidden: Vec<f64> = l1.forward(params, input).into_iter().map(f64::tanh).collect();
    let output = l2.forward(params, &hidden);
    MlpTrace {
        input: input.to_vec(),
        hidden,
        output,
    }
}

/// Backprop through `l2(tanh(l1(x)))`; returns the gradient w.r.t. `x`.
pub(crate) fn mlp_backward(
    params: &[f64],
    l1: Dense,
    l2: Dense,
    trace: &MlpTrace,
    d_out: &[f64],
    grad: &mut [f64],
) -> Vec<f64> {
    let d_hidden = l2.backward(params, &trace.hidden, d_out, grad);
    let d_pre: Vec<f64> = d_hidden
        .iter()
        .zip(&trace.hidden)
        .map(|(d, h)| d * (1.0 - h * h))
        .collect();
    l1.backward(params, &trace.input, &d_pre, grad)
}

pub(crate) fn check_finite(values: &[f64], tensor: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Numeric {
            tensor: tensor.to_string(),
        })
    }
}

impl HarmonizerModel {
    /// Glorot-uniform hidden layers, zero output layers and zero biases, so
    /// the initial transform is the identity.
    pub fn init(seed: u64) -> Self {
        let mut rng = rng(seed);
        let mut params = vec![0f64; PARAM_COUNT];
        for layer in [REF_1, FUSE_1] {
            let limit = (6.0 / (layer.inputs + layer.outputs) as f64).sqrt();
            for w in &mut params[layer.offset..layer.offset + layer.inputs * layer.outputs] {
                *w = rng.gen_range(-limit..=limit);
            }
        }
        Self { params }
    }

    pub fn zeros() -> Self {
        Self {
            params: vec![0.0; PARAM_COUNT],
        }
    }

    pub fn from_params(params: Vec<f64>) -> Result<Self> {
        if params.len() != PARAM_COUNT {
            return Err(Error::Checkpoint(format!(
                "expected {PARAM_COUNT} parameters, got {}",
                params.len()
            )));
        }
        Ok(Self { params })
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub(crate) fn ref_trace(&self, features: &AppearanceFeatures) -> MlpTrace {
        mlp_forward(&self.params, REF_1, REF_2, features.as_slice())
    }

    pub(crate) fn fusion_trace(&self, code: &[f64], content: &AppearanceFeatures) -> MlpTrace {
        let mut input = Vec::with_capacity(FUSE_IN);
        input.extend_from_slice(code);
        input.extend_from_slice(content.as_slice());
        mlp_forward(&self.params, FUSE_1, FUSE_2, &input)
    }

    /// Appearance code of a reference descriptor.
    pub fn ref_encode(&self, features: &AppearanceFeatures) -> Result<Vec<f64>> {
        check_finite(&self.params, "parameters")?;
        let z = self.ref_trace(features).output;
        check_finite(&z, "appearance code")?;
        Ok(z)
    }

    /// Transform that re-grades a content crop with `content` features
    /// towards a reference with appearance code `code`.
    pub fn predict_transform(&self, code: &[f64], content: &AppearanceFeatures) -> Result<ColorTransform> {
        let raw = self.fusion_trace(code, content).output;
        check_finite(&raw, "fusion output")?;
        Ok(ColorTransform::from_raw(&raw))
    }

    pub fn transform_for(&self, content: &ImageF32, reference: &ImageF32) -> Result<ColorTransform> {
        let z = self.ref_encode(&extract_features(reference))?;
        self.predict_transform(&z, &extract_features(content))
    }

    /// Harmonized content, clamped to `[0, 1]`.
    pub fn harmonize(&self, content: &ImageF32, reference: &ImageF32) -> Result<ImageF32> {
        Ok(self.transform_for(content, reference)?.apply(content))
    }
}

/// Free-function form of [`HarmonizerModel::harmonize`].
pub fn harmonize(model: &HarmonizerModel, content: &ImageF32, reference: &ImageF32) -> Result<ImageF32> {
    model.harmonize(content, reference)
}
