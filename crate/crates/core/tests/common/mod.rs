#![allow(dead_code)]

use harmony_core::augment::{gen_sample, AugmentConfig, TripletSample};
use harmony_core::corpus::{synthetic_corpus, CorpusImage};
use harmony_core::harmonizer::{extract_features, HarmonizerModel, PARAM_COUNT};
use harmony_core::image::ImageF32;
use harmony_core::lut::{synthetic_bank, NamedLut, SmoothLutParams};
use harmony_core::pipeline::{synth_benchmark, BenchmarkCase, MaskStyle};
use harmony_core::seed::mix;
use rand::{Rng, SeedableRng};

// Straight-line forward pass written against the documented parameter
// layout: for each dense layer, an `outputs x inputs` row-major weight
// matrix followed by the bias; layers G_r (30-32-16) then F (46-32-15).

fn dense(p: &[f64], off: &mut usize, n_in: usize, n_out: usize, x: &[f64]) -> Vec<f64> {
    let w = &p[*off..*off + n_in * n_out];
    let b = &p[*off + n_in * n_out..*off + n_in * n_out + n_out];
    *off += n_in * n_out + n_out;
    (0..n_out)
        .map(|o| b[o] + (0..n_in).map(|i| w[o * n_in + i] * x[i]).sum::<f64>())
        .collect()
}

fn ref_code(p: &[f64], img: &ImageF32) -> Vec<f64> {
    let f = extract_features(img);
    let mut off = 0;
    let h: Vec<f64> = dense(p, &mut off, 30, 32, &f.0).into_iter().map(f64::tanh).collect();
    dense(p, &mut off, 32, 16, &h)
}

fn regrade(p: &[f64], content: &ImageF32, code: &[f64]) -> Vec<f64> {
    let mut input = code.to_vec();
    input.extend_from_slice(&extract_features(content).0);
    let mut off = 30 * 32 + 32 + 32 * 16 + 16;
    let h: Vec<f64> = dense(p, &mut off, 46, 32, &input).into_iter().map(f64::tanh).collect();
    let k = dense(p, &mut off, 32, 15, &h);
    let mut out = Vec::new();
    for px in content.pixels() {
        let x = px.map(f64::from);
        for c in 0..3 {
            let lin: f64 = (0..3).map(|j| k[3 * c + j] * x[j]).sum();
            out.push(x[c] + lin + k[9 + c] + k[12 + c] * x[c] * x[c]);
        }
    }
    out
}

fn mse(a: &[f64], b: &ImageF32) -> f64 {
    a.iter()
        .zip(b.data())
        .map(|(x, y)| (x - *y as f64).powi(2))
        .sum::<f64>()
        / a.len() as f64
}

/// `(l_harm, l_recon, l_dis, total)` with weights 0.4 / 0.05.
pub fn oracle_losses(p: &[f64], t: &TripletSample) -> (f64, f64, f64, f64) {
    let harm = mse(&regrade(p, &t.content_a, &ref_code(p, &t.ref_b)), &t.content_b);
    let recon = mse(&regrade(p, &t.content_a, &ref_code(p, &t.ref_a)), &t.content_a);
    let (zc, zr) = (ref_code(p, &t.content_a), ref_code(p, &t.ref_a));
    let dis = zc.iter().zip(&zr).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / 16.0;
    (harm, recon, dis, harm + 0.4 * recon + 0.05 * dis)
}

/// Model with every parameter drawn from `U(-scale, scale)`.
pub fn random_model(seed: u64, scale: f64) -> HarmonizerModel {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let params = (0..PARAM_COUNT).map(|_| rng.gen_range(-scale..scale)).collect();
    HarmonizerModel::from_params(params).unwrap()
}

pub fn small_world(seed: u64) -> (Vec<CorpusImage>, Vec<NamedLut>) {
    (
        synthetic_corpus(3, seed, 96, 80),
        synthetic_bank("t", 4, seed + 1, &SmoothLutParams::default()),
    )
}

pub fn random_triplet(seed: u64) -> TripletSample {
    let (corpus, bank) = small_world(seed);
    gen_sample(&corpus, &bank, mix(seed, 7), &AugmentConfig::desk()).unwrap()
}

/// Everything the desk-scale experiments share for one seed: a 24-image
/// training corpus, 12 training LUTs, 4 held-out LUTs (strength 0.5) and
/// 50 benchmark cases on separate images.
pub struct DeskSetup {
    pub corpus: Vec<CorpusImage>,
    pub bank: Vec<NamedLut>,
    pub heldout: Vec<NamedLut>,
    pub cases: Vec<BenchmarkCase>,
}

pub const DESK_CORPUS: usize = 24;
pub const DESK_CASES: usize = 50;

impl DeskSetup {
    pub fn new(seed: u64) -> Self {
        let params = SmoothLutParams {
            strength: 0.5,
            ..SmoothLutParams::default()
        };
        let corpus = synthetic_corpus(DESK_CORPUS, mix(seed, 1), 160, 120);
        let bank = synthetic_bank("train", 12, mix(seed, 2), &params);
        let heldout = synthetic_bank("held", 4, mix(seed, 3), &params);
        let images = synthetic_corpus(10, mix(seed, 4), 160, 120);
        let cases = synth_benchmark(&images, &heldout, DESK_CASES, mix(seed, 5), MaskStyle::Rect).unwrap();
        Self {
            corpus,
            bank,
            heldout,
            cases,
        }
    }
}
