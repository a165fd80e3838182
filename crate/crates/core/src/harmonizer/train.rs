//! Adam training on triplets generated on the fly.
//!
//! Step `s` draws its batch from sample seeds `mix(seed, s * batch + i)`, so
//! a run is a pure function of the corpus, the bank and the configs. The
//! learning rate holds for `epochs_const` epochs, then falls linearly towards
//! zero over `epochs_decay` epochs.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{batch_loss_and_grad, LossReport, LossWeights};
use super::model::{HarmonizerModel, LAYERS, PARAM_COUNT};
use crate::augment::{gen_sample, AugmentConfig};
use crate::corpus::CorpusImage;
use crate::error::{Error, Result};
use crate::lut::NamedLut;
use crate::seed::mix;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs_const: usize,
    pub epochs_decay: usize,
    pub batch_size: usize,
    /// Optimizer steps per epoch; 0 means one pass over the corpus
    /// (`ceil(corpus / batch_size)`).
    pub steps_per_epoch: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            epochs_const: 70,
            epochs_decay: 30,
            batch_size: 64,
            steps_per_epoch: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            workers: 1,
        }
    }
}

impl TrainConfig {
    /// 2,000 steps of batch 8: 70 constant + 30 decaying epochs of 20 steps.
    pub fn desk() -> Self {
        Self {
            learning_rate: 2e-3,
            batch_size: 8,
            steps_per_epoch: 20,
            ..Self::default()
        }
    }

    pub fn total_epochs(&self) -> usize {
        self.epochs_const + self.epochs_decay
    }

    pub fn steps_per_epoch_for(&self, corpus_len: usize) -> usize {
        if self.steps_per_epoch > 0 {
            self.steps_per_epoch
        } else {
            corpus_len.div_ceil(self.batch_size).max(1)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("beta1", self.beta1),
            ("beta2", self.beta2),
            ("eps", self.eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.beta1 >= 1.0 || self.beta2 >= 1.0 {
            return Err(Error::InvalidArgument("Adam betas must be below 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be positive".into()));
        }
        Ok(())
    }
}

/// Learning rate used throughout epoch `epoch` (0-based).
pub fn learning_rate_at(cfg: &TrainConfig, epoch: usize) -> f64 {
    if epoch < cfg.epochs_const {
        cfg.learning_rate
    } else if cfg.epochs_decay == 0 {
        0.0
    } else {
        let k = (epoch - cfg.epochs_const) as f64;
        (cfg.learning_rate * (1.0 - k / cfg.epochs_decay as f64)).max(0.0)
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

impl Adam {
    pub fn new(n: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            beta1,
            beta2,
            eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub lr: f64,
    /// Mean over the epoch's samples.
    pub loss: LossReport,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Batch-mean total loss of every optimizer step.
    pub step_totals: Vec<f64>,
}

impl TrainHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,l_harm,l_recon,l_dis,l_dis_content,total,lr\n");
        for e in &self.epochs {
            let l = &e.loss;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                e.epoch, l.l_harm, l.l_recon, l.l_dis, l.l_dis_content, l.total, e.lr
            );
        }
        out
    }
}

pub fn train(
    corpus: &[CorpusImage],
    bank: &[NamedLut],
    cfg: &TrainConfig,
    aug: &AugmentConfig,
    weights: &LossWeights,
) -> Result<(HarmonizerModel, TrainHistory)> {
    cfg.validate()?;
    aug.validate()?;
    weights.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    let pool = crate::augment::worker_pool(cfg.workers)?;
    let mut model = HarmonizerModel::init(mix(cfg.seed, u64::MAX));
    let mut adam = Adam::new(PARAM_COUNT, cfg.beta1, cfg.beta2, cfg.eps);
    let mut history = TrainHistory::default();
    let steps_per_epoch = cfg.steps_per_epoch_for(corpus.len());
    let batch = cfg.batch_size;
    let mut step = 0u64;

    for epoch in 0..cfg.total_epochs() {
        let lr = learning_rate_at(cfg, epoch);
        let mut epoch_sum = LossReport::default();
        for _ in 0..steps_per_epoch {
            let base = step * batch as u64;
            let (report, mut g) = pool.install(|| -> Result<_> {
                let samples = (0..batch as u64)
                    .into_par_iter()
                    .map(|i| gen_sample(corpus, bank, mix(cfg.seed, base + i), aug))
                    .collect::<Result<Vec<_>>>()?;
                batch_loss_and_grad(&model, &samples, weights)
            })?;
            let inv = 1.0 / batch as f64;
            g.iter_mut().for_each(|v| *v *= inv);
            adam.step(model.params_mut(), &g, lr);
            history.step_totals.push(report.total * inv);
            epoch_sum.accumulate(&report);
            step += 1;
        }
        let record = EpochRecord {
            epoch,
            lr,
            loss: epoch_sum.scaled(1.0 / (steps_per_epoch * batch) as f64),
        };
        log::debug!("epoch {epoch}: total {:.6} lr {lr:.2e}", record.loss.total);
        history.epochs.push(record);
    }
    Ok((model, history))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    /// `[inputs, outputs]` of each dense layer in storage order.
    pub shapes: Vec<[usize; 2]>,
    pub params: Vec<f64>,
    pub train_config: TrainConfig,
}

impl Checkpoint {
    pub fn new(model: &HarmonizerModel, train_config: &TrainConfig) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            shapes: LAYERS.iter().map(|l| [l.inputs, l.outputs]).collect(),
            params: model.params().to_vec(),
            train_config: train_config.clone(),
        }
    }

    pub fn model(&self) -> Result<HarmonizerModel> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                self.version
            )));
        }
        let expected: Vec<[usize; 2]> = LAYERS.iter().map(|l| [l.inputs, l.outputs]).collect();
        if self.shapes != expected {
            return Err(Error::Checkpoint(format!(
                "layer shapes {:?} do not match {:?}",
                self.shapes, expected
            )));
        }
        HarmonizerModel::from_params(self.params.clone())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Checkpoint(format!("{}: {e}", path.display())))
    }
}
