//! On-disk triplet datasets.
//!
//! Layout: `<root>/manifest.json` plus four PNGs per sample,
//! `NNNNNN_{ca,cb,ra,rb}.png`. Sample `i` is generated from seed
//! `mix(master_seed, i)`, so the bytes do not depend on the worker count.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{gen_sample, AugmentConfig};
use crate::corpus::CorpusImage;
use crate::error::{Error, Result};
use crate::image::{encode_image, ImageFormat, Rect};
use crate::lut::NamedLut;
use crate::seed::mix;

pub const MANIFEST_VERSION: u32 = 1;
const SUFFIXES: [&str; 4] = ["ca", "cb", "ra", "rb"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub seed: u64,
    pub image_id: String,
    pub lut_a: String,
    pub lut_b: String,
    pub content_rect: Rect,
    pub reference_rect: Rect,
    /// `ca, cb, ra, rb` file names.
    pub files: Vec<String>,
    /// SHA-256 of each PNG, same order as `files`.
    pub sha256: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub config: AugmentConfig,
    pub master_seed: u64,
    pub count: usize,
    pub corpus: Vec<String>,
    pub bank: Vec<String>,
    pub samples: Vec<SampleRecord>,
}

impl DatasetManifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

pub fn worker_pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Generation(format!("thread pool: {e}")))
}

fn write_sample(
    corpus: &[CorpusImage],
    bank: &[NamedLut],
    index: usize,
    master_seed: u64,
    cfg: &AugmentConfig,
    out_dir: &Path,
) -> Result<SampleRecord> {
    let seed = mix(master_seed, index as u64);
    let t = gen_sample(corpus, bank, seed, cfg)?;
    let mut files = Vec::with_capacity(4);
    let mut hashes = Vec::with_capacity(4);
    for (suffix, img) in SUFFIXES.iter().zip([&t.content_a, &t.content_b, &t.ref_a, &t.ref_b]) {
        let name = format!("{index:06}_{suffix}.png");
        let bytes = encode_image(img, ImageFormat::Png)?;
        hashes.push(hex::encode(Sha256::digest(&bytes)));
        let path = out_dir.join(&name);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        files.push(name);
    }
    Ok(SampleRecord {
        index,
        seed,
        image_id: t.provenance.image_id,
        lut_a: t.provenance.appearance_a,
        lut_b: t.provenance.appearance_b,
        content_rect: t.provenance.content_rect,
        reference_rect: t.provenance.reference_rect,
        files,
        sha256: hashes,
    })
}

/// Generates `count` triplets into `out_dir` using `workers` threads and
/// writes the manifest last. Returns the manifest.
pub fn gen_dataset(
    corpus: &[CorpusImage],
    bank: &[NamedLut],
    count: usize,
    master_seed: u64,
    cfg: &AugmentConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<DatasetManifest> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    if cfg.appearance == super::AppearanceMode::Lut && bank.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "LUT bank needs at least 2 entries for distinct pairs, got {}",
            bank.len()
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let pool = worker_pool(workers)?;
    let samples = pool.install(|| {
        (0..count)
            .into_par_iter()
            .map(|i| write_sample(corpus, bank, i, master_seed, cfg, out_dir))
            .collect::<Result<Vec<_>>>()
    })?;

    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        config: cfg.clone(),
        master_seed,
        count,
        corpus: corpus.iter().map(|c| c.id.clone()).collect(),
        bank: bank.iter().map(|l| l.id.clone()).collect(),
        samples,
    };
    let path = out_dir.join("manifest.json");
    std::fs::write(&path, manifest.to_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}
