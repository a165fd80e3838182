//! Synthetic held-out-LUT benchmark.
//!
//! Each case pastes a region of an image back onto itself after recoloring
//! it with a LUT the model never saw in training. The unmodified image is the
//! ground truth and also the background.
//!
//! Layout: `<root>/manifest.json` plus `NNNN_{bg,fg,mask,gt}.png` per case.

use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{harmonize_composite, HarmonizeOptions};
use crate::augment::worker_pool;
use crate::corpus::CorpusImage;
use crate::error::{Error, Result};
use crate::harmonizer::HarmonizerModel;
use crate::image::{
    composite, crop, decode_image, decode_mask, encode_image, encode_mask, resize_bilinear, ImageF32, ImageFormat,
    Mask, Rect,
};
use crate::lut::{apply_lut_image, NamedLut};
use crate::metrics::{evaluate_pair, AggregateReport, CaseReport};
use crate::seed::{mix, rng};

pub const BENCH_SIDE: usize = 256;
pub const BENCH_VERSION: u32 = 1;
pub const AREA_MIN: f64 = 0.10;
pub const AREA_MAX: f64 = 0.60;
pub const FALLOFF_PX: f32 = 4.0;
const MIN_IMAGE_SIDE: usize = 16;
const MIN_PLACEMENT_SIDE: usize = 8;
const MAX_PLACEMENT_DRAWS: usize = 1000;
const SUFFIXES: [&str; 4] = ["bg", "fg", "mask", "gt"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskStyle {
    #[default]
    Rect,
    Ellipse,
}

impl FromStr for MaskStyle {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rect" => Ok(Self::Rect),
            "ellipse" => Ok(Self::Ellipse),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mask style '{s}' (expected rect or ellipse)"
            ))),
        }
    }
}

impl MaskStyle {
    /// Soft mask of size `w x h` ramping from 0 to 1 over four pixels
    /// inward from the shape boundary.
    pub fn mask(self, w: usize, h: usize) -> Mask {
        let ramp = |d: f32| (d / FALLOFF_PX).clamp(0.0, 1.0);
        match self {
            Self::Rect => Mask::from_fn(w, h, |x, y| {
                let dx = (x as f32 + 0.5).min(w as f32 - x as f32 - 0.5);
                let dy = (y as f32 + 0.5).min(h as f32 - y as f32 - 0.5);
                ramp(dx.min(dy))
            }),
            Self::Ellipse => {
                let (a, b) = (w as f32 / 2.0, h as f32 / 2.0);
                Mask::from_fn(w, h, |x, y| {
                    let u = (x as f32 + 0.5 - a) / a;
                    let v = (y as f32 + 0.5 - b) / b;
                    let rho = (u * u + v * v).sqrt();
                    ramp((1.0 - rho) * a.min(b))
                })
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkCase {
    pub case_id: String,
    pub image_id: String,
    pub background: ImageF32,
    pub foreground: ImageF32,
    pub mask: Mask,
    pub placement: Rect,
    pub ground_truth: ImageF32,
    pub heldout_lut_id: String,
}

impl BenchmarkCase {
    pub fn direct_composite(&self) -> Result<ImageF32> {
        composite(&self.foreground, &self.background, &self.mask, self.placement)
    }
}

fn sample_placement(rng: &mut impl Rng, width: usize, height: usize) -> Result<Rect> {
    if width.min(height) < MIN_IMAGE_SIDE {
        return Err(Error::InvalidArgument(format!(
            "benchmark image {width}x{height} is smaller than {MIN_IMAGE_SIDE}px per side"
        )));
    }
    let area = (width * height) as f64;
    for _ in 0..MAX_PLACEMENT_DRAWS {
        let frac = rng.gen_range(AREA_MIN..AREA_MAX);
        let aspect = rng.gen_range(0.5f64.ln()..2f64.ln()).exp();
        let w = ((frac * area * aspect).sqrt().round() as usize).clamp(1, width);
        let h = ((frac * area / w as f64).round() as usize).clamp(1, height);
        let actual = (w * h) as f64 / area;
        if w < MIN_PLACEMENT_SIDE || h < MIN_PLACEMENT_SIDE || !(AREA_MIN..=AREA_MAX).contains(&actual) {
            continue;
        }
        let x = rng.gen_range(0..=width - w);
        let y = rng.gen_range(0..=height - h);
        return Ok(Rect::new(x, y, w, h));
    }
    Err(Error::Generation(format!(
        "no placement covering {AREA_MIN}-{AREA_MAX} of a {width}x{height} image"
    )))
}

/// Builds `count` cases; case `i` depends only on `mix(seed, i)`.
pub fn synth_benchmark(
    images: &[CorpusImage],
    heldout: &[NamedLut],
    count: usize,
    seed: u64,
    mask_style: MaskStyle,
) -> Result<Vec<BenchmarkCase>> {
    if images.is_empty() || heldout.is_empty() {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one image and one held-out LUT".into(),
        ));
    }
    (0..count)
        .map(|i| {
            let mut r = rng(mix(seed, i as u64));
            let src = &images[r.gen_range(0..images.len())];
            let lut = &heldout[r.gen_range(0..heldout.len())];
            let gt = &src.image;
            let placement = sample_placement(&mut r, gt.width(), gt.height())?;
            let foreground = apply_lut_image(&lut.lut, &crop(gt, placement)?);
            Ok(BenchmarkCase {
                case_id: format!("case_{i:04}"),
                image_id: src.id.clone(),
                background: gt.clone(),
                foreground,
                mask: mask_style.mask(placement.w, placement.h),
                placement,
                ground_truth: gt.clone(),
                heldout_lut_id: lut.id.clone(),
            })
        })
        .collect()
}

fn at_bench_size(image: &ImageF32) -> Result<ImageF32> {
    resize_bilinear(image, BENCH_SIDE, BENCH_SIDE)
}

/// Scores `output(case)` and the direct composite against ground truth,
/// all resized to 256x256. Results are in case order for any worker count.
pub fn score_cases<F>(cases: &[BenchmarkCase], workers: usize, output: F) -> Result<AggregateReport>
where
    F: Fn(&BenchmarkCase) -> Result<ImageF32> + Sync,
{
    if cases.is_empty() {
        return Err(Error::InvalidArgument("benchmark has no cases".into()));
    }
    let pool = worker_pool(workers)?;
    let reports = pool.install(|| {
        cases
            .par_iter()
            .map(|case| {
                let out = at_bench_size(&output(case)?)?;
                let dc = at_bench_size(&case.direct_composite()?)?;
                let gt = at_bench_size(&case.ground_truth)?;
                let (method, baseline) = evaluate_pair(&out, &gt, &dc)?;
                Ok(CaseReport {
                    case_id: case.case_id.clone(),
                    method,
                    baseline,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(AggregateReport::from_cases(reports))
}

pub fn run_benchmark(
    model: &HarmonizerModel,
    cases: &[BenchmarkCase],
    opts: &HarmonizeOptions,
    workers: usize,
) -> Result<AggregateReport> {
    opts.validate()?;
    score_cases(cases, workers, |c| {
        harmonize_composite(model, &c.foreground, &c.background, &c.mask, c.placement, opts)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseRecord {
    pub case_id: String,
    pub image_id: String,
    pub heldout_lut_id: String,
    pub placement: Rect,
    /// `bg, fg, mask, gt` file names.
    pub files: Vec<String>,
    pub sha256: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkManifest {
    pub version: u32,
    pub seed: u64,
    pub count: usize,
    pub mask_style: MaskStyle,
    pub heldout: Vec<String>,
    pub cases: Vec<CaseRecord>,
}

impl BenchmarkManifest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(self.to_bytes()))
    }
}

fn write_case(index: usize, case: &BenchmarkCase, dir: &Path) -> Result<CaseRecord> {
    let blobs = [
        encode_image(&case.background, ImageFormat::Png)?,
        encode_image(&case.foreground, ImageFormat::Png)?,
        encode_mask(&case.mask, ImageFormat::Png)?,
        encode_image(&case.ground_truth, ImageFormat::Png)?,
    ];
    let mut files = Vec::with_capacity(4);
    let mut hashes = Vec::with_capacity(4);
    for (suffix, bytes) in SUFFIXES.iter().zip(&blobs) {
        let name = format!("{index:04}_{suffix}.png");
        let path = dir.join(&name);
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        hashes.push(hex::encode(Sha256::digest(bytes)));
        files.push(name);
    }
    Ok(CaseRecord {
        case_id: case.case_id.clone(),
        image_id: case.image_id.clone(),
        heldout_lut_id: case.heldout_lut_id.clone(),
        placement: case.placement,
        files,
        sha256: hashes,
    })
}

/// Writes case PNGs with `workers` threads, then the manifest.
pub fn write_benchmark(
    cases: &[BenchmarkCase],
    seed: u64,
    mask_style: MaskStyle,
    heldout: &[NamedLut],
    dir: &Path,
    workers: usize,
) -> Result<BenchmarkManifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let pool = worker_pool(workers)?;
    let records = pool.install(|| {
        cases
            .par_iter()
            .enumerate()
            .map(|(i, c)| write_case(i, c, dir))
            .collect::<Result<Vec<_>>>()
    })?;
    let manifest = BenchmarkManifest {
        version: BENCH_VERSION,
        seed,
        count: cases.len(),
        mask_style,
        heldout: heldout.iter().map(|l| l.id.clone()).collect(),
        cases: records,
    };
    let path = dir.join("manifest.json");
    std::fs::write(&path, manifest.to_bytes()).map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn read(dir: &Path, name: &str) -> Result<Vec<u8>> {
    let path = dir.join(name);
    std::fs::read(&path).map_err(|e| Error::io(&path, e))
}

/// Reads a benchmark written by [`write_benchmark`]. Pixel values carry
/// 8-bit quantization.
pub fn load_benchmark(dir: &Path) -> Result<(BenchmarkManifest, Vec<BenchmarkCase>)> {
    let manifest: BenchmarkManifest = serde_json::from_slice(&read(dir, "manifest.json")?)?;
    let cases = manifest
        .cases
        .iter()
        .map(|rec| {
            if rec.files.len() != 4 {
                return Err(Error::decode(
                    "files",
                    format!("case {} lists {} files", rec.case_id, rec.files.len()),
                ));
            }
            let image = |i: usize| decode_image(&read(dir, &rec.files[i])?, ImageFormat::Png);
            let case = BenchmarkCase {
                case_id: rec.case_id.clone(),
                image_id: rec.image_id.clone(),
                background: image(0)?,
                foreground: image(1)?,
                mask: decode_mask(&read(dir, &rec.files[2])?, ImageFormat::Png)?,
                placement: rec.placement,
                ground_truth: image(3)?,
                heldout_lut_id: rec.heldout_lut_id.clone(),
            };
            case.placement
                .validate(case.background.width(), case.background.height())?;
            Ok(case)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((manifest, cases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic_corpus;
    use crate::lut::{identity_lut, synthetic_bank, SmoothLutParams};

    fn images() -> Vec<CorpusImage> {
        synthetic_corpus(4, 11, 96, 72)
    }

    fn heldout() -> Vec<NamedLut> {
        synthetic_bank("held", 2, 5, &SmoothLutParams::default())
    }

    #[test]
    fn area_fractions_in_range() {
        let cases = synth_benchmark(&images(), &heldout(), 100, 3, MaskStyle::Rect).unwrap();
        for c in &cases {
            let f = c.placement.area() as f64 / c.ground_truth.pixel_count() as f64;
            assert!((AREA_MIN..=AREA_MAX).contains(&f), "{f}");
            assert!(c.placement.fits(c.ground_truth.width(), c.ground_truth.height()));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = synth_benchmark(&images(), &heldout(), 10, 8, MaskStyle::Ellipse).unwrap();
        let b = synth_benchmark(&images(), &heldout(), 10, 8, MaskStyle::Ellipse).unwrap();
        assert_eq!(a, b);
        let c = synth_benchmark(&images(), &heldout(), 10, 9, MaskStyle::Ellipse).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn identity_lut_gives_exact_direct_composite() {
        let id = vec![NamedLut {
            id: "identity".into(),
            lut: identity_lut(17).unwrap(),
        }];
        let cases = synth_benchmark(&images(), &id, 5, 1, MaskStyle::Rect).unwrap();
        for c in &cases {
            let dc = c.direct_composite().unwrap();
            let max = dc
                .data()
                .iter()
                .zip(c.ground_truth.data())
                .map(|(a, b)| (a - b).abs())
                .fold(0f32, f32::max);
            assert!(max < 1e-6, "{max}");
        }
    }

    #[test]
    fn masks_have_soft_edges() {
        for style in [MaskStyle::Rect, MaskStyle::Ellipse] {
            let m = style.mask(40, 30);
            assert_eq!(m.at(20, 15), 1.0);
            assert!(m.at(0, 15) < 0.2);
            assert!(m.data().iter().all(|v| (0.0..=1.0).contains(v)));
        }
        let m = MaskStyle::Rect.mask(40, 30);
        assert_eq!(m.at(1, 15), 0.375);
        assert_eq!(m.at(4, 15), 1.0);
        assert_eq!(MaskStyle::Ellipse.mask(40, 30).at(0, 0), 0.0);
    }

    #[test]
    fn untrained_model_matches_baseline() {
        let cases = synth_benchmark(&images(), &heldout(), 6, 2, MaskStyle::Rect).unwrap();
        let r = run_benchmark(&HarmonizerModel::init(4), &cases, &HarmonizeOptions::default(), 2).unwrap();
        for c in &r.cases {
            assert_eq!(c.method, c.baseline);
        }
        assert_eq!(r.method, r.baseline);
        assert_eq!(r.method_wins, 0);
    }

    #[test]
    fn oracle_output_is_perfect() {
        let cases = synth_benchmark(&images(), &heldout(), 4, 2, MaskStyle::Ellipse).unwrap();
        let r = score_cases(&cases, 1, |c| Ok(c.ground_truth.clone())).unwrap();
        assert_eq!(r.method.median.psnr, f64::INFINITY);
        assert!((r.method.mean.ssim - 1.0).abs() < 1e-9);
        assert_eq!(r.method.mean.mse, 0.0);
    }

    #[test]
    fn write_and_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let held = heldout();
        let cases = synth_benchmark(&images(), &held, 3, 4, MaskStyle::Rect).unwrap();
        let m = write_benchmark(&cases, 4, MaskStyle::Rect, &held, dir.path(), 2).unwrap();
        let (back, loaded) = load_benchmark(dir.path()).unwrap();
        assert_eq!(back, m);
        assert_eq!(loaded.len(), 3);
        for (a, b) in cases.iter().zip(&loaded) {
            assert_eq!(a.placement, b.placement);
            let max = a
                .foreground
                .data()
                .iter()
                .zip(b.foreground.data())
                .map(|(x, y)| (x - y).abs())
                .fold(0f32, f32::max);
            assert!(max <= 0.5 / 255.0 + 1e-6);
        }
    }

    #[test]
    fn rejects_tiny_images_and_empty_inputs() {
        let tiny = vec![CorpusImage {
            id: "t".into(),
            image: ImageF32::filled(8, 8, [0.5; 3]),
        }];
        assert!(synth_benchmark(&tiny, &heldout(), 1, 0, MaskStyle::Rect).is_err());
        assert!(synth_benchmark(&images(), &[], 1, 0, MaskStyle::Rect).is_err());
        assert!(score_cases(&[], 1, |c| Ok(c.ground_truth.clone())).is_err());
    }
}
