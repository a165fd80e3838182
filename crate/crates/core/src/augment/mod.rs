//! Dual data augmentation: pseudo training triplets from unlabeled images.
//!
//! A source photo is rescaled to a jittered short side, two overlapping
//! square crops are drawn (content and reference), and both crops are
//! re-graded under two different appearances `a` and `b`. The content crop
//! under `b` serves as the pseudo ground truth for harmonizing the content
//! crop under `a` towards the reference crop under `b`.

mod appearance;
mod dataset;

pub use appearance::{
    color_transfer_meanstd, saturation_jitter, Appearance, AppearanceDraw, AppearanceMode, ChannelStats, StatsTransfer,
};
pub use dataset::{gen_dataset, worker_pool, DatasetManifest, SampleRecord, MANIFEST_VERSION};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusImage;
use crate::error::{Error, Result};
use crate::image::{crop, resize_short_side, ImageF32, Rect};
use crate::lut::NamedLut;
use crate::seed::rng;

pub const MIN_SOURCE_SIDE: usize = 64;
pub const MAX_CROP_DRAWS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CropMode {
    #[default]
    MultiCrop,
    SingleCrop,
}

impl std::str::FromStr for CropMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "multi_crop" => Ok(Self::MultiCrop),
            "single_crop" => Ok(Self::SingleCrop),
            other => Err(format!(
                "unknown crop mode '{other}' (expected multi_crop or single_crop)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub jitter_min: usize,
    pub jitter_max: usize,
    pub crop_size: usize,
    pub overlap_min: f64,
    pub overlap_max: f64,
    pub min_offset: usize,
    pub mode: CropMode,
    pub appearance: AppearanceMode,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            jitter_min: 256,
            jitter_max: 320,
            crop_size: 224,
            overlap_min: 0.2,
            overlap_max: 0.9,
            min_offset: 8,
            mode: CropMode::MultiCrop,
            appearance: AppearanceMode::Lut,
        }
    }
}

impl AugmentConfig {
    /// Small crops for CPU-scale experiments.
    pub fn desk() -> Self {
        Self {
            jitter_min: 72,
            jitter_max: 88,
            crop_size: 56,
            min_offset: 4,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.jitter_min > self.jitter_max {
            return bad(format!(
                "jitter_min {} exceeds jitter_max {}",
                self.jitter_min, self.jitter_max
            ));
        }
        if self.crop_size == 0 || self.crop_size > self.jitter_min {
            return bad(format!(
                "crop_size {} must be in [1, jitter_min = {}]",
                self.crop_size, self.jitter_min
            ));
        }
        if !(0.0 <= self.overlap_min && self.overlap_min <= self.overlap_max && self.overlap_max <= 1.0) {
            return bad(format!(
                "overlap window [{}, {}] must satisfy 0 <= min <= max <= 1",
                self.overlap_min, self.overlap_max
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CropPair {
    pub content: Rect,
    pub reference: Rect,
    pub resized: ImageF32,
}

fn random_square(rng: &mut impl Rng, width: usize, height: usize, size: usize) -> Rect {
    Rect::new(
        rng.gen_range(0..=width - size),
        rng.gen_range(0..=height - size),
        size,
        size,
    )
}

/// Whether two equally sized crops satisfy the overlap window and the
/// minimum top-left offset.
pub fn crop_pair_admissible(a: &Rect, b: &Rect, cfg: &AugmentConfig) -> bool {
    let frac = a.intersection_area(b) as f64 / a.area() as f64;
    let moved = a.x.abs_diff(b.x) >= cfg.min_offset || a.y.abs_diff(b.y) >= cfg.min_offset;
    frac >= cfg.overlap_min && frac <= cfg.overlap_max && moved
}

/// Rescales `image` to a random short side in `[jitter_min, jitter_max]` and
/// draws the content and reference crops by rejection sampling.
pub fn sample_crop_pair(image: &ImageF32, seed: u64, cfg: &AugmentConfig) -> Result<CropPair> {
    cfg.validate()?;
    let short = image.width().min(image.height());
    if short < MIN_SOURCE_SIDE {
        return Err(Error::Generation(format!(
            "source short side {short} below minimum {MIN_SOURCE_SIDE}"
        )));
    }
    let mut rng = rng(seed);
    let side = rng.gen_range(cfg.jitter_min..=cfg.jitter_max);
    let resized = resize_short_side(image, side)?;
    let (w, h, c) = (resized.width(), resized.height(), cfg.crop_size);

    let content = random_square(&mut rng, w, h, c);
    if cfg.mode == CropMode::SingleCrop {
        return Ok(CropPair {
            content,
            reference: content,
            resized,
        });
    }
    for _ in 0..MAX_CROP_DRAWS {
        let reference = random_square(&mut rng, w, h, c);
        if crop_pair_admissible(&content, &reference, cfg) {
            return Ok(CropPair {
                content,
                reference,
                resized,
            });
        }
    }
    Err(Error::Generation(format!(
        "no admissible crop pair after {MAX_CROP_DRAWS} draws ({w}x{h}, crop {c})"
    )))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub image_id: String,
    pub seed: u64,
    pub content_rect: Rect,
    pub reference_rect: Rect,
    pub appearance_a: String,
    pub appearance_b: String,
}

/// One self-supervised training unit.
#[derive(Clone, Debug, PartialEq)]
pub struct TripletSample {
    /// Content crop under appearance `a`.
    pub content_a: ImageF32,
    /// Content crop under appearance `b` (pseudo ground truth).
    pub content_b: ImageF32,
    /// Reference crop under appearance `a`.
    pub ref_a: ImageF32,
    /// Reference crop under appearance `b`.
    pub ref_b: ImageF32,
    pub provenance: Provenance,
}

fn build_triplet(
    source: &CorpusImage,
    a: (&Appearance, String),
    b: (&Appearance, String),
    pair: &CropPair,
    seed: u64,
) -> Result<TripletSample> {
    let content = crop(&pair.resized, pair.content)?;
    let reference = crop(&pair.resized, pair.reference)?;
    Ok(TripletSample {
        content_a: a.0.apply(&content),
        content_b: b.0.apply(&content),
        ref_a: a.0.apply(&reference),
        ref_b: b.0.apply(&reference),
        provenance: Provenance {
            image_id: source.id.clone(),
            seed,
            content_rect: pair.content,
            reference_rect: pair.reference,
            appearance_a: a.1,
            appearance_b: b.1,
        },
    })
}

/// Triplet under two LUTs. Identical LUTs are allowed here (useful for
/// ablations); dataset generation always draws distinct ones.
pub fn gen_triplet(
    source: &CorpusImage,
    lut_a: &NamedLut,
    lut_b: &NamedLut,
    seed: u64,
    cfg: &AugmentConfig,
) -> Result<TripletSample> {
    let pair = sample_crop_pair(&source.image, seed, cfg)?;
    build_triplet(
        source,
        (&Appearance::Lut(lut_a), lut_a.id.clone()),
        (&Appearance::Lut(lut_b), lut_b.id.clone()),
        &pair,
        seed,
    )
}

/// Everything random about one sample, drawn from its own seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplePlan {
    pub image_index: usize,
    pub appearance_a: AppearanceDraw,
    pub appearance_b: AppearanceDraw,
    pub crop_seed: u64,
}

/// Ordered pair of distinct indices in `0..bank_len`, uniform over all
/// `bank_len * (bank_len - 1)` choices.
pub fn draw_lut_pair(rng: &mut impl Rng, bank_len: usize) -> (usize, usize) {
    let a = rng.gen_range(0..bank_len);
    let mut b = rng.gen_range(0..bank_len - 1);
    if b >= a {
        b += 1;
    }
    (a, b)
}

pub fn plan_sample(sample_seed: u64, corpus_len: usize, bank_len: usize, mode: AppearanceMode) -> Result<SamplePlan> {
    if corpus_len == 0 {
        return Err(Error::InvalidArgument("corpus is empty".into()));
    }
    let mut rng = rng(sample_seed);
    let image_index = rng.gen_range(0..corpus_len);
    let (appearance_a, appearance_b) = match mode {
        AppearanceMode::Lut => {
            if bank_len < 2 {
                return Err(Error::InvalidArgument(format!(
                    "LUT bank needs at least 2 entries for distinct pairs, got {bank_len}"
                )));
            }
            let (a, b) = draw_lut_pair(&mut rng, bank_len);
            (AppearanceDraw::Lut(a), AppearanceDraw::Lut(b))
        }
        other => (
            AppearanceDraw::sample(other, &mut rng),
            AppearanceDraw::sample(other, &mut rng),
        ),
    };
    Ok(SamplePlan {
        image_index,
        appearance_a,
        appearance_b,
        crop_seed: rng.gen(),
    })
}

/// Generates the triplet for sample seed `sample_seed`. This is the single
/// entry point shared by dataset generation and on-the-fly training.
pub fn gen_sample(
    corpus: &[CorpusImage],
    bank: &[NamedLut],
    sample_seed: u64,
    cfg: &AugmentConfig,
) -> Result<TripletSample> {
    let plan = plan_sample(sample_seed, corpus.len(), bank.len(), cfg.appearance)?;
    let source = &corpus[plan.image_index];
    let pair = sample_crop_pair(&source.image, plan.crop_seed, cfg)?;
    let a = Appearance::bind(&plan.appearance_a, bank, &pair.resized);
    let b = Appearance::bind(&plan.appearance_b, bank, &pair.resized);
    build_triplet(
        source,
        (&a, plan.appearance_a.label(bank)),
        (&b, plan.appearance_b.label(bank)),
        &pair,
        sample_seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic_photo;
    use crate::lut::{identity_lut, random_smooth_lut};

    fn source() -> CorpusImage {
        CorpusImage {
            id: "img".into(),
            image: synthetic_photo(120, 90, 4),
        }
    }

    fn named(id: &str, lut: crate::lut::Lut3d) -> NamedLut {
        NamedLut { id: id.into(), lut }
    }

    #[test]
    fn config_validation() {
        assert!(AugmentConfig::default().validate().is_ok());
        assert!(AugmentConfig::desk().validate().is_ok());
        let c = AugmentConfig {
            crop_size: 300,
            ..AugmentConfig::default()
        };
        assert!(c.validate().is_err());
        let c = AugmentConfig {
            overlap_min: 0.95,
            ..AugmentConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn small_source_is_rejected() {
        let img = ImageF32::filled(63, 200, [0.5; 3]);
        assert!(matches!(
            sample_crop_pair(&img, 1, &AugmentConfig::desk()),
            Err(Error::Generation(_))
        ));
    }

    #[test]
    fn single_crop_mode_repeats_rect() {
        let cfg = AugmentConfig {
            mode: CropMode::SingleCrop,
            ..AugmentConfig::desk()
        };
        let p = sample_crop_pair(&source().image, 9, &cfg).unwrap();
        assert_eq!(p.content, p.reference);
    }

    #[test]
    fn multi_crop_pairs_respect_window() {
        let cfg = AugmentConfig::desk();
        let img = source().image;
        for seed in 0..1000 {
            let p = sample_crop_pair(&img, seed, &cfg).unwrap();
            assert!(crop_pair_admissible(&p.content, &p.reference, &cfg));
            let short = p.resized.width().min(p.resized.height());
            assert!((cfg.jitter_min..=cfg.jitter_max).contains(&short));
            assert!(p.content.fits(p.resized.width(), p.resized.height()));
            assert!(p.reference.fits(p.resized.width(), p.resized.height()));
        }
    }

    #[test]
    fn full_scale_defaults_work() {
        let img = synthetic_photo(400, 300, 2);
        let p = sample_crop_pair(&img, 3, &AugmentConfig::default()).unwrap();
        assert_eq!(p.content.w, 224);
        assert!(crop_pair_admissible(
            &p.content,
            &p.reference,
            &AugmentConfig::default()
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = AugmentConfig::desk();
        let img = source().image;
        assert_eq!(
            sample_crop_pair(&img, 77, &cfg).unwrap(),
            sample_crop_pair(&img, 77, &cfg).unwrap()
        );
    }

    #[test]
    fn identity_luts_give_raw_crops() {
        let id = named("id", identity_lut(17).unwrap());
        let cfg = AugmentConfig::desk();
        let src = source();
        let t = gen_triplet(&src, &id, &id, 5, &cfg).unwrap();
        assert_eq!(t.content_a, t.content_b);
        let pair = sample_crop_pair(&src.image, 5, &cfg).unwrap();
        let raw = crop(&pair.resized, pair.content).unwrap();
        for (a, b) in raw.data().iter().zip(t.content_a.data()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn triplet_shares_geometry_and_size() {
        let a = named("a", random_smooth_lut(1, 0.5));
        let b = named("b", random_smooth_lut(2, 0.5));
        let cfg = AugmentConfig::desk();
        let src = source();
        let t = gen_triplet(&src, &a, &b, 11, &cfg).unwrap();
        for img in [&t.content_a, &t.content_b, &t.ref_a, &t.ref_b] {
            assert_eq!((img.width(), img.height()), (56, 56));
        }
        let pair = sample_crop_pair(&src.image, 11, &cfg).unwrap();
        assert_eq!(t.provenance.content_rect, pair.content);
        assert_eq!(t.provenance.reference_rect, pair.reference);
        let content = crop(&pair.resized, pair.content).unwrap();
        assert_eq!(t.content_b, crate::lut::apply_lut_image(&b.lut, &content));
        assert_eq!(
            (t.provenance.appearance_a.as_str(), t.provenance.appearance_b.as_str()),
            ("a", "b")
        );
    }

    #[test]
    fn lut_pairs_are_distinct_and_cover_all_ordered_pairs() {
        let mut rng = rng(3);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..200_000 {
            let (a, b) = draw_lut_pair(&mut rng, 100);
            assert_ne!(a, b);
            seen.insert((a, b));
        }
        assert_eq!(seen.len(), 100 * 99);
    }

    #[test]
    fn plan_rejects_tiny_bank() {
        assert!(plan_sample(1, 3, 1, AppearanceMode::Lut).is_err());
        assert!(plan_sample(1, 0, 5, AppearanceMode::Lut).is_err());
        assert!(plan_sample(1, 3, 0, AppearanceMode::Saturation).is_ok());
    }

    #[test]
    fn baseline_appearances_are_consistent_across_crops() {
        let corpus = vec![source()];
        for mode in [AppearanceMode::ColorTransfer, AppearanceMode::Saturation] {
            let cfg = AugmentConfig {
                appearance: mode,
                ..AugmentConfig::desk()
            };
            let t = gen_sample(&corpus, &[], 21, &cfg).unwrap();
            assert_ne!(t.content_a, t.content_b);
            assert!(t.provenance.appearance_a != t.provenance.appearance_b);
        }
    }
}
