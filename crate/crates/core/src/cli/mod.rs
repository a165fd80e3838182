//! The `harmony` command line. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 on a
//! runtime failure, 2 on invalid input.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::augment::{gen_dataset, AppearanceMode, CropMode};
use crate::config::{AblationCell, Preset, RunConfig};
use crate::corpus::{load_corpus, synthetic_corpus};
use crate::error::{Error, Result};
use crate::harmonizer::{train, Checkpoint, HarmonizerModel, TrainHistory};
use crate::image::{decode_image, decode_mask, encode_image, ImageF32, ImageFormat, Mask, Rect};
use crate::lut::{
    apply_lut_image, load_bank, parse_cube, synthetic_bank, write_cube, Lut3d, NamedLut, SmoothLutParams,
};
use crate::metrics::AggregateReport;
use crate::pipeline::{
    harmonize_composite, harmonize_composite_highres, load_benchmark, locality_rect, run_benchmark, synth_benchmark,
    write_benchmark, BenchmarkCase, MaskStyle,
};

#[derive(Debug, Parser)]
#[command(name = "harmony", version, about = "Self-supervised image harmonization toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthetic photo corpora.
    #[command(subcommand)]
    Corpus(CorpusCmd),
    /// Apply, validate or generate .cube LUTs.
    #[command(subcommand)]
    Lut(LutCmd),
    /// Triplet dataset generation.
    #[command(subcommand)]
    Augment(AugmentCmd),
    /// Train a harmonizer on triplets generated on the fly.
    Train(TrainArgs),
    /// Harmonize one foreground into a background.
    Harmonize(HarmonizeArgs),
    /// Score a model on a held-out-LUT benchmark.
    Evaluate(EvaluateArgs),
    /// Train and score every ablation cell.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
pub enum CorpusCmd {
    /// Render synthetic photos as PNGs.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 24)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 160)]
        width: usize,
        #[arg(long, default_value_t = 120)]
        height: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum LutCmd {
    /// Apply a LUT to an image.
    Apply {
        #[arg(long)]
        lut: PathBuf,
        input: PathBuf,
        output: PathBuf,
    },
    /// Check a .cube file; optionally write its canonical form.
    Validate {
        file: PathBuf,
        #[arg(long)]
        canonical: Option<PathBuf>,
    },
    /// Generate a bank of smooth random LUTs.
    Gen {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 16)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        strength: f64,
        #[arg(long, default_value_t = crate::lut::DEFAULT_SYNTH_SIZE)]
        size: usize,
        #[arg(long, default_value = "lut")]
        prefix: String,
        /// Tone curves only, no cross-channel mixing.
        #[arg(long)]
        no_mixing: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum AugmentCmd {
    /// Write `count` triplets plus a manifest.
    GenTriplets {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        bank: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        augment: AugmentOverrides,
    },
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// TOML run configuration; its keys override the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Base configuration: paper or desk.
    #[arg(long, default_value = "paper")]
    pub preset: Preset,
    /// Worker threads for generation, training and scoring.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct AugmentOverrides {
    /// multi_crop or single_crop.
    #[arg(long)]
    pub mode: Option<CropMode>,
    /// lut, color_transfer or saturation.
    #[arg(long)]
    pub appearance: Option<AppearanceMode>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs_const: Option<usize>,
    #[arg(long)]
    pub epochs_decay: Option<usize>,
    #[arg(long)]
    pub steps_per_epoch: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long, conflicts_with = "no_recon_loss")]
    pub w1: Option<f64>,
    #[arg(long, conflicts_with = "no_dis_loss")]
    pub w2: Option<f64>,
    #[arg(long)]
    pub no_recon_loss: bool,
    #[arg(long)]
    pub no_dis_loss: bool,
}

#[derive(Debug, Clone, Default, Args)]
pub struct BenchOverrides {
    /// Number of benchmark cases to synthesize.
    #[arg(long)]
    pub cases: Option<usize>,
    #[arg(long)]
    pub bench_seed: Option<u64>,
    /// rect or ellipse.
    #[arg(long)]
    pub mask_style: Option<MaskStyle>,
    /// Reference = background crop around the placement.
    #[arg(long)]
    pub locality: bool,
    #[arg(long)]
    pub expand: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub augment: AugmentOverrides,
    #[command(flatten)]
    pub train: TrainOverrides,
}

#[derive(Debug, Args)]
pub struct HarmonizeArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub fg: PathBuf,
    #[arg(long)]
    pub bg: PathBuf,
    #[arg(long)]
    pub mask: PathBuf,
    /// Left edge of the placement in the background.
    #[arg(long)]
    pub x: usize,
    /// Top edge of the placement in the background.
    #[arg(long)]
    pub y: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub locality: bool,
    #[arg(long)]
    pub expand: Option<f64>,
    /// Harmonize a downscaled copy and transfer the result with a fitted
    /// color map.
    #[arg(long)]
    pub highres: bool,
    /// Pixel budget of the downscaled copies used by --highres.
    #[arg(long, default_value_t = 256 * 256)]
    pub work_pixels: usize,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Existing benchmark directory.
    #[arg(long, conflicts_with_all = ["images", "heldout"])]
    pub bench: Option<PathBuf>,
    /// Images to synthesize a benchmark from.
    #[arg(long, requires = "heldout")]
    pub images: Option<PathBuf>,
    /// Held-out LUT bank for synthesized cases.
    #[arg(long, requires = "images")]
    pub heldout: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub bench_opts: BenchOverrides,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub bank: PathBuf,
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub heldout: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated subset of full, single_crop, color_transfer,
    /// saturation, no_recon, no_dis.
    #[arg(long, value_delimiter = ',')]
    pub cells: Vec<AblationCell>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub train: TrainOverrides,
    #[command(flatten)]
    pub bench_opts: BenchOverrides,
}

/// Runs the command line in `args` (program name first) and returns the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                2
            } else {
                1
            }
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Corpus(CorpusCmd::Gen {
            out,
            count,
            seed,
            width,
            height,
        }) => cmd_corpus_gen(&out, count, seed, width, height),
        Command::Lut(cmd) => cmd_lut(cmd),
        Command::Augment(AugmentCmd::GenTriplets {
            corpus,
            bank,
            out,
            count,
            seed,
            config,
            augment,
        }) => {
            let cfg = resolve(
                &config,
                &augment,
                &TrainOverrides::default(),
                &BenchOverrides::default(),
            )?;
            cmd_gen_triplets(&corpus, &bank, &out, count, seed, &cfg)
        }
        Command::Train(args) => cmd_train(&args),
        Command::Harmonize(args) => cmd_harmonize(&args),
        Command::Evaluate(args) => cmd_evaluate(&args),
        Command::Bench(args) => cmd_bench(&args),
    }
}

/// Preset, then the config file, then flags.
pub fn resolve(
    config: &ConfigArgs,
    augment: &AugmentOverrides,
    train: &TrainOverrides,
    bench: &BenchOverrides,
) -> Result<RunConfig> {
    let base = RunConfig::preset(config.preset);
    let mut cfg = match &config.config {
        Some(path) => RunConfig::load_over(&base, path)?,
        None => base,
    };
    if let Some(w) = config.workers {
        cfg.train.workers = w;
        cfg.bench.workers = w;
    }
    if let Some(m) = augment.mode {
        cfg.augment.mode = m;
    }
    if let Some(a) = augment.appearance {
        cfg.augment.appearance = a;
    }
    let t = &mut cfg.train;
    if let Some(v) = train.seed {
        t.seed = v;
    }
    if let Some(v) = train.epochs_const {
        t.epochs_const = v;
    }
    if let Some(v) = train.epochs_decay {
        t.epochs_decay = v;
    }
    if let Some(v) = train.steps_per_epoch {
        t.steps_per_epoch = v;
    }
    if let Some(v) = train.batch_size {
        t.batch_size = v;
    }
    if let Some(v) = train.learning_rate {
        t.learning_rate = v;
    }
    if let Some(v) = train.w1 {
        cfg.loss.w1 = v;
    }
    if let Some(v) = train.w2 {
        cfg.loss.w2 = v;
    }
    if train.no_recon_loss {
        cfg.loss.w1 = 0.0;
    }
    if train.no_dis_loss {
        cfg.loss.w2 = 0.0;
    }
    if let Some(v) = bench.cases {
        cfg.bench.count = v;
    }
    if let Some(v) = bench.bench_seed {
        cfg.bench.seed = v;
    }
    if let Some(v) = bench.mask_style {
        cfg.bench.mask_style = v;
    }
    if bench.locality {
        cfg.bench.locality = true;
    }
    if let Some(v) = bench.expand {
        cfg.bench.expand = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn format_of(path: &Path) -> Result<ImageFormat> {
    ImageFormat::from_path(path).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "{}: unsupported image extension (expected .png, .ppm, .pgm or .pnm)",
            path.display()
        ))
    })
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn with_path(path: &Path, e: Error) -> Error {
    match e {
        Error::Decode { field, message } => Error::Decode {
            field: format!("{}: {field}", path.display()),
            message,
        },
        Error::CubeParse { line, message } => Error::CubeParse {
            line,
            message: format!("{message} ({})", path.display()),
        },
        other => other,
    }
}

pub fn read_image(path: &Path) -> Result<ImageF32> {
    decode_image(&read_bytes(path)?, format_of(path)?).map_err(|e| with_path(path, e))
}

pub fn read_mask(path: &Path) -> Result<Mask> {
    decode_mask(&read_bytes(path)?, format_of(path)?).map_err(|e| with_path(path, e))
}

pub fn write_image(path: &Path, image: &ImageF32) -> Result<()> {
    write_bytes(path, &encode_image(image, format_of(path)?)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_bytes(path, &bytes)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct FileRecord {
    id: String,
    file: String,
    sha256: String,
}

#[derive(Serialize)]
struct CorpusRecord {
    count: usize,
    seed: u64,
    width: usize,
    height: usize,
    files: Vec<FileRecord>,
}

fn cmd_corpus_gen(out: &Path, count: usize, seed: u64, width: usize, height: usize) -> Result<()> {
    if width < 64 || height < 64 {
        return Err(Error::InvalidArgument(format!(
            "corpus images must be at least 64x64, got {width}x{height}"
        )));
    }
    let mut files = Vec::with_capacity(count);
    for img in synthetic_corpus(count, seed, width, height) {
        let file = format!("{}.png", img.id);
        let bytes = encode_image(&img.image, ImageFormat::Png)?;
        write_bytes(&out.join(&file), &bytes)?;
        files.push(FileRecord {
            id: img.id,
            file,
            sha256: sha256_hex(&bytes),
        });
    }
    write_json(
        &out.join("corpus.json"),
        &CorpusRecord {
            count,
            seed,
            width,
            height,
            files,
        },
    )?;
    log::info!("wrote {count} images to {}", out.display());
    Ok(())
}

#[derive(Serialize)]
struct BankRecord {
    count: usize,
    seed: u64,
    strength: f64,
    size: usize,
    mixing: bool,
    luts: Vec<FileRecord>,
}

fn cmd_lut(cmd: LutCmd) -> Result<()> {
    match cmd {
        LutCmd::Apply { lut, input, output } => {
            let lut = Lut3d::load(&lut).map_err(|e| with_path(&lut, e))?;
            let image = read_image(&input)?;
            write_image(&output, &apply_lut_image(&lut, &image))
        }
        LutCmd::Validate { file, canonical } => {
            let text = std::fs::read_to_string(&file).map_err(|e| Error::io(&file, e))?;
            let lut = parse_cube(&text).map_err(|e| with_path(&file, e))?;
            println!("{}: ok (LUT_3D_SIZE {})", file.display(), lut.size());
            if let Some(path) = canonical {
                write_bytes(&path, write_cube(&lut).as_bytes())?;
            }
            Ok(())
        }
        LutCmd::Gen {
            out,
            count,
            seed,
            strength,
            size,
            prefix,
            no_mixing,
        } => {
            if !(0.0..=1.0).contains(&strength) {
                return Err(Error::InvalidArgument(format!(
                    "strength must be in [0, 1], got {strength}"
                )));
            }
            if !(crate::lut::MIN_SIZE..=crate::lut::MAX_SIZE).contains(&size) {
                return Err(Error::InvalidArgument(format!("LUT size {size} out of range")));
            }
            let params = SmoothLutParams {
                size,
                strength,
                mixing: !no_mixing,
            };
            let mut luts = Vec::with_capacity(count);
            for NamedLut { id, lut } in synthetic_bank(&prefix, count, seed, &params) {
                let file = format!("{id}.cube");
                let text = write_cube(&lut);
                write_bytes(&out.join(&file), text.as_bytes())?;
                luts.push(FileRecord {
                    id,
                    file,
                    sha256: sha256_hex(text.as_bytes()),
                });
            }
            write_json(
                &out.join("bank.json"),
                &BankRecord {
                    count,
                    seed,
                    strength,
                    size,
                    mixing: !no_mixing,
                    luts,
                },
            )?;
            log::info!("wrote {count} LUTs to {}", out.display());
            Ok(())
        }
    }
}

fn load_inputs(corpus: &Path, bank: &Path) -> Result<(Vec<crate::corpus::CorpusImage>, Vec<NamedLut>)> {
    let images = load_corpus(corpus)?;
    if images.is_empty() {
        return Err(Error::InvalidArgument(format!("no images in {}", corpus.display())));
    }
    Ok((images, load_bank(bank)?))
}

fn cmd_gen_triplets(corpus: &Path, bank: &Path, out: &Path, count: usize, seed: u64, cfg: &RunConfig) -> Result<()> {
    let (images, luts) = load_inputs(corpus, bank)?;
    let manifest = gen_dataset(&images, &luts, count, seed, &cfg.augment, out, cfg.train.workers)?;
    cfg.write_echo(out)?;
    println!("manifest sha256 {}", manifest.sha256());
    Ok(())
}

#[derive(Serialize)]
struct TrainReport {
    steps: usize,
    epochs: usize,
    final_loss: Option<crate::harmonizer::LossReport>,
    checkpoint_sha256: String,
}

fn train_into(
    images: &[crate::corpus::CorpusImage],
    luts: &[NamedLut],
    cfg: &RunConfig,
    out: &Path,
) -> Result<(HarmonizerModel, TrainHistory)> {
    let start = Instant::now();
    let (model, history) = train(images, luts, &cfg.train, &cfg.augment, &cfg.loss)?;
    log::info!(
        "trained {} steps in {:.1}s",
        history.step_totals.len(),
        start.elapsed().as_secs_f64()
    );
    let ckpt = Checkpoint::new(&model, &cfg.train).to_json();
    write_bytes(&out.join("checkpoint.json"), ckpt.as_bytes())?;
    write_bytes(&out.join("history.csv"), history.to_csv().as_bytes())?;
    write_json(
        &out.join("train_report.json"),
        &TrainReport {
            steps: history.step_totals.len(),
            epochs: history.epochs.len(),
            final_loss: history.epochs.last().map(|e| e.loss),
            checkpoint_sha256: sha256_hex(ckpt.as_bytes()),
        },
    )?;
    cfg.write_echo(out)?;
    Ok((model, history))
}

fn cmd_train(args: &TrainArgs) -> Result<()> {
    let cfg = resolve(&args.config, &args.augment, &args.train, &BenchOverrides::default())?;
    let (images, luts) = load_inputs(&args.corpus, &args.bank)?;
    train_into(&images, &luts, &cfg, &args.out)?;
    println!("checkpoint {}", args.out.join("checkpoint.json").display());
    Ok(())
}

fn load_model(path: &Path) -> Result<HarmonizerModel> {
    Checkpoint::load(path)?.model()
}

#[derive(Serialize)]
struct HarmonizeReport {
    placement: Rect,
    reference: Rect,
    locality: bool,
    expand: f64,
    highres: bool,
    output: String,
    output_sha256: String,
}

fn cmd_harmonize(args: &HarmonizeArgs) -> Result<()> {
    let bench = BenchOverrides {
        locality: args.locality,
        expand: args.expand,
        ..BenchOverrides::default()
    };
    let cfg = resolve(
        &args.config,
        &AugmentOverrides::default(),
        &TrainOverrides::default(),
        &bench,
    )?;
    let model = load_model(&args.model)?;
    let fg = read_image(&args.fg)?;
    let bg = read_image(&args.bg)?;
    let mask = read_mask(&args.mask)?;
    let placement = Rect::new(args.x, args.y, fg.width(), fg.height());
    placement.validate(bg.width(), bg.height())?;
    let opts = cfg.bench.harmonize_options();
    let out = if args.highres {
        harmonize_composite_highres(&model, &fg, &bg, &mask, placement, &opts, args.work_pixels)?
    } else {
        harmonize_composite(&model, &fg, &bg, &mask, placement, &opts)?
    };
    let bytes = encode_image(&out, format_of(&args.out)?)?;
    write_bytes(&args.out, &bytes)?;
    let dir = args
        .out
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let reference = if opts.locality {
        locality_rect(bg.width(), bg.height(), placement, opts.expand)
    } else {
        bg.full_rect()
    };
    let stem = args.out.file_stem().and_then(|s| s.to_str()).unwrap_or("output");
    write_json(
        &dir.join(format!("{stem}.report.json")),
        &HarmonizeReport {
            placement,
            reference,
            locality: opts.locality,
            expand: opts.expand,
            highres: args.highres,
            output: args.out.display().to_string(),
            output_sha256: sha256_hex(&bytes),
        },
    )?;
    cfg.write_echo(dir)
}

fn synthesize_cases(
    images: &Path,
    heldout: &Path,
    cfg: &RunConfig,
    out: &Path,
) -> Result<(Vec<NamedLut>, Vec<BenchmarkCase>)> {
    let imgs = load_corpus(images)?;
    let held = load_bank(heldout)?;
    let b = &cfg.bench;
    let cases = synth_benchmark(&imgs, &held, b.count, b.seed, b.mask_style)?;
    let manifest = write_benchmark(&cases, b.seed, b.mask_style, &held, &out.join("benchmark"), b.workers)?;
    log::info!("benchmark manifest sha256 {}", manifest.sha256());
    Ok((held, cases))
}

fn write_results(dir: &Path, report: &AggregateReport) -> Result<()> {
    write_json(&dir.join("results.json"), report)?;
    write_bytes(&dir.join("results.csv"), report.to_csv().as_bytes())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<()> {
    let cfg = resolve(
        &args.config,
        &AugmentOverrides::default(),
        &TrainOverrides::default(),
        &args.bench_opts,
    )?;
    let model = load_model(&args.model)?;
    let cases = match (&args.bench, &args.images, &args.heldout) {
        (Some(dir), _, _) => load_benchmark(dir)?.1,
        (None, Some(images), Some(heldout)) => synthesize_cases(images, heldout, &cfg, &args.out)?.1,
        _ => {
            return Err(Error::InvalidArgument(
                "evaluate needs --bench, or --images with --heldout".into(),
            ))
        }
    };
    let report = run_benchmark(&model, &cases, &cfg.bench.harmonize_options(), cfg.bench.workers)?;
    write_results(&args.out, &report)?;
    cfg.write_echo(&args.out)?;
    print!("{}", report.to_csv());
    Ok(())
}

#[derive(Serialize)]
struct CellRow {
    cell: String,
    mean: crate::metrics::MetricsReport,
    median: crate::metrics::MetricsReport,
    win_rate: f64,
}

fn table(rows: &[CellRow]) -> String {
    let mut out = String::from("cell,mse_mean,mse_median,psnr_mean,psnr_median,ssim_mean,ssim_median,win_rate\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.4},{:.4},{:.4},{:.6},{:.6},{:.4}",
            r.cell, r.mean.mse, r.median.mse, r.mean.psnr, r.median.psnr, r.mean.ssim, r.median.ssim, r.win_rate
        );
    }
    out
}

fn cmd_bench(args: &BenchArgs) -> Result<()> {
    let cfg = resolve(
        &args.config,
        &AugmentOverrides::default(),
        &args.train,
        &args.bench_opts,
    )?;
    let (images, luts) = load_inputs(&args.corpus, &args.bank)?;
    let (held, cases) = synthesize_cases(&args.images, &args.heldout, &cfg, &args.out)?;
    if let Some(dup) = held.iter().find(|h| luts.iter().any(|l| l.id == h.id)) {
        return Err(Error::Config(format!(
            "held-out LUT '{}' also appears in the training bank",
            dup.id
        )));
    }
    let cells = if args.cells.is_empty() {
        AblationCell::ALL.to_vec()
    } else {
        args.cells.clone()
    };
    let opts = cfg.bench.harmonize_options();
    let mut rows = Vec::with_capacity(cells.len() + 1);
    let mut baseline = None;
    for cell in cells {
        let cell_cfg = cell.apply(&cfg);
        let dir = args.out.join(cell.name());
        log::info!("cell {}", cell.name());
        let (model, _) = train_into(&images, &luts, &cell_cfg, &dir)?;
        let report = run_benchmark(&model, &cases, &opts, cfg.bench.workers)?;
        write_results(&dir, &report)?;
        baseline.get_or_insert(report.baseline);
        rows.push(CellRow {
            cell: cell.name().into(),
            mean: report.method.mean,
            median: report.method.median,
            win_rate: report.win_rate(),
        });
    }
    if let Some(b) = baseline {
        rows.push(CellRow {
            cell: "direct_composite".into(),
            mean: b.mean,
            median: b.median,
            win_rate: 0.0,
        });
    }
    let text = table(&rows);
    write_bytes(&args.out.join("bench_table.csv"), text.as_bytes())?;
    write_json(&args.out.join("bench_report.json"), &rows)?;
    cfg.write_echo(&args.out)?;
    print!("{text}");
    Ok(())
}
