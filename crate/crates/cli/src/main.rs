//! `lus` — command-line front end for the lung ultrasound feature toolkit.
//!
//! Every subcommand echoes its fully-resolved configuration as one JSON
//! line on stderr, writes declared outputs atomically (temp file in the
//! destination directory, then rename), and never mutates its inputs.
//! Exit codes: 0 on success, 1 on a processing error, 2 on a usage error.

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use lus_core::energymaps::ShadowParams;
use lus_core::eval::{
    acc_ci95, class_metrics, composite_loss, published_interval_check, similarity_score,
    AnnotationTriple, LossParams,
};
use lus_core::formats::{encode_image, load_image, ImageFormat};
use lus_core::localphase::{lpi, LogGaborParams};
use lus_core::phantom::{generate, PhantomSpec};
use lus_core::pipeline::{compute_features, FeatureParams};
use lus_core::rectify::{
    auto_edges, default_output_dims, derive_geometry, estimate_apex, rectify, EdgeSegment, Point,
    SectorGeometry,
};
use lus_core::scorer::{classify, summarize, FeatureSummary, Thresholds};
use lus_core::{Image, SeverityClass};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

const LONG_VERSION: &str = concat!(
    env!("CARGO_PKG_VERSION"),
    "\nimage formats: pgm (P5, maxval 255) v1; pfm (Pf, f32 little-endian) v1",
    "\nreport format: json v1",
);

#[derive(Parser, Debug)]
#[command(name = "lus", version, long_version = LONG_VERSION)]
#[command(about = "Lung ultrasound feature maps, phantoms, scoring, and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize, Debug)]
#[serde(rename_all = "snake_case")]
enum Command {
    /// Scan-convert a fan-shaped frame onto a rectangular grid.
    Rectify(RectifyArgs),
    /// Compute local-phase and acoustic-energy feature maps.
    Features(FeaturesArgs),
    /// Fuse a frame with its LPI and SHIBS maps.
    Fuse(FuseArgs),
    /// Generate a synthetic frame with known ground truth.
    Phantom(PhantomArgs),
    /// Score a frame into one of five severity classes.
    Classify(ClassifyArgs),
    /// Evaluation formulas: loss, annotator similarity, intervals, metrics.
    Eval(EvalArgs),
    /// One-shot rectify -> features -> fuse over a frame or a directory.
    Pipeline(PipelineArgs),
}

/// How to obtain (or skip) the fan geometry.
#[derive(Args, Serialize, Debug, Clone)]
struct EdgeOpts {
    /// Fan edge endpoints as 8 comma-separated numbers:
    /// left r0,c0,r1,c1 then right r0,c0,r1,c1 (row,col pixels).
    #[arg(
        long,
        value_name = "R0,C0,R1,C1,R0,C0,R1,C1",
        allow_hyphen_values = true
    )]
    edges: Option<String>,
    /// Fit the fan edges from the frame's nonzero support.
    #[arg(long, conflicts_with = "edges")]
    auto_edges: bool,
    /// Linear probe: skip scan conversion and pass the frame through.
    #[arg(long, conflicts_with_all = ["edges", "auto_edges"])]
    identity: bool,
}

#[derive(Args, Serialize, Debug)]
#[command(group(clap::ArgGroup::new("geometry")
    .required(true)
    .args(["edges", "auto_edges", "identity"])))]
struct RectifyArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    #[command(flatten)]
    edge_opts: EdgeOpts,
    /// Output rows (default: input rows).
    #[arg(long)]
    out_rows: Option<usize>,
    /// Output columns (default: arc length at the outer radius).
    #[arg(long)]
    out_cols: Option<usize>,
}

/// Filter parameters shared by every feature-producing subcommand.
#[derive(Args, Serialize, Debug, Clone, Copy)]
struct FeatureOpts {
    /// Log-Gabor center wavelength in pixels.
    #[arg(long, default_value_t = 32.0)]
    wavelength: f64,
    /// Log-Gabor bandwidth as sigma/omega0.
    #[arg(long, default_value_t = 0.55)]
    sigma_ratio: f64,
    /// Shadow kernel spread: sigma = rows / sigma_divisor.
    #[arg(long, default_value_t = 4.0)]
    sigma_divisor: f64,
}

impl FeatureOpts {
    fn to_params(self) -> Result<FeatureParams> {
        Ok(FeatureParams {
            log_gabor: LogGaborParams::new(self.wavelength, self.sigma_ratio)?,
            shadow: ShadowParams::new(self.sigma_divisor)?,
        })
    }
}

#[derive(Args, Serialize, Debug)]
struct FeaturesArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// Where to write the local phase image.
    #[arg(long, value_name = "FILE")]
    lpi: Option<PathBuf>,
    /// Where to write the integrated backscatter map.
    #[arg(long, value_name = "FILE")]
    ibs: Option<PathBuf>,
    /// Where to write the shadow map.
    #[arg(long, value_name = "FILE")]
    shadow: Option<PathBuf>,
    /// Where to write the combined shadow x backscatter map.
    #[arg(long, value_name = "FILE")]
    shibs: Option<PathBuf>,
    #[command(flatten)]
    feature_opts: FeatureOpts,
}

#[derive(Args, Serialize, Debug)]
struct FuseArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[arg(long, value_name = "FILE")]
    lpi: PathBuf,
    #[arg(long, value_name = "FILE")]
    shibs: PathBuf,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct PhantomArgs {
    /// Severity class to synthesize (1-5).
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    class: u8,
    #[arg(long, default_value_t = 512)]
    rows: usize,
    #[arg(long, default_value_t = 512)]
    cols: usize,
    /// Multiplicative speckle sigma.
    #[arg(long, default_value_t = 0.05)]
    speckle: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Where to write the ground-truth JSON.
    #[arg(long, value_name = "FILE")]
    truth: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
struct ClassifyArgs {
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    #[command(flatten)]
    edge_opts: EdgeOpts,
    #[arg(long)]
    out_rows: Option<usize>,
    #[arg(long)]
    out_cols: Option<usize>,
    #[command(flatten)]
    feature_opts: FeatureOpts,
    /// JSON file of decision thresholds; missing fields keep defaults.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Where to write the JSON report.
    #[arg(long, value_name = "FILE")]
    report: PathBuf,
    /// Also write every intermediate map into this directory.
    #[arg(long, value_name = "DIR")]
    maps_dir: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug)]
struct EvalArgs {
    #[command(subcommand)]
    command: EvalCommand,
    /// Also write the JSON report to a file.
    #[arg(long, value_name = "FILE", global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Serialize, Debug)]
#[serde(rename_all = "snake_case")]
enum EvalCommand {
    /// Composite reconstruction + classification loss.
    Loss(LossArgs),
    /// Fraction of annotator triples with a 2-of-3 agreement.
    Similarity(SimilarityArgs),
    /// 95% binomial confidence interval for an accuracy.
    Ci(CiArgs),
    /// Confusion matrix and one-vs-rest accuracy/sensitivity/specificity.
    Metrics(MetricsArgs),
}

#[derive(Args, Serialize, Debug)]
struct LossArgs {
    #[arg(long, value_name = "FILE")]
    x: PathBuf,
    #[arg(long, value_name = "FILE")]
    y: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=5))]
    true_class: u8,
    /// Predicted class probabilities, 5 comma-separated values.
    #[arg(long, value_name = "P1,P2,P3,P4,P5")]
    probs: String,
    #[arg(long, default_value_t = 0.3)]
    lambda1: f64,
    #[arg(long, default_value_t = 0.7)]
    lambda2: f64,
}

#[derive(Args, Serialize, Debug)]
struct SimilarityArgs {
    /// JSON array of 3-element class arrays, e.g. [[1,1,2],[3,3,3]].
    #[arg(long, value_name = "FILE")]
    triples: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct CiArgs {
    #[arg(long, required_unless_present = "published_interval_check")]
    acc: Option<f64>,
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Check every published accuracy +- cell and print a pass/fail grid.
    #[arg(long = "published-check")]
    published_interval_check: bool,
}

#[derive(Args, Serialize, Debug)]
struct MetricsArgs {
    /// JSON array of {"predicted": c, "truth": c} objects.
    #[arg(long, value_name = "FILE")]
    pairs: PathBuf,
}

#[derive(Args, Serialize, Debug)]
struct PipelineArgs {
    /// Input frame, or a directory of .pgm/.pfm frames (batch mode).
    #[arg(long = "in", value_name = "FILE|DIR")]
    input: PathBuf,
    #[arg(long, value_name = "DIR")]
    out_dir: PathBuf,
    #[command(flatten)]
    edge_opts: EdgeOpts,
    #[arg(long)]
    out_rows: Option<usize>,
    #[arg(long)]
    out_cols: Option<usize>,
    #[command(flatten)]
    feature_opts: FeatureOpts,
    /// Batch worker count (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(command: Command) -> Result<()> {
    echo_config(&command)?;
    match command {
        Command::Rectify(args) => cmd_rectify(args),
        Command::Features(args) => cmd_features(args),
        Command::Fuse(args) => cmd_fuse(args),
        Command::Phantom(args) => cmd_phantom(args),
        Command::Classify(args) => cmd_classify(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Pipeline(args) => cmd_pipeline(args),
    }
}

/// One-line effective-config echo: every parameter after defaulting, so a
/// run can be reproduced from its stderr alone.
fn echo_config(command: &Command) -> Result<()> {
    let doc = serde_json::json!({
        "tool": "lus",
        "version": env!("CARGO_PKG_VERSION"),
        "config": command,
    });
    eprintln!("{doc}");
    Ok(())
}

/// Writes via a temp file in the destination directory plus rename, so a
/// crash never leaves a half-written output.
fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

fn save(img: &Image, path: &Path) -> Result<()> {
    let format = ImageFormat::from_path(path)?;
    atomic_write(path, &encode_image(img, format))
        .with_context(|| format!("writing {}", path.display()))
}

fn load(path: &Path) -> Result<Image> {
    load_image(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    atomic_write(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

fn parse_edges(s: &str) -> Result<(EdgeSegment, EdgeSegment)> {
    let vals: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| anyhow!("bad number {t:?} in --edges"))
        })
        .collect::<Result<_>>()?;
    if vals.len() != 8 {
        bail!("--edges needs 8 numbers, got {}", vals.len());
    }
    let seg = |v: &[f64]| -> Result<EdgeSegment> {
        Ok(EdgeSegment::new(
            Point::new(v[0], v[1]),
            Point::new(v[2], v[3]),
        )?)
    };
    Ok((seg(&vals[..4])?, seg(&vals[4..])?))
}

/// `None` means identity: no fan geometry, the frame passes through.
fn resolve_geometry(img: &Image, opts: &EdgeOpts) -> Result<Option<SectorGeometry>> {
    if opts.identity || (opts.edges.is_none() && !opts.auto_edges) {
        return Ok(None);
    }
    let (left, right) = match &opts.edges {
        Some(s) => parse_edges(s)?,
        None => auto_edges(img)?,
    };
    let apex = estimate_apex(&left, &right)?;
    Ok(Some(derive_geometry(apex, img, &left, &right)?))
}

fn rectify_stage(
    img: &Image,
    opts: &EdgeOpts,
    out_rows: Option<usize>,
    out_cols: Option<usize>,
) -> Result<Image> {
    match resolve_geometry(img, opts)? {
        None => Ok(img.clone()),
        Some(geo) => {
            let (def_rows, def_cols) = default_output_dims(img, &geo);
            Ok(rectify(
                img,
                &geo,
                out_rows.unwrap_or(def_rows),
                out_cols.unwrap_or(def_cols),
            )?)
        }
    }
}

fn cmd_rectify(args: RectifyArgs) -> Result<()> {
    let img = load(&args.input)?;
    let out = rectify_stage(&img, &args.edge_opts, args.out_rows, args.out_cols)?;
    save(&out, &args.out)
}

fn cmd_features(args: FeaturesArgs) -> Result<()> {
    if args.lpi.is_none() && args.ibs.is_none() && args.shadow.is_none() && args.shibs.is_none() {
        bail!("nothing to do: pass at least one of --lpi/--ibs/--shadow/--shibs");
    }
    let img = load(&args.input)?.normalize();
    let params = args.feature_opts.to_params()?;
    if let Some(path) = &args.lpi {
        save(&lpi(&img, &params.log_gabor), path)?;
    }
    let ibs =
        (args.ibs.is_some() || args.shibs.is_some()).then(|| lus_core::energymaps::ibs_map(&img));
    let shadow = (args.shadow.is_some() || args.shibs.is_some())
        .then(|| lus_core::energymaps::shadow_map(&img, &params.shadow));
    if let (Some(path), Some(ibs)) = (&args.ibs, &ibs) {
        save(ibs, path)?;
    }
    if let (Some(path), Some(shadow)) = (&args.shadow, &shadow) {
        save(shadow, path)?;
    }
    if let Some(path) = &args.shibs {
        let combined = lus_core::energymaps::shibs(
            shadow.as_ref().expect("computed above"),
            ibs.as_ref().expect("computed above"),
        )?;
        save(&combined, path)?;
    }
    Ok(())
}

fn cmd_fuse(args: FuseArgs) -> Result<()> {
    let img = load(&args.input)?;
    let lpi_img = load(&args.lpi)?;
    let shibs_img = load(&args.shibs)?;
    let fused = lus_core::fusion::fuse(&img.normalize(), &lpi_img, &shibs_img)?;
    save(&fused, &args.out)
}

fn cmd_phantom(args: PhantomArgs) -> Result<()> {
    let class = SeverityClass::new(args.class).map_err(anyhow::Error::msg)?;
    let spec = PhantomSpec::sampled(class, args.rows, args.cols, args.speckle, args.seed);
    let (img, truth) = generate(&spec)?;
    save(&img, &args.out)?;
    if let Some(path) = &args.truth {
        write_json(path, &truth)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ClassifyReport {
    input: PathBuf,
    class: u8,
    summary: FeatureSummary,
    thresholds: Thresholds,
    /// Paths of the intermediate maps, when `--maps-dir` was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    maps: Option<BTreeMap<String, PathBuf>>,
}

fn load_thresholds(path: Option<&Path>) -> Result<Thresholds> {
    match path {
        None => Ok(Thresholds::default()),
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<()> {
    let thresholds = load_thresholds(args.config.as_deref())?;
    let params = args.feature_opts.to_params()?;
    let img = load(&args.input)?;
    let rectified = rectify_stage(&img, &args.edge_opts, args.out_rows, args.out_cols)?;
    let maps = compute_features(&rectified, &params);
    let summary = summarize(&maps, &thresholds)?;
    let class = classify(&summary, &thresholds);

    let map_paths = match &args.maps_dir {
        None => None,
        Some(dir) => {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let mut paths = BTreeMap::new();
            for (name, image) in [
                ("rectified", &rectified),
                ("lpi", &maps.lpi),
                ("ibs", &maps.ibs),
                ("shadow", &maps.shadow),
                ("shibs", &maps.shibs),
                ("fused", &maps.fused),
            ] {
                let path = dir.join(format!("{name}.pfm"));
                save(image, &path)?;
                paths.insert(name.to_string(), path);
            }
            Some(paths)
        }
    };

    write_json(
        &args.report,
        &ClassifyReport {
            input: args.input,
            class: class.value(),
            summary,
            thresholds,
            maps: map_paths,
        },
    )
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let report = match args.command {
        EvalCommand::Loss(a) => eval_loss(a)?,
        EvalCommand::Similarity(a) => eval_similarity(a)?,
        EvalCommand::Ci(a) => eval_ci(a)?,
        EvalCommand::Metrics(a) => eval_metrics(a)?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(path) = &args.out {
        write_json(path, &report)?;
    }
    Ok(())
}

fn eval_loss(args: LossArgs) -> Result<serde_json::Value> {
    let probs: Vec<f64> = args
        .probs
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| anyhow!("bad probability {t:?}"))
        })
        .collect::<Result<_>>()?;
    let x = load(&args.x)?;
    let y = load(&args.y)?;
    let params = LossParams::new(args.lambda1, args.lambda2)?;
    let true_class = SeverityClass::new(args.true_class).map_err(anyhow::Error::msg)?;
    let loss = composite_loss(&x, &y, true_class, &probs, &params)?;
    Ok(serde_json::json!({ "loss": loss }))
}

fn eval_similarity(args: SimilarityArgs) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(&args.triples)
        .with_context(|| format!("reading {}", args.triples.display()))?;
    let raw: Vec<[u8; 3]> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", args.triples.display()))?;
    let triples: Vec<AnnotationTriple> = raw
        .into_iter()
        .map(|[a, b, c]| {
            Ok(AnnotationTriple([
                SeverityClass::new(a).map_err(anyhow::Error::msg)?,
                SeverityClass::new(b).map_err(anyhow::Error::msg)?,
                SeverityClass::new(c).map_err(anyhow::Error::msg)?,
            ]))
        })
        .collect::<Result<_>>()?;
    let score = similarity_score(&triples)?;
    Ok(serde_json::json!({ "n": triples.len(), "similarity": score }))
}

fn eval_ci(args: CiArgs) -> Result<serde_json::Value> {
    if args.published_interval_check {
        let (consistent, inconsistent) = published_interval_check();
        let mut all_ok = true;
        for check in consistent.iter().chain(&inconsistent) {
            let verdict = if check.matches { "pass" } else { "FAIL" };
            all_ok &= check.matches;
            println!(
                "acc {:.2} printed ±{:.2} computed ±{:.4} -> {verdict}",
                check.acc, check.printed_pm, check.computed_half_width
            );
        }
        let value = serde_json::json!({
            "n": args.n,
            "consistent": consistent,
            "inconsistent": inconsistent,
        });
        if !all_ok && inconsistent.is_empty() {
            bail!("interval reproduction failed");
        }
        return Ok(value);
    }
    let acc = args
        .acc
        .expect("clap requires --acc without --published-check");
    let ci = acc_ci95(acc, args.n)?;
    Ok(serde_json::json!({
        "acc": acc,
        "n": args.n,
        "half_width": ci.half_width,
        "lo": ci.lo,
        "hi": ci.hi,
    }))
}

#[derive(Deserialize)]
struct PairEntry {
    predicted: u8,
    truth: u8,
}

fn eval_metrics(args: MetricsArgs) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(&args.pairs)
        .with_context(|| format!("reading {}", args.pairs.display()))?;
    let entries: Vec<PairEntry> =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", args.pairs.display()))?;
    let to_class = |v| SeverityClass::new(v).map_err(anyhow::Error::msg);
    let pred: Vec<SeverityClass> = entries
        .iter()
        .map(|e| to_class(e.predicted))
        .collect::<Result<_>>()?;
    let truth: Vec<SeverityClass> = entries
        .iter()
        .map(|e| to_class(e.truth))
        .collect::<Result<_>>()?;
    Ok(serde_json::to_value(class_metrics(&pred, &truth)?)?)
}

#[derive(Serialize)]
struct FrameReport {
    input: PathBuf,
    rows: usize,
    cols: usize,
    outputs: BTreeMap<String, PathBuf>,
}

/// Rectifies one frame, computes all maps, and writes them under `dir`.
fn pipeline_frame(args: &PipelineArgs, input: &Path, dir: &Path) -> Result<FrameReport> {
    let img = load(input)?;
    let rectified = rectify_stage(&img, &args.edge_opts, args.out_rows, args.out_cols)?;
    let maps = compute_features(&rectified, &args.feature_opts.to_params()?);
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut outputs = BTreeMap::new();
    for (name, image) in [
        ("rectified", &rectified),
        ("lpi", &maps.lpi),
        ("ibs", &maps.ibs),
        ("shadow", &maps.shadow),
        ("shibs", &maps.shibs),
        ("fused", &maps.fused),
    ] {
        let path = dir.join(format!("{name}.pfm"));
        save(image, &path)?;
        outputs.insert(name.to_string(), path);
    }
    Ok(FrameReport {
        input: input.to_path_buf(),
        rows: rectified.rows(),
        cols: rectified.cols(),
        outputs,
    })
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;

    let frames: Vec<FrameReport> = if args.input.is_dir() {
        let mut inputs: Vec<PathBuf> = std::fs::read_dir(&args.input)
            .with_context(|| format!("reading {}", args.input.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("pgm") | Some("pfm")
                )
            })
            .collect();
        if inputs.is_empty() {
            bail!("no .pgm/.pfm frames in {}", args.input.display());
        }
        inputs.sort();
        process_batch(&args, &inputs)?
    } else {
        vec![pipeline_frame(&args, &args.input, &args.out_dir)?]
    };

    write_json(
        &args.out_dir.join("report.json"),
        &serde_json::json!({ "frames": frames }),
    )
}

/// Fixed-size worker pool pulling frame indices off a shared counter.
/// Frames are independent, so only the result vector is shared.
fn process_batch(args: &PipelineArgs, inputs: &[PathBuf]) -> Result<Vec<FrameReport>> {
    let workers = args
        .workers
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        })
        .clamp(1, inputs.len());
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<FrameReport>>>> =
        Mutex::new((0..inputs.len()).map(|_| None).collect());

    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(input) = inputs.get(i) else { break };
                let stem = input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| format!("frame{i}"));
                let report = pipeline_frame(args, input, &args.out_dir.join(stem));
                results.lock().expect("no poisoned workers")[i] = Some(report);
            });
        }
    });

    results
        .into_inner()
        .expect("all workers joined")
        .into_iter()
        .map(|r| r.expect("every index was processed"))
        .collect()
}
