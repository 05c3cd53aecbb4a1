//! Batch entry points: `augment`, `extract`, `evaluate`, `serve`.
//!
//! Exit codes: 0 success, 1 processing or I/O failure, 2 bad arguments
//! (including missing input paths).

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use corebox::depthref::{parse_depth_filename, reference_columns, DepthAssignment, DepthSpec};
use corebox::export::write_extraction_outputs;
use corebox::extraction::{run_pipeline, FilterConfig};
use corebox::imagery::{self, files_by_stem, validate_dataset, LabelMap};
use corebox::metrics::{evaluate_pair, summarize, summary_table, MetricReport, SummaryStats};
use corebox::tla::{augment_dataset, load_pool, AugmentationConfig};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "corebox", version, about = "Core box image augmentation, column extraction and evaluation")]
pub struct Cli {
    /// Print machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// More progress output on stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate augmented image/mask pairs from a dataset and a sample pool.
    Augment(AugmentArgs),
    /// Detect, filter and crop core columns; optionally assign depths.
    Extract(ExtractArgs),
    /// Score predicted masks against ground truth.
    Evaluate(EvaluateArgs),
    /// Run the HTTP review service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub images: PathBuf,
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long)]
    pub labels: PathBuf,
    /// Directory with `foreground/<class>/` and `background/` sub-folders.
    #[arg(long)]
    pub pool: PathBuf,
    /// Augmentation config JSON; all probabilities default to 0.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores). Output does not depend on this.
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Image file, or directory with `--batch`.
    #[arg(long)]
    pub image: PathBuf,
    /// Mask file, or directory with `--batch`.
    #[arg(long)]
    pub mask: PathBuf,
    /// Label map JSON; defaults to `{"labels": {"core_column": 255}}`.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub filter_config: Option<PathBuf>,
    /// Depth spec JSON. Without it depths are parsed from
    /// `<name>_<top>-<bottom>m.<ext>` image file names.
    #[arg(long)]
    pub depth_spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Median band factor.
    #[arg(long)]
    pub n: Option<f64>,
    /// Global width divisor.
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub y_max_ratio: Option<f64>,
    #[arg(long)]
    pub no_median_filter: bool,
    #[arg(long)]
    pub no_width_filter: bool,
    /// Treat `--image` and `--mask` as directories paired by file stem.
    #[arg(long)]
    pub batch: bool,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub pred_dir: PathBuf,
    #[arg(long)]
    pub truth_dir: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Class to score; defaults to core_column or the only class.
    #[arg(long)]
    pub class: Option<String>,
    /// Output directory for `metrics.json` and `summary.txt`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = corebox_service::DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    #[arg(long)]
    pub spool_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    pub max_upload_mb: usize,
    /// Directory with the browser client, served at `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl fmt::Display) -> Self {
        Self { code: 2, message: message.to_string() }
    }

    pub fn failure(message: impl fmt::Display) -> Self {
        Self { code: 1, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

type CliResult<T> = Result<T, CliError>;

struct Output {
    json: bool,
    verbose: u8,
}

impl Output {
    fn info(&self, msg: impl fmt::Display) {
        if self.verbose > 0 {
            eprintln!("{msg}");
        }
    }

    fn warn(&self, msg: impl fmt::Display) {
        eprintln!("warning: {msg}");
    }

    /// JSON on stdout with `--json`, otherwise the text form.
    fn result<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        if self.json {
            println!("{}", serde_json::to_string_pretty(value).expect("output serializes"));
        } else {
            print!("{}", text());
        }
    }
}

fn require_dir(path: &Path, what: &str) -> CliResult<()> {
    if path.is_dir() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} directory not found: {}", path.display())))
    }
}

fn require_file(path: &Path, what: &str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} file not found: {}", path.display())))
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
}

fn labels_or_default(path: Option<&Path>) -> CliResult<LabelMap> {
    match path {
        Some(p) => {
            require_file(p, "label map")?;
            imagery::load_label_map(p).map_err(CliError::failure)
        }
        None => Ok(LabelMap::core_column()),
    }
}

fn thread_pool(jobs: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().map_err(CliError::failure)
}

/// Parses arguments and runs; returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    let out = Output { json: cli.json, verbose: cli.verbose };
    match cli.command {
        Command::Augment(a) => augment(a, &out),
        Command::Extract(a) => extract(a, &out),
        Command::Evaluate(a) => evaluate(a, &out),
        Command::Serve(a) => serve(a, &out),
    }
}

// ------------------------------------------------------------------ augment

#[derive(Serialize)]
struct AugmentSummary {
    manifest: PathBuf,
    count: usize,
    warnings: Vec<String>,
}

fn augment(args: AugmentArgs, out: &Output) -> CliResult<()> {
    require_dir(&args.images, "images")?;
    require_dir(&args.masks, "masks")?;
    require_file(&args.labels, "label map")?;
    require_dir(&args.pool, "pool")?;
    if let Some(c) = &args.config {
        require_file(c, "config")?;
    }
    if args.count == 0 {
        return Err(CliError::usage("--count must be at least 1"));
    }
    let labels = imagery::load_label_map(&args.labels).map_err(CliError::failure)?;
    let mut config = match &args.config {
        Some(p) => AugmentationConfig::from_json_str(&read_text(p)?).map_err(CliError::failure)?,
        None => AugmentationConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let dataset = validate_dataset(&args.images, &args.masks, &labels).map_err(CliError::failure)?;
    let pool = load_pool(&args.pool, &labels).map_err(CliError::failure)?;
    let mut warnings = dataset.warnings.clone();
    warnings.extend(pool.warnings.iter().cloned());
    warnings.iter().for_each(|w| out.warn(w));
    out.info(format!("{} pairs, {} outputs, seed {}", dataset.entries.len(), args.count, config.seed));

    let manifest = thread_pool(args.jobs)?
        .install(|| augment_dataset(&dataset.entries, &pool, &config, &labels, args.count, &args.out))
        .map_err(CliError::failure)?;
    let summary = AugmentSummary { manifest: args.out.join("manifest.json"), count: manifest.count, warnings };
    out.result(&summary, || format!("{}\n", summary.manifest.display()));
    Ok(())
}

// ------------------------------------------------------------------ extract

#[derive(Serialize)]
struct ExtractSummary {
    image: PathBuf,
    out: PathBuf,
    detected: usize,
    kept: usize,
    depths: Option<DepthAssignment>,
    warnings: Vec<String>,
}

fn filter_config(args: &ExtractArgs) -> CliResult<FilterConfig> {
    let mut config = match &args.filter_config {
        Some(p) => {
            require_file(p, "filter config")?;
            FilterConfig::from_json_str(&read_text(p)?).map_err(CliError::failure)?
        }
        None => FilterConfig::default(),
    };
    if let Some(n) = args.n {
        config.n = n;
    }
    if let Some(m) = args.m {
        config.m = m;
    }
    if let Some(r) = args.y_max_ratio {
        config.y_max_ratio = r;
    }
    if args.no_median_filter {
        config.median_filter = false;
    }
    if args.no_width_filter {
        config.width_filter = false;
    }
    config.validate().map_err(CliError::usage)?;
    Ok(config)
}

fn extract_one(
    image_path: &Path,
    mask_path: &Path,
    labels: &LabelMap,
    config: &FilterConfig,
    spec: Option<DepthSpec>,
    out_dir: &Path,
) -> CliResult<ExtractSummary> {
    let image = imagery::load_image(image_path).map_err(CliError::failure)?;
    let mask = imagery::load_mask(mask_path, labels).map_err(CliError::failure)?;
    let (report, crops) = run_pipeline(&image, &mask, labels, config).map_err(CliError::failure)?;
    let spec = spec.or_else(|| parse_depth_filename(image_path).map(|(top, bottom)| DepthSpec::new(top, bottom)));
    let mut warnings = report.warnings.clone();
    let depths = match spec {
        Some(spec) if !report.kept.is_empty() => {
            let a = reference_columns(&report.kept, &spec).map_err(CliError::failure)?;
            warnings.extend(a.warnings.iter().cloned());
            Some(a)
        }
        _ => None,
    };
    let intervals = depths.as_ref().map(|d| d.intervals.as_slice());
    write_extraction_outputs(out_dir, &report, &crops, intervals).map_err(CliError::failure)?;
    Ok(ExtractSummary {
        image: image_path.to_path_buf(),
        out: out_dir.to_path_buf(),
        detected: report.detected.len(),
        kept: report.kept.len(),
        depths,
        warnings,
    })
}

fn extract(args: ExtractArgs, out: &Output) -> CliResult<()> {
    let labels = labels_or_default(args.labels.as_deref())?;
    let config = filter_config(&args)?;
    let spec = match &args.depth_spec {
        Some(p) => {
            require_file(p, "depth spec")?;
            let spec: DepthSpec = serde_json::from_str(&read_text(p)?).map_err(|e| CliError::failure(format!("{}: {e}", p.display())))?;
            spec.validate().map_err(CliError::failure)?;
            Some(spec)
        }
        None => None,
    };

    let summaries = if args.batch {
        require_dir(&args.image, "image")?;
        require_dir(&args.mask, "mask")?;
        let images = files_by_stem(&args.image).map_err(CliError::failure)?;
        let masks = files_by_stem(&args.mask).map_err(CliError::failure)?;
        let pairs: Vec<(&String, &PathBuf, &PathBuf)> =
            images.iter().filter_map(|(k, i)| masks.get(k).map(|m| (k, i, m))).collect();
        if pairs.is_empty() {
            return Err(CliError::failure("no image/mask pairs share a file stem"));
        }
        for k in images.keys().filter(|k| !masks.contains_key(*k)) {
            out.warn(format!("{k}: no mask"));
        }
        pairs
            .par_iter()
            .map(|(key, image, mask)| extract_one(image, mask, &labels, &config, spec, &args.out.join(key)))
            .collect::<CliResult<Vec<_>>>()?
    } else {
        require_file(&args.image, "image")?;
        require_file(&args.mask, "mask")?;
        vec![extract_one(&args.image, &args.mask, &labels, &config, spec, &args.out)?]
    };

    for s in &summaries {
        s.warnings.iter().for_each(|w| out.warn(format!("{}: {w}", s.image.display())));
    }
    let text = || {
        summaries
            .iter()
            .map(|s| format!("{}: kept {} of {} boxes -> {}\n", s.image.display(), s.kept, s.detected, s.out.display()))
            .collect()
    };
    if args.batch {
        out.result(&summaries, text);
    } else {
        out.result(&summaries[0], text);
    }
    Ok(())
}

// ------------------------------------------------------------------ evaluate

#[derive(Serialize)]
struct PairResult {
    key: String,
    pred: PathBuf,
    truth: PathBuf,
    #[serde(flatten)]
    report: MetricReport,
}

#[derive(Serialize)]
struct Evaluation {
    class: String,
    value: u8,
    pairs: Vec<PairResult>,
    warnings: Vec<String>,
    summary: SummaryStats,
}

fn evaluate(args: EvaluateArgs, out: &Output) -> CliResult<()> {
    require_dir(&args.pred_dir, "prediction")?;
    require_dir(&args.truth_dir, "ground truth")?;
    let labels = labels_or_default(args.labels.as_deref())?;
    let (class, value) = match &args.class {
        Some(name) => {
            let v = labels.get(name).ok_or_else(|| CliError::usage(format!("class {name:?} is not in the label map")))?;
            (name.clone(), v)
        }
        None => {
            let (n, v) = labels
                .primary_class()
                .ok_or_else(|| CliError::usage("label map has several classes; choose one with --class"))?;
            (n.to_string(), v)
        }
    };
    let preds = files_by_stem(&args.pred_dir).map_err(CliError::failure)?;
    let truths = files_by_stem(&args.truth_dir).map_err(CliError::failure)?;
    let mut warnings: Vec<String> = preds
        .keys()
        .filter(|k| !truths.contains_key(*k))
        .map(|k| format!("{k}: prediction without ground truth"))
        .chain(truths.keys().filter(|k| !preds.contains_key(*k)).map(|k| format!("{k}: ground truth without prediction")))
        .collect();
    let pairs: Vec<(&String, &PathBuf, &PathBuf)> =
        preds.iter().filter_map(|(k, p)| truths.get(k).map(|t| (k, p, t))).collect();
    if pairs.is_empty() {
        return Err(CliError::failure("no prediction/ground-truth pairs share a file stem"));
    }

    let scored: Vec<Result<PairResult, String>> = thread_pool(args.jobs)?.install(|| {
        pairs
            .par_iter()
            .map(|(key, pred, truth)| {
                let p = imagery::load_mask(pred, &labels).map_err(|e| e.to_string())?;
                let t = imagery::load_mask(truth, &labels).map_err(|e| e.to_string())?;
                let report = evaluate_pair(&p, &t, value).map_err(|e| format!("{key}: {e}"))?;
                Ok(PairResult { key: key.to_string(), pred: pred.to_path_buf(), truth: truth.to_path_buf(), report })
            })
            .collect()
    });
    let mut results = Vec::new();
    for r in scored {
        match r {
            Ok(p) => results.push(p),
            Err(e) => warnings.push(e),
        }
    }
    warnings.iter().for_each(|w| out.warn(w));
    if results.is_empty() {
        return Err(CliError::failure("no pair could be scored"));
    }
    let reports: Vec<MetricReport> = results.iter().map(|r| r.report.clone()).collect();
    let summary = summarize(&reports).map_err(CliError::failure)?;
    let table = summary_table(&summary);
    let evaluation = Evaluation { class, value, pairs: results, warnings, summary };

    fs::create_dir_all(&args.out).map_err(|e| CliError::failure(format!("{}: {e}", args.out.display())))?;
    let write = |name: &str, bytes: &[u8]| {
        let path = args.out.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::failure(format!("{}: {e}", path.display())))
    };
    write("metrics.json", &serde_json::to_vec_pretty(&evaluation).map_err(CliError::failure)?)?;
    write("summary.txt", table.as_bytes())?;
    out.info(format!("scored {} pairs", evaluation.pairs.len()));
    out.result(&evaluation, || table.clone());
    Ok(())
}

// ------------------------------------------------------------------ serve

fn serve(args: ServeArgs, out: &Output) -> CliResult<()> {
    let listener = std::net::TcpListener::bind((args.host.as_str(), args.port))
        .map_err(|e| CliError::failure(format!("cannot bind {}:{}: {e}", args.host, args.port)))?;
    listener.set_nonblocking(true).map_err(CliError::failure)?;
    let addr = listener.local_addr().map_err(CliError::failure)?;
    let config = corebox_service::ServiceConfig {
        spool_dir: args.spool_dir,
        max_upload_bytes: args.max_upload_mb.saturating_mul(1024 * 1024),
        static_dir: args.static_dir,
        ..Default::default()
    };
    let runtime = tokio::runtime::Runtime::new().map_err(CliError::failure)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener).map_err(CliError::failure)?;
        out.result(&serde_json::json!({ "listening": format!("http://{addr}") }), || format!("listening on http://{addr}\n"));
        corebox_service::serve(listener, config, shutdown_signal()).await.map_err(CliError::failure)
    })?;
    out.info("shut down");
    Ok(())
}

async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        let mut term = signal(SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = tokio::signal::ctrl_c() => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    {
        let _ = tokio::signal::ctrl_c().await;
    }
}
