//! The `rlab` command line.
//!
//! Every subcommand accepts `--config FILE` (TOML with one table per
//! subcommand, see `docs/config.md`); flags override file values.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::PolyBaseline;
use crate::datasets::{generate_dataset, generate_record, Dataset, DatasetManifest, Split, SplitFractions};
use crate::evaluation::{evaluate_dataset, Method, Report};
use crate::mechanics::Family;
use crate::optics::Image;
use crate::predictor::{Model, ModelConfig, Variant};
use crate::training::{train, LossConfig, TrainSchedule, CHECKPOINT_FILE};

pub const RESOLVED_CONFIG_FILE: &str = "resolved_config.json";
pub const THREADS_ENV: &str = "RLAB_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Runtime(String),
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "rlab", version, about = "Rolling-ball simulation, rendering and state-propagation predictors")]
struct Cli {
    /// Worker threads for parallel sections (default: RLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate and render a dataset.
    Gen(GenArgs),
    /// Train a predictor on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on a dataset split.
    Eval(EvalArgs),
    /// Evaluate the least-squares polynomial baselines.
    Baseline(BaselineArgs),
    /// Write PNG frames of a dataset sequence or a freshly sampled scenario.
    RenderPreview(PreviewArgs),
    /// Run gradient, physics and file-format self checks.
    Selftest,
    /// gen -> train -> eval at desk scale.
    ReproToy(ToyArgs),
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub t0: Option<usize>,
    #[arg(long)]
    pub max_frames: Option<usize>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Render balls in a single flat color.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub untextured: Option<bool>,
    #[arg(skip)]
    pub splits: Option<SplitFractions>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub variant: Option<Variant>,
    #[arg(long)]
    pub channels: Option<usize>,
    #[arg(long)]
    pub transition_width: Option<usize>,
    #[arg(long)]
    pub readout_hidden: Option<usize>,
    /// Drop the angular-velocity head and its loss term.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub no_angular: Option<bool>,
    /// Supervised horizon T_train.
    #[arg(long)]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub plateau_epochs: Option<usize>,
    #[arg(long)]
    pub stop_epochs: Option<usize>,
    #[arg(long)]
    pub angular_weight: Option<f64>,
    #[arg(long)]
    pub det_reg_lambda: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalArgs {
    #[arg(long, required = true)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<String>,
    /// Comma-separated horizons, e.g. `10,20`.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Polynomial degrees, e.g. `1,2`.
    #[arg(long, value_delimiter = ',')]
    pub degrees: Option<Vec<usize>>,
    #[arg(long)]
    pub fit_len: Option<usize>,
    /// Also extrapolate angular velocity with the same polynomial.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub angular: Option<bool>,
    #[arg(long)]
    pub split: Option<String>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PreviewArgs {
    /// Render sequence `--index` of this dataset.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub index: Option<usize>,
    /// Otherwise sample a scenario of this family.
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long)]
    pub objects: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub size: Option<usize>,
    /// Frame indices to write, e.g. `0,10,20`.
    #[arg(long, value_delimiter = ',')]
    pub frames: Option<Vec<usize>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyArgs {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_parser = parse_family)]
    pub family: Option<Family>,
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub image_size: Option<usize>,
    #[arg(long)]
    pub channels: Option<usize>,
    /// Training horizon T_train.
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Generalization horizon T_gen used in reports.
    #[arg(long)]
    pub gen_horizon: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<Variant>>,
    /// Reuse finished stages found in `--out`.
    #[arg(long, default_missing_value = "true", num_args = 0..=1)]
    pub resume: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

fn parse_family(s: &str) -> Result<Family, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| format!("unknown family {s:?} (hemispherical, ellipsoidal, heightfield)"))
}

/// Fills every unset field of `flags` from the same-named table of the
/// config file.
fn merge<T: Serialize + for<'de> Deserialize<'de>>(flags: &T, file: Option<&Path>, table: &str) -> Result<T, CliError> {
    let Some(path) = file else {
        return Ok(serde_json::from_value(serde_json::to_value(flags).map_err(runtime)?).map_err(runtime)?);
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let doc: toml::Table = text.parse().map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let from_file = match doc.get(table) {
        Some(v) => serde_json::to_value(v).map_err(runtime)?,
        None => serde_json::Value::Object(Default::default()),
    };
    let serde_json::Value::Object(mut merged) = from_file else {
        return Err(CliError::Usage(format!("{}: [{table}] must be a table", path.display())));
    };
    if let serde_json::Value::Object(f) = serde_json::to_value(flags).map_err(runtime)? {
        for (k, v) in f {
            if !v.is_null() {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(serde_json::Value::Object(merged))
        .map_err(|e| CliError::Usage(format!("{}: [{table}]: {e}", path.display())))
}

fn need<T: Clone>(v: &Option<T>, flag: &str) -> Result<T, CliError> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing required --{flag} (flag or config file)")))
}

/// Writes the resolved settings into the output directory. The output
/// path itself is left out so that identical runs into different
/// directories produce identical trees.
fn write_echo(dir: &Path, command: &str, value: &impl Serialize) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(runtime)?;
    let mut config = serde_json::to_value(value).map_err(runtime)?;
    if let Some(obj) = config.as_object_mut() {
        obj.remove("out");
    }
    let doc = serde_json::json!({ "command": command, "config": config });
    let text = serde_json::to_string_pretty(&doc).map_err(runtime)? + "\n";
    std::fs::write(dir.join(RESOLVED_CONFIG_FILE), text).map_err(runtime)
}

/// Canonical form of a path that may not exist yet.
fn resolve(path: &Path) -> Option<PathBuf> {
    let mut existing = path.to_path_buf();
    let mut rest = vec![];
    loop {
        if let Ok(c) = existing.canonicalize() {
            return Some(rest.iter().rev().fold(c, |acc, part| acc.join(part)));
        }
        rest.push(existing.file_name()?.to_owned());
        if !existing.pop() || existing.as_os_str().is_empty() {
            existing = std::env::current_dir().ok()?;
        }
    }
}

fn guard_output(data: &Path, out: &Path) -> Result<(), CliError> {
    if let (Some(d), Some(o)) = (resolve(data), resolve(out)) {
        if o.starts_with(&d) {
            return Err(CliError::Usage("--out must not be inside the input dataset directory".into()));
        }
    }
    Ok(())
}

fn parse_split(s: Option<&str>) -> Result<Split, CliError> {
    s.unwrap_or("test").parse().map_err(|e: crate::datasets::DatasetError| CliError::Usage(e.to_string()))
}

pub fn gen_manifest(a: &GenArgs) -> Result<DatasetManifest, CliError> {
    let mut m = DatasetManifest::new(need(&a.family, "family")?, a.objects.unwrap_or(1), need(&a.count, "count")?, a.seed.unwrap_or(0));
    if let Some(v) = a.image_size {
        m.image_size = v;
    }
    if let Some(v) = a.t0 {
        m.t0 = v;
    }
    if let Some(v) = a.max_frames {
        m.max_frames = v;
    }
    if let Some(v) = a.radius {
        m.radius = v;
    }
    if let Some(v) = a.untextured {
        m.ball_textured = !v;
    }
    if let Some(v) = a.splits {
        m.splits = v;
    }
    m.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(m)
}

fn cmd_gen(a: &GenArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "gen")?;
    let out = need(&a.out, "out")?;
    let m = gen_manifest(&a)?;
    let done = generate_dataset(&m, &out).map_err(runtime)?;
    write_echo(&out, "gen", &a)?;
    println!("wrote {} sequences to {}", done.sequence_count, out.display());
    Ok(())
}

/// Resolved model, loss and schedule for a dataset.
pub fn train_setup(a: &TrainArgs, manifest: &DatasetManifest) -> Result<(ModelConfig, LossConfig, TrainSchedule), CliError> {
    let variant = need(&a.variant, "variant")?;
    let mut model = ModelConfig::new(variant);
    model.n_objects = manifest.n_objects;
    model.image_size = manifest.image_size;
    model.t0 = manifest.t0;
    if let Some(v) = a.channels {
        model.channels = v;
    }
    if let Some(v) = a.transition_width {
        model.transition_width = v;
    }
    if let Some(v) = a.readout_hidden {
        model.readout_hidden = v;
    }
    model.regress_angular_velocity = !a.no_angular.unwrap_or(false);
    model.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let mut loss = LossConfig::new(variant, a.horizon.unwrap_or(10));
    if let Some(v) = a.angular_weight {
        loss.angular_weight = v;
    }
    if let Some(v) = a.det_reg_lambda {
        loss.det_reg_lambda = v;
    }
    let d = TrainSchedule::default();
    let schedule = TrainSchedule {
        batch_size: a.batch_size.unwrap_or(d.batch_size),
        lr_initial: a.lr.unwrap_or(d.lr_initial),
        plateau_epochs: a.plateau_epochs.unwrap_or(d.plateau_epochs),
        stop_epochs: a.stop_epochs.unwrap_or(d.stop_epochs),
        max_epochs: a.epochs.unwrap_or(d.max_epochs),
        seed: a.seed.unwrap_or(0),
        ..d
    };
    schedule.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((model, loss, schedule))
}

fn cmd_train(a: &TrainArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "train")?;
    let data = need(&a.data, "data")?;
    let out = need(&a.out, "out")?;
    let ds = Dataset::open(&data).map_err(runtime)?;
    guard_output(&data, &out)?;
    let (model, loss, schedule) = train_setup(&a, &ds.manifest)?;
    write_echo(&out, "train", &serde_json::json!({ "model": model, "loss": loss, "schedule": schedule, "data": data }))?;
    let r = train(&ds, &model, &loss, &schedule, Some(&out)).map_err(runtime)?;
    println!(
        "{} epochs, best validation loss {:.6} at epoch {}; checkpoint {}",
        r.log.len(),
        r.best_val_loss,
        r.best_epoch,
        out.join(CHECKPOINT_FILE).display()
    );
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "eval")?;
    let ckpt = need(&a.checkpoint, "checkpoint")?;
    let data = need(&a.data, "data")?;
    let out = need(&a.out, "out")?;
    let split = parse_split(a.split.as_deref())?;
    let horizons = a.horizons.clone().unwrap_or_else(|| vec![10, 20]);
    let ds = Dataset::open(&data).map_err(runtime)?;
    guard_output(&data, &out)?;
    let model = Model::load(&ckpt).map_err(runtime)?;
    write_echo(&out, "eval", &a)?;
    let mut report = Report::default();
    report.insert(evaluate_dataset(Method::Network(&model), &ds, split, &horizons).map_err(runtime)?);
    report.write(&out).map_err(runtime)?;
    print_summary(&report);
    Ok(())
}

fn cmd_baseline(a: &BaselineArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "baseline")?;
    let data = need(&a.data, "data")?;
    let out = need(&a.out, "out")?;
    let split = parse_split(a.split.as_deref())?;
    let horizons = a.horizons.clone().unwrap_or_else(|| vec![10, 20]);
    let ds = Dataset::open(&data).map_err(runtime)?;
    guard_output(&data, &out)?;
    write_echo(&out, "baseline", &a)?;
    let mut report = Report::default();
    for degree in a.degrees.clone().unwrap_or_else(|| vec![1, 2]) {
        if !(1..=2).contains(&degree) {
            return Err(CliError::Usage(format!("degree must be 1 or 2, got {degree}")));
        }
        let b = PolyBaseline {
            degree,
            fit_len: a.fit_len.unwrap_or(crate::baselines::DEFAULT_FIT_LEN),
            t0: ds.manifest.t0,
            fit_angular_velocity: a.angular.unwrap_or(false),
        };
        report.insert(evaluate_dataset(Method::Baseline(&b), &ds, split, &horizons).map_err(runtime)?);
    }
    report.write(&out).map_err(runtime)?;
    print_summary(&report);
    Ok(())
}

fn print_summary(report: &Report) {
    for (method, splits) in &report.0 {
        for (split, r) in splits {
            for h in &r.horizons {
                let mut line = format!("{method} {split} T={}: pixel error {:.3}", h.horizon, h.pixel_error);
                if let Some(v) = h.angvel_rmse {
                    line += &format!(", angular velocity RMSE {v:.3} rad/s");
                }
                if let Some(v) = h.log_perplexity {
                    line += &format!(", log perplexity {v:.3}");
                }
                println!("{line}");
            }
        }
    }
}

fn cmd_preview(a: &PreviewArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "render-preview")?;
    let out = need(&a.out, "out")?;
    let frames: Vec<Image> = if let Some(data) = &a.data {
        let ds = Dataset::open(data).map_err(runtime)?;
        guard_output(data, &out)?;
        ds.load(a.index.unwrap_or(0)).map_err(runtime)?.frames
    } else {
        let family = need(&a.family, "family (or --data)")?;
        let mut m = DatasetManifest::new(family, a.objects.unwrap_or(1), 1, a.seed.unwrap_or(0));
        m.image_size = a.size.unwrap_or(crate::optics::DEFAULT_IMAGE_SIZE);
        m.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        generate_record(&m, 0).map_err(runtime)?.0.frames
    };
    let picks = a.frames.clone().unwrap_or_else(|| vec![0, 10, 20, 30]);
    std::fs::create_dir_all(&out).map_err(runtime)?;
    write_echo(&out, "render-preview", &a)?;
    let mut chosen = vec![];
    for &k in &picks {
        let Some(img) = frames.get(k) else {
            return Err(CliError::Runtime(format!("frame {k} out of range ({} frames)", frames.len())));
        };
        img.save_png(&out.join(format!("frame_{k:04}.png"))).map_err(runtime)?;
        chosen.push(img.clone());
    }
    Image::hstack(&chosen).save_png(&out.join("strip.png")).map_err(runtime)?;
    println!("wrote {} frames to {}", chosen.len(), out.display());
    Ok(())
}

fn cmd_selftest() -> Result<(), CliError> {
    let results = crate::selftest::run_all();
    let failed = results.iter().filter(|r| !r.passed).count();
    for r in &results {
        println!("{} {} {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} of {} checks failed", results.len())));
    }
    println!("all {} checks passed", results.len());
    Ok(())
}

/// Resolved settings of a `repro-toy` run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToyPlan {
    pub out: PathBuf,
    pub manifest: DatasetManifest,
    pub variants: Vec<Variant>,
    pub train: TrainArgs,
    pub gen_horizon: usize,
    pub resume: bool,
}

pub fn toy_plan(a: &ToyArgs) -> Result<ToyPlan, CliError> {
    let out = need(&a.out, "out")?;
    let gen = GenArgs {
        family: Some(a.family.unwrap_or(Family::Hemispherical)),
        count: Some(a.count.unwrap_or(200)),
        seed: Some(a.seed.unwrap_or(1)),
        image_size: a.image_size,
        ..GenArgs::default()
    };
    let train = TrainArgs {
        channels: a.channels,
        horizon: Some(a.horizon.unwrap_or(10)),
        epochs: Some(a.epochs.unwrap_or(300)),
        batch_size: Some(a.batch_size.unwrap_or(8)),
        seed: Some(a.seed.unwrap_or(1)),
        ..TrainArgs::default()
    };
    let horizon = train.horizon.unwrap_or(10);
    Ok(ToyPlan {
        out,
        manifest: gen_manifest(&gen)?,
        variants: a.variants.clone().unwrap_or_else(|| vec![Variant::Dispnet, Variant::Probnet, Variant::Interpnet]),
        train,
        gen_horizon: a.gen_horizon.unwrap_or(2 * horizon).max(horizon),
        resume: a.resume.unwrap_or(false),
    })
}

const DONE_MARKER: &str = "done";

/// Runs a toy plan and returns the combined report. Stages with a `done`
/// marker are reused when `plan.resume` is set.
pub fn run_toy(plan: &ToyPlan) -> Result<Report, CliError> {
    let data = plan.out.join("data");
    let reuse = |dir: &Path| plan.resume && dir.join(DONE_MARKER).exists();
    if !reuse(&data) {
        generate_dataset(&plan.manifest, &data).map_err(runtime)?;
        std::fs::write(data.join(DONE_MARKER), "").map_err(runtime)?;
    }
    write_echo(&plan.out, "repro-toy", plan)?;
    let ds = Dataset::open(&data).map_err(runtime)?;
    let horizon = plan.train.horizon.unwrap_or(10);
    let horizons = vec![horizon, plan.gen_horizon];
    let mut report = Report::default();
    for &variant in &plan.variants {
        let dir = plan.out.join(variant.name());
        let ckpt = dir.join(CHECKPOINT_FILE);
        if !reuse(&dir) {
            let args = TrainArgs { variant: Some(variant), ..plan.train.clone() };
            let (model, loss, schedule) = train_setup(&args, &ds.manifest)?;
            eprintln!("training {} for up to {} epochs", variant.name(), schedule.max_epochs);
            train(&ds, &model, &loss, &schedule, Some(&dir)).map_err(runtime)?;
            std::fs::write(dir.join(DONE_MARKER), "").map_err(runtime)?;
        }
        let model = Model::load(&ckpt).map_err(runtime)?;
        // interpnet is scored at the horizon it was trained for
        let hs = if variant == Variant::Interpnet { vec![horizon] } else { horizons.clone() };
        report.insert(evaluate_dataset(Method::Network(&model), &ds, Split::Test, &hs).map_err(runtime)?);
    }
    for b in [PolyBaseline::linear(), PolyBaseline::quadratic()] {
        let b = PolyBaseline { t0: ds.manifest.t0, ..b };
        report.insert(evaluate_dataset(Method::Baseline(&b), &ds, Split::Test, &horizons).map_err(runtime)?);
    }
    report.write(&plan.out.join("report")).map_err(runtime)?;
    Ok(report)
}

fn cmd_toy(a: &ToyArgs) -> Result<(), CliError> {
    let a = merge(a, a.config.as_deref(), "repro-toy")?;
    let plan = toy_plan(&a)?;
    let report = run_toy(&plan)?;
    print_summary(&report);
    Ok(())
}

fn thread_count(flag: Option<usize>) -> Result<usize, CliError> {
    if let Some(n) = flag {
        return if n == 0 { Err(CliError::Usage("--threads must be positive".into())) } else { Ok(n) };
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)),
    }
}

/// Parses `argv` (program name first) and runs the command. Returns the
/// process exit code: 0 success, 1 runtime failure, 2 usage error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = thread_count(cli.threads).and_then(|n| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(runtime)?;
        pool.install(|| match &cli.command {
            Command::Gen(a) => cmd_gen(a),
            Command::Train(a) => cmd_train(a),
            Command::Eval(a) => cmd_eval(a),
            Command::Baseline(a) => cmd_baseline(a),
            Command::RenderPreview(a) => cmd_preview(a),
            Command::Selftest => cmd_selftest(),
            Command::ReproToy(a) => cmd_toy(a),
        })
    });
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}\n\nFor more information, try '--help'.");
            2
        }
        Err(CliError::Runtime(m)) => {
            eprintln!("error: {m}");
            1
        }
    }
}
