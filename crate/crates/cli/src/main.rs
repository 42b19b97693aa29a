use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use diary_forecast::dataset::{read_cohort, Cohort, FeatureSetId};
use diary_forecast::eval::{evaluable_blocks, lag_sweep, loso_evaluate_models};
use diary_forecast::features::{Task, MAX_LAG};
use diary_forecast::models::{HyperGrid, ModelKind};
use diary_forecast::preprocess::FilterRule;
use diary_forecast::report::{figure_csv, ModelBlock, Report, SweepBlock, DEFAULT_ALERT_THRESHOLD};
use diary_forecast::synth::{generate_cohort, SynthConfig};
use diary_forecast::Error;
use serde::Serialize;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "diary-forecast", version, about = "PHQ-2 prediction and forecasting from daily diaries and ESM")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic cohort CSV.
    Generate(GenerateArgs),
    /// Run leave-one-subject-out evaluation and write a results report.
    Evaluate(EvaluateArgs),
    /// Check a cohort CSV and print a summary.
    Validate(ValidateArgs),
}

#[derive(Args, Clone, Serialize)]
struct SynthArgs {
    /// Number of synthetic subjects.
    #[arg(long, default_value_t = 48)]
    subjects: usize,
    /// Days per synthetic subject.
    #[arg(long, default_value_t = 90)]
    days: usize,
    /// Target fraction of missing days.
    #[arg(long, default_value_t = 0.16)]
    missing_rate: f64,
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    synth: SynthArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    filter: FilterArgs,
}

#[derive(Args, Clone, Copy, Serialize)]
struct FilterArgs {
    /// Minimum number of days with features in the window before a label.
    #[arg(long, default_value_t = 5)]
    filter_min_days: usize,
    /// Length of that window in days.
    #[arg(long, default_value_t = 7)]
    filter_window: usize,
}

impl FilterArgs {
    fn rule(self) -> diary_forecast::Result<FilterRule> {
        FilterRule::new(self.filter_window, self.filter_min_days)
    }
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["data", "synthetic"]))]
struct EvaluateArgs {
    /// Cohort CSV to evaluate on.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Evaluate on a freshly generated synthetic cohort instead.
    #[arg(long)]
    synthetic: bool,
    #[command(flatten)]
    synth: SynthArgs,
    /// Seed of the synthetic cohort.
    #[arg(long, default_value_t = 42)]
    synth_seed: u64,
    /// esm, diary or combined.
    #[arg(long, default_value = "combined")]
    features: FeatureSetId,
    /// sameday, forecast or forecast:<k>.
    #[arg(long, default_value = "sameday")]
    task: Task,
    /// Sweep forecast lags, e.g. 1:7.
    #[arg(long)]
    sweep: Option<String>,
    /// all, or a comma-separated list of gbt, rf, svr, mlp, baseline.
    #[arg(long, default_value = "all")]
    model: String,
    /// JSON file overriding the hyperparameter grids.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[command(flatten)]
    filter: FilterArgs,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Forecasts at or above this score are flagged as alerts.
    #[arg(long, default_value_t = DEFAULT_ALERT_THRESHOLD)]
    alert_threshold: f64,
    /// Results JSON path.
    #[arg(long)]
    out: PathBuf,
    /// Figure CSV path for sweeps (default: next to --out).
    #[arg(long)]
    figure: Option<PathBuf>,
}

/// The experiment as run, echoed into the report.
#[derive(Serialize)]
struct ExperimentConfig {
    data: DataSource,
    feature_set: FeatureSetId,
    task: TaskSpec,
    models: Vec<ModelKind>,
    grid: HyperGrid,
    filter: FilterRule,
    seed: u64,
    alert_threshold: f64,
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case")]
enum DataSource {
    Path(String),
    Synthetic(SynthConfig),
}

#[derive(Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
enum TaskSpec {
    SameDay,
    Forecast { k: usize },
    Sweep { ks: Vec<usize> },
}

/// Errors carry the exit status they should produce.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_)
            | Error::InvalidLag(_)
            | Error::InvalidHyperparameter(_)
            | Error::InvalidMaxFeatures { .. } => EXIT_USAGE,
            Error::NoConvergence(_) | Error::DegenerateData(_) | Error::TooFewPairs(_) => EXIT_NUMERIC,
            _ => EXIT_DATA,
        };
        Failure { code, error: e.into() }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_USAGE, error }
}

fn data(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_DATA, error }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(f) = configure_threads() {
        eprintln!("error: {:#}", f.error);
        return ExitCode::from(f.code);
    }
    let outcome = match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Evaluate(args) => evaluate(&args),
        Command::Validate(args) => validate(&args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var("DIARY_FORECAST_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(anyhow::anyhow!("DIARY_FORECAST_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| usage(e.into()))
}

fn synth_config(args: &SynthArgs, seed: u64) -> SynthConfig {
    SynthConfig {
        n_subjects: args.subjects,
        n_days: args.days,
        missing_rate: args.missing_rate,
        seed,
        ..SynthConfig::default()
    }
}

fn generate(args: &GenerateArgs) -> Result<(), Failure> {
    let cfg = synth_config(&args.synth, args.seed);
    cfg.validate().map_err(|e| usage(e.into()))?;
    let cohort = generate_cohort(&cfg)?;
    write_outputs(&[(&args.out, |w: &mut dyn Write| {
        save_to(&cohort, w)
    })])?;
    let s = cohort.summary();
    println!(
        "wrote {} subjects, {} days, {} labels, missing rate {:.3} to {}",
        s.n_subjects,
        s.n_records,
        s.n_labels,
        s.missing_mean,
        args.out.display()
    );
    Ok(())
}

fn save_to(cohort: &Cohort, w: &mut dyn Write) -> anyhow::Result<()> {
    diary_forecast::dataset::write_cohort(cohort, w)?;
    Ok(())
}

fn load(path: &Path) -> Result<Cohort, Failure> {
    let file = File::open(path)
        .with_context(|| format!("cannot open {}", path.display()))
        .map_err(data)?;
    read_cohort(BufReader::new(file)).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        Failure {
            code: Failure::from(e).code,
            error: anyhow::anyhow!(msg),
        }
    })
}

fn validate(args: &ValidateArgs) -> Result<(), Failure> {
    let rule = args.filter.rule().map_err(|e| usage(e.into()))?;
    let cohort = load(&args.data)?;
    let s = cohort.summary();
    println!("subjects: {}", s.n_subjects);
    println!("records: {}", s.n_records);
    println!("labels: {}", s.n_labels);
    println!("columns: {} esm, {} diary", s.n_esm_columns, s.n_diary_columns);
    println!(
        "missing days: esm {:.3}, diary {:.3}, combined {:.3}, mean {:.3}",
        s.missing_esm, s.missing_diary, s.missing_combined, s.missing_mean
    );
    for fs in FeatureSetId::ALL {
        let (blocks, skipped) = evaluable_blocks(&cohort, fs, Task::SameDay, rule)?;
        let rows: usize = blocks.iter().map(|b| b.n_rows()).sum();
        println!("{fs}: {rows} retained same-day labels from {} subjects", blocks.len());
        for sk in skipped {
            println!("  warning: {} has no retained labels in the {fs} view", sk.subject_id);
        }
    }
    Ok(())
}

fn parse_models(spec: &str) -> anyhow::Result<Vec<ModelKind>> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok(ModelKind::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let kind: ModelKind = part.parse().map_err(anyhow::Error::msg)?;
        if !out.contains(&kind) {
            out.push(kind);
        }
    }
    if out.is_empty() {
        bail!("no model given");
    }
    Ok(out)
}

fn parse_sweep(spec: &str) -> anyhow::Result<Vec<usize>> {
    let (a, b) = spec.split_once(':').context("sweep must look like 1:7")?;
    let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().parse()?);
    if a < 1 || b > MAX_LAG || a > b {
        bail!("sweep range must lie within 1:{MAX_LAG}, got {spec}");
    }
    Ok((a..=b).collect())
}

fn evaluate(args: &EvaluateArgs) -> Result<(), Failure> {
    let rule = args.filter.rule().map_err(|e| usage(e.into()))?;
    let models = parse_models(&args.model).map_err(usage)?;
    let sweep = args.sweep.as_deref().map(parse_sweep).transpose().map_err(usage)?;
    let task = args.task.validate().map_err(|e| usage(e.into()))?;
    if sweep.is_some() {
        if !matches!(task, Task::Forecast(_)) {
            return Err(usage(anyhow::anyhow!("--sweep requires --task forecast")));
        }
        if models.len() != 1 {
            return Err(usage(anyhow::anyhow!("--sweep takes exactly one model")));
        }
    }
    let grid: HyperGrid = match &args.grid {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read grid {}", path.display()))
                .map_err(usage)?;
            serde_json::from_str(&text)
                .with_context(|| format!("invalid grid {}", path.display()))
                .map_err(usage)?
        }
        None => HyperGrid::default(),
    };

    let (cohort, source) = match &args.data {
        Some(path) => (load(path)?, DataSource::Path(path.display().to_string())),
        None => {
            let cfg = synth_config(&args.synth, args.synth_seed);
            cfg.validate().map_err(|e| usage(e.into()))?;
            (generate_cohort(&cfg)?, DataSource::Synthetic(cfg))
        }
    };

    let config = ExperimentConfig {
        data: source,
        feature_set: args.features,
        task: match (&sweep, task) {
            (Some(ks), _) => TaskSpec::Sweep { ks: ks.clone() },
            (None, Task::SameDay) => TaskSpec::SameDay,
            (None, Task::Forecast(k)) => TaskSpec::Forecast { k },
        },
        models: models.clone(),
        grid: grid.clone(),
        filter: rule,
        seed: args.seed,
        alert_threshold: args.alert_threshold,
    };
    let config = serde_json::to_value(&config).map_err(|e| data(e.into()))?;
    let mut report = Report::new(config, args.seed, args.features, args.alert_threshold);

    let mut figure = None;
    match &sweep {
        Some(ks) => {
            let result = lag_sweep(&cohort, args.features, models[0], ks, &grid, rule, args.seed)?;
            figure = Some(figure_csv(&result));
            report.lag_sweep = Some(SweepBlock::new(&result, args.alert_threshold));
        }
        None => {
            let results = loso_evaluate_models(&cohort, args.features, task, &models, &grid, rule, args.seed, None)?;
            report.models = results
                .iter()
                .map(|r| ModelBlock::new(r, task, args.alert_threshold))
                .collect();
        }
    }
    let json = report.to_json()?;

    let figure_path = args.figure.clone().unwrap_or_else(|| args.out.with_extension("figure.csv"));
    let write_json = |w: &mut dyn Write| -> anyhow::Result<()> { Ok(w.write_all(json.as_bytes())?) };
    match &figure {
        Some(csv) => {
            let write_csv = |w: &mut dyn Write| -> anyhow::Result<()> { Ok(w.write_all(csv.as_bytes())?) };
            write_outputs::<&dyn Fn(&mut dyn Write) -> anyhow::Result<()>>(&[
                (&args.out, &write_json),
                (&figure_path, &write_csv),
            ])?;
        }
        None => write_outputs(&[(&args.out, write_json)])?,
    }

    for block in &report.models {
        println!("{:<9} pooled MAE {:.4}  mean subject MAE {:.4}", block.model.name(), block.pooled_mae, block.mean_subject_mae);
    }
    if let Some(s) = &report.lag_sweep {
        for row in &s.rows {
            println!("k={} pooled MAE {:.4} (sd over subjects {:.4})", row.k, row.pooled_mae, row.mae_stddev_over_subjects);
        }
        for t in &s.ttests {
            match &t.ttest {
                Some(r) => println!("k={} vs k={}: t={:.4} p={:.4} (dof {})", t.reference_k, t.k, r.t_statistic, r.p_value, r.dof),
                None => println!("k={} vs k={}: too few shared subjects", t.reference_k, t.k),
            }
        }
        println!("lowest pooled MAE at k={}", s.best_k);
    }
    Ok(())
}

/// Writes every file or none: on any failure, files already written are removed.
fn write_outputs<F>(outputs: &[(&PathBuf, F)]) -> Result<(), Failure>
where
    F: Fn(&mut dyn Write) -> anyhow::Result<()>,
{
    let mut written: Vec<&Path> = Vec::new();
    for (path, write) in outputs {
        let result = (|| -> anyhow::Result<()> {
            let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            let mut w = BufWriter::new(file);
            write(&mut w)?;
            w.flush()?;
            Ok(())
        })();
        if let Err(e) = result {
            let _ = fs::remove_file(path);
            for p in written {
                let _ = fs::remove_file(p);
            }
            return Err(data(e));
        }
        written.push(path);
    }
    Ok(())
}
