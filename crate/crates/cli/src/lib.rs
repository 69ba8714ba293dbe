//! Command implementations behind the `sobol` binary.
//!
//! Input files are plain CSV: comma separated, `.` decimals, no quoting,
//! mandatory header (`y,y_pf` for Pick-Freeze, `x1,...,xd,y` for given data).
//! Every report is a JSON document with a `schema_version` field.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sobol_core::harness::SCHEMA_VERSION;
use sobol_core::models::{sample_givendata, sample_pickfreeze};
use sobol_core::{
    estimate_sobol_gd_detailed, estimate_sobol_pf, expansion_check, parse_model, run_replications,
    ConfidenceConfig, EstimatorSpec, GdEstimatorConfig, GdRegression, GivenDataSample, KChoice,
    Method, PickFreezeSample, ReplicationConfig, ReplicationSeed, Setting, SobolError,
};
use thiserror::Error;

pub mod exit {
    pub const FAILURE: u8 = 1;
    pub const MALFORMED_INPUT: u8 = 2;
    pub const DEGENERATE: u8 = 3;
    pub const INSUFFICIENT_DATA: u8 = 4;
    pub const UNKNOWN_MODEL: u8 = 5;
    pub const MISSING_TRUTH: u8 = 6;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Malformed(String),
    #[error(transparent)]
    Sobol(#[from] SobolError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Malformed(_) => exit::MALFORMED_INPUT,
            CliError::Io { .. } => exit::FAILURE,
            CliError::Sobol(e) => match e {
                SobolError::DegenerateVariance { .. } => exit::DEGENERATE,
                SobolError::InsufficientData { .. } => exit::INSUFFICIENT_DATA,
                SobolError::UnknownModel(_) => exit::UNKNOWN_MODEL,
                SobolError::MissingTruth(_) => exit::MISSING_TRUTH,
                SobolError::InvalidLevel(_)
                | SobolError::InvalidK { .. }
                | SobolError::InvalidConfig(_)
                | SobolError::InvalidSample(_) => exit::MALFORMED_INPUT,
                SobolError::TooManyFailures { .. } => exit::FAILURE,
            },
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Parser)]
#[command(name = "sobol", version, about = "Sobol' index estimation with efficient variances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the index of the input block from a CSV sample.
    Estimate(EstimateArgs),
    /// Draw a sample from a builtin model and write it as CSV.
    Simulate(SimulateArgs),
    /// Run a Monte Carlo efficiency or expansion check on a builtin model.
    Verify(VerifyArgs),
    /// List the builtin models and their truths as JSON.
    Models,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    #[value(name = "pick_freeze")]
    PickFreeze,
    #[value(name = "given_data")]
    GivenData,
}

impl From<SettingArg> for Setting {
    fn from(s: SettingArg) -> Self {
        match s {
            SettingArg::PickFreeze => Setting::PickFreeze,
            SettingArg::GivenData => Setting::GivenData,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    /// Cross-fitted one-step kNN estimator.
    Onestep,
    /// Nearest-neighbour pairing.
    Rank,
}

#[derive(Debug, Clone, Args)]
pub struct GdOptions {
    /// Given-data estimator.
    #[arg(long, value_enum, default_value = "onestep")]
    pub estimator: EstimatorArg,
    /// Neighbour count for the kNN regression (default depends on n and d).
    #[arg(long)]
    pub k: Option<usize>,
    /// Cross-fitting folds.
    #[arg(long, default_value_t = 2)]
    pub folds: usize,
}

impl GdOptions {
    fn config(&self, seed: u64) -> GdEstimatorConfig {
        GdEstimatorConfig {
            regression: match self.estimator {
                EstimatorArg::Onestep => GdRegression::Knn,
                EstimatorArg::Rank => GdRegression::RankPairing,
            },
            k: self.k.map_or(KChoice::Auto, KChoice::Fixed),
            folds: self.folds,
            seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[arg(value_enum)]
    pub setting: SettingArg,
    pub input: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[command(flatten)]
    pub gd: GdOptions,
    /// Seed of the cross-fitting fold assignment.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Model spec, e.g. `linear_gaussian:a=1,b=1`.
    pub model: String,
    #[arg(value_enum)]
    pub setting: SettingArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyMode {
    Efficiency,
    Expansion,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    pub model: String,
    #[arg(value_enum)]
    pub setting: SettingArg,
    #[arg(long, value_enum, default_value = "efficiency")]
    pub mode: VerifyMode,
    /// Sample size, or a comma-separated list in expansion mode.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 1000)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = sobol_core::harness::DEFAULT_BOUND_BUDGET)]
    pub bound_budget: usize,
    #[command(flatten)]
    pub gd: GdOptions,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> u8 {
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Estimate(args) => cmd_estimate(&args),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::Verify(args) => cmd_verify(&args),
        Command::Models => cmd_models(),
    }
}

#[derive(Debug, Serialize)]
pub struct PickFreezeReport {
    pub schema_version: u32,
    pub method: Method,
    pub n: usize,
    pub point: f64,
    pub asym_variance: f64,
    pub ci: [f64; 2],
    pub level: f64,
}

#[derive(Debug, Serialize)]
pub struct GivenDataReport {
    pub schema_version: u32,
    pub method: Method,
    pub n: usize,
    pub d: usize,
    pub k_used: Option<usize>,
    pub folds: usize,
    pub point: f64,
    pub asym_variance: f64,
    pub ci: [f64; 2],
    pub level: f64,
}

pub fn cmd_estimate(args: &EstimateArgs) -> Result<(), CliError> {
    let ccfg = ConfidenceConfig::new(args.level)?;
    let text = read_input(&args.input)?;
    match args.setting {
        SettingArg::PickFreeze => {
            let sample = parse_pick_freeze_csv(&text)?;
            let e = estimate_sobol_pf(&sample, &ccfg)?;
            write_json(
                args.out.as_deref(),
                &PickFreezeReport {
                    schema_version: SCHEMA_VERSION,
                    method: e.method,
                    n: e.n,
                    point: e.point,
                    asym_variance: e.asym_variance,
                    ci: [e.ci_low, e.ci_high],
                    level: e.level,
                },
            )
        }
        SettingArg::GivenData => {
            let sample = parse_given_data_csv(&text)?;
            let r = estimate_sobol_gd_detailed(&sample, &args.gd.config(args.seed), &ccfg)?;
            let e = r.estimate;
            write_json(
                args.out.as_deref(),
                &GivenDataReport {
                    schema_version: SCHEMA_VERSION,
                    method: e.method,
                    n: e.n,
                    d: r.d,
                    k_used: r.k_used,
                    folds: r.folds,
                    point: e.point,
                    asym_variance: e.asym_variance,
                    ci: [e.ci_low, e.ci_high],
                    level: e.level,
                },
            )
        }
    }
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model)?;
    let seed = ReplicationSeed::new(args.seed, 0);
    let mut csv = String::new();
    match args.setting {
        SettingArg::PickFreeze => {
            let s = sample_pickfreeze(&model, args.n, seed)?;
            csv.push_str("y,y_pf\n");
            for (a, b) in s.pairs() {
                csv.push_str(&format!("{a},{b}\n"));
            }
        }
        SettingArg::GivenData => {
            let s = sample_givendata(&model, args.n, seed)?;
            let header: Vec<String> = (1..=s.d()).map(|j| format!("x{j}")).collect();
            csv.push_str(&header.join(","));
            csv.push_str(",y\n");
            for (x, y) in s.rows().zip(s.y()) {
                for v in x {
                    csv.push_str(&format!("{v},"));
                }
                csv.push_str(&format!("{y}\n"));
            }
        }
    }
    write_output(args.out.as_deref(), csv.as_bytes())
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<(), CliError> {
    let model = parse_model(&args.model)?;
    model.require_truth()?;
    let spec = match args.setting {
        SettingArg::PickFreeze => EstimatorSpec::PickFreeze,
        SettingArg::GivenData => EstimatorSpec::GivenData(args.gd.config(args.seed)),
    };
    match args.mode {
        VerifyMode::Efficiency => {
            let [n] = args.n[..] else {
                return Err(SobolError::InvalidConfig(
                    "efficiency mode takes a single --n".into(),
                )
                .into());
            };
            let cfg = ReplicationConfig {
                n,
                reps: args.reps,
                master_seed: args.seed,
                bound_budget: args.bound_budget,
            };
            write_json(args.out.as_deref(), &run_replications(&model, &spec, &cfg)?)
        }
        VerifyMode::Expansion => write_json(
            args.out.as_deref(),
            &expansion_check(&model, &spec, &args.n, args.reps, args.seed)?,
        ),
    }
}

#[derive(Serialize)]
struct ModelEntry {
    name: String,
    d: usize,
    noise_dim: usize,
    s_true: Option<f64>,
    psi_true: Option<f64>,
    mu_true: Option<f64>,
    m2_true: Option<f64>,
}

#[derive(Serialize)]
struct ModelList {
    schema_version: u32,
    models: Vec<ModelEntry>,
}

fn cmd_models() -> Result<(), CliError> {
    let models = sobol_core::builtin_models()
        .into_iter()
        .map(|m| {
            let t = m.truth();
            ModelEntry {
                name: m.name().to_string(),
                d: m.d(),
                noise_dim: m.noise_dim(),
                s_true: t.map(|t| t.s_true),
                psi_true: t.map(|t| t.moments.psi),
                mu_true: t.map(|t| t.moments.mu),
                m2_true: t.map(|t| t.moments.m2),
            }
        })
        .collect();
    write_json(
        None,
        &ModelList {
            schema_version: SCHEMA_VERSION,
            models,
        },
    )
}

fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(format!("cannot read {}", path.display())))?;
    Ok(text)
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(
                File::create(path).map_err(io_err(format!("cannot create {}", path.display())))?,
            );
            w.write_all(bytes)
                .and_then(|_| w.flush())
                .map_err(io_err(format!("cannot write {}", path.display())))
        }
        None => io::stdout()
            .lock()
            .write_all(bytes)
            .map_err(io_err("cannot write to stdout")),
    }
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    write_output(out, text.as_bytes())
}

/// Parsed CSV: data rows with their 1-based line numbers.
struct Table {
    header: Vec<String>,
    rows: Vec<(u64, Vec<f64>)>,
}

fn parse_table(text: &str) -> Result<Table, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header = match records.next() {
        Some(Ok(r)) => r.iter().map(str::to_string).collect::<Vec<_>>(),
        Some(Err(e)) => return Err(CliError::Malformed(format!("line 1: {e}"))),
        None => return Err(CliError::Malformed("line 1: missing header".into())),
    };
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            CliError::Malformed(format!("line {line}: {e}"))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(CliError::Malformed(format!(
                "line {line}: expected {} fields, found {}",
                header.len(),
                record.len()
            )));
        }
        let values = record
            .iter()
            .map(|field| match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Malformed(format!(
                    "line {line}: `{field}` is not a finite number"
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    Ok(Table { header, rows })
}

/// Parses the `y,y_pf` schema.
pub fn parse_pick_freeze_csv(text: &str) -> Result<PickFreezeSample, CliError> {
    let table = parse_table(text)?;
    if table.header != ["y", "y_pf"] {
        return Err(CliError::Malformed(format!(
            "line 1: expected header `y,y_pf`, found `{}`",
            table.header.join(",")
        )));
    }
    let (y, y_pf) = table.rows.iter().map(|(_, r)| (r[0], r[1])).unzip();
    Ok(PickFreezeSample::new(y, y_pf)?)
}

/// Parses the `x1,...,xd,y` schema.
pub fn parse_given_data_csv(text: &str) -> Result<GivenDataSample, CliError> {
    let table = parse_table(text)?;
    let d = table.header.len().saturating_sub(1);
    let expected: Vec<String> = (1..=d)
        .map(|j| format!("x{j}"))
        .chain(std::iter::once("y".to_string()))
        .collect();
    if d == 0 || table.header != expected {
        return Err(CliError::Malformed(format!(
            "line 1: expected header `x1,...,xd,y`, found `{}`",
            table.header.join(",")
        )));
    }
    if table.rows.len() < GivenDataSample::MIN_ROWS {
        return Err(SobolError::InsufficientData {
            needed: GivenDataSample::MIN_ROWS,
            got: table.rows.len(),
        }
        .into());
    }
    let mut x = Vec::with_capacity(table.rows.len() * d);
    let mut y = Vec::with_capacity(table.rows.len());
    for (_, row) in &table.rows {
        x.extend_from_slice(&row[..d]);
        y.push(row[d]);
    }
    Ok(GivenDataSample::new(x, d, y)?)
}
