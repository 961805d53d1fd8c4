//! The `greenshield` command line.
//!
//! Errors are reported as one `error: <code>: <message>` line on stderr with
//! a per-category exit status (see [`CliError::exit_code`]).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::dataset::{load_csv, synth, write_csv, DatasetError, FeatureVector};
use crate::edge::{run_scenario, AlertSink, EdgeError, ScenarioScript, WebhookSink};
use crate::json::to_canonical_string;
use crate::metrics::{evaluate, render_table, MetricsError};
use crate::models::{KernelChoice, ModelError, TrainConfig};
use crate::pipeline::{prepare, train_all, write_artifacts, LoadedModel, PipelineError};
use crate::service::{self, ServiceConfig, ServiceError};

#[derive(Debug, Parser)]
#[command(name = "greenshield", version, about = "Forest-fire risk prediction and sensor alerting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic dataset as CSV.
    GenData {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Clean, split, train all three models, evaluate and select one.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "models")]
        model_out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Recorded verbatim in selected.json.
        #[arg(long)]
        trained_at: Option<String>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a saved model on the held-out split of a dataset.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Fire probability and label for one reading.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        temp: f64,
        #[arg(long)]
        rh: f64,
        #[arg(long)]
        oxy: f64,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Replay a sensor scenario and print the JSON-lines run log.
    Simulate {
        #[arg(long)]
        script: PathBuf,
        /// POST each SMS text here as well.
        #[arg(long)]
        webhook: Option<String>,
    },
    /// Run the HTTP service until interrupted.
    Serve {
        #[arg(long, default_value = service::DEFAULT_ADDR)]
        addr: String,
        #[arg(long, default_value_t = service::DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "models/selected.json")]
        model: PathBuf,
        #[arg(long)]
        alert_log: Option<PathBuf>,
        #[arg(long)]
        cors_origin: Option<String>,
        #[arg(long)]
        webhook: Option<String>,
    },
}

/// Training hyperparameter overrides.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub svm_c: Option<f64>,
    #[arg(long)]
    pub kernel: Option<KernelChoice>,
    #[arg(long)]
    pub gamma: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut TrainConfig) {
        if let Some(v) = self.learning_rate {
            cfg.logreg.learning_rate = v;
        }
        if let Some(v) = self.max_iters {
            cfg.logreg.max_iters = v;
        }
        if let Some(v) = self.n_trees {
            cfg.forest.n_trees = v;
        }
        if let Some(v) = self.max_depth {
            cfg.forest.max_depth = v;
        }
        if let Some(v) = self.svm_c {
            cfg.svm.c = v;
        }
        if let Some(v) = self.kernel {
            cfg.svm.kernel = v;
        }
        if self.gamma.is_some() {
            cfg.svm.gamma = self.gamma;
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Scenario(#[from] EdgeError),
    #[error(transparent)]
    Service(#[from] ServiceError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

fn model_code(e: &ModelError) -> &'static str {
    match e {
        ModelError::SingleClassInput => "single_class",
        ModelError::Io(_) => "io",
        _ => "model",
    }
}

impl CliError {
    /// Short machine-readable category.
    pub fn code(&self) -> &'static str {
        use PipelineError as P;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Model(m)
            | CliError::Pipeline(P::Model(m))
            | CliError::Metrics(MetricsError::Model(m))
            | CliError::Pipeline(P::Metrics(MetricsError::Model(m)))
            | CliError::Service(ServiceError::Model(P::Model(m))) => model_code(m),
            CliError::Dataset(DatasetError::Io(_)) | CliError::Pipeline(P::Dataset(DatasetError::Io(_))) => "io",
            CliError::Dataset(_)
            | CliError::Pipeline(P::Dataset(_))
            | CliError::Metrics(_)
            | CliError::Pipeline(P::Metrics(_)) => "dataset",
            CliError::Pipeline(P::Manifest(_)) => "model",
            CliError::Pipeline(P::Io { .. }) | CliError::Io(_) => "io",
            CliError::Service(_) => "service",
            CliError::Scenario(_) => "scenario",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.code() {
            "usage" => 2,
            "dataset" => 3,
            "single_class" => 4,
            "model" => 5,
            "io" => 6,
            "service" => 7,
            _ => 8,
        }
    }
}

fn write_json<T: serde::Serialize + ?Sized>(out: &mut dyn Write, v: &T) -> Result<(), CliError> {
    let text = to_canonical_string(v).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn features(temp: f64, rh: f64, oxy: f64) -> Result<FeatureVector, CliError> {
    FeatureVector::new(temp, rh, oxy).map_err(|e| CliError::Usage(e.to_string()))
}

/// Runs one parsed command, writing its normal output to `out`.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::GenData { out: path, n, seed } => {
            let records = synth::generate(n, seed)?;
            let file = File::create(&path)?;
            write_csv(&records, BufWriter::new(file))?;
            writeln!(out, "wrote {} rows to {}", records.len(), path.display())?;
        }
        Command::Train {
            data,
            model_out,
            seed,
            format,
            trained_at,
            overrides,
        } => {
            let mut cfg = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            overrides.apply(&mut cfg);
            let records = load_csv(&data)?;
            let outcome = train_all(&records, &cfg)?;
            let manifest = write_artifacts(&outcome, &model_out, trained_at)?;
            match format {
                Format::Table => {
                    out.write_all(render_table(&outcome.reports).as_bytes())?;
                    writeln!(
                        out,
                        "selected: {} ({})",
                        manifest.kind.display_name(),
                        manifest.version
                    )?;
                }
                Format::Json => write_json(out, &outcome.reports)?,
            }
        }
        Command::Evaluate {
            model,
            data,
            seed,
            format,
        } => {
            let loaded = LoadedModel::load(&model)?;
            let split = prepare(&load_csv(&data)?, seed)?;
            let report = evaluate(&loaded.model, &split.test)?;
            match format {
                Format::Table => out.write_all(render_table(std::slice::from_ref(&report)).as_bytes())?,
                Format::Json => write_json(out, &report)?,
            }
        }
        Command::Predict {
            model,
            temp,
            rh,
            oxy,
            format,
        } => {
            let x = features(temp, rh, oxy)?;
            let loaded = LoadedModel::load(&model)?;
            let resp = loaded.predict(&x);
            let text = match format {
                Format::Table => resp.to_text(),
                Format::Json => resp.to_json(),
            };
            out.write_all(text.as_bytes())?;
        }
        Command::Simulate { script, webhook } => {
            let script = ScenarioScript::load(&script)?;
            let hook = webhook.map(WebhookSink::new);
            let sinks: Vec<&dyn AlertSink> = hook.iter().map(|h| h as &dyn AlertSink).collect();
            let log = run_scenario(&script, &sinks)?;
            out.write_all(log.to_json_lines().as_bytes())?;
        }
        Command::Serve {
            addr,
            port,
            model,
            alert_log,
            cors_origin,
            webhook,
        } => {
            let mut config = ServiceConfig::new();
            config.addr = addr;
            config.port = port;
            config.model = Some(model);
            config.alert_log = alert_log;
            config.cors_origin = cors_origin;
            config.sinks = webhook
                .map(|u| Arc::new(WebhookSink::new(u)) as Arc<dyn AlertSink>)
                .into_iter()
                .collect();
            service::run(config)?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Parses `args`, runs the command and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let rendered = e.kind().to_string();
            let detail = e
                .to_string()
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_string();
            let msg = if detail.is_empty() { rendered } else { detail };
            eprintln!("error: usage: {msg}");
            return 2;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", e.code());
            e.exit_code()
        }
    }
}
