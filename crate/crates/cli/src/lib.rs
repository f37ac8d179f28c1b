//! Command-line pipeline around `coronal-core`: synthetic data, segmentation,
//! matching, map classification, parameter tuning and evaluation.

pub mod commands;
pub mod config;
pub mod error;
pub mod layout;
pub mod render;
pub mod synth;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::Context;
use config::PipelineConfig;
use error::{CliError, Result};
use layout::{DateRange, Layout};

#[derive(Debug, Parser)]
#[command(name = "coronal", version, about = "Coronal hole segmentation, matching and map classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// INI configuration file; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Inclusive date range, either end may be empty.
    #[arg(long, global = true, value_name = "FROM:TO")]
    pub dates: Option<String>,

    /// Worker threads for per-date work.
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    /// Overrides `[run] seed`.
    #[arg(long, global = true, value_name = "S")]
    pub seed: Option<u64>,

    /// Output root: the dataset directory for `synth`, the work directory otherwise.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset.
    Synth,
    /// Initialise, union and refine hole masks; write metrics and overlays.
    Segment,
    /// Match model maps against the reference and extract map features.
    Match,
    /// Label every matched model map with the trained classifier.
    Classify,
    /// Train the map classifier, or the hole selectors with `--selector`.
    TrainClassifier {
        #[arg(long)]
        selector: bool,
    },
    /// Pattern-search the level-set alpha and sigma.
    Tune,
    /// Consolidate stage outputs into one report.
    Eval,
}

impl Cli {
    pub fn context(&self) -> Result<Context> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let mut layout = Layout { data: cfg.paths.data.clone(), work: cfg.paths.work.clone() };
        if let Some(out) = &self.out {
            match self.command {
                Command::Synth => layout.data = out.clone(),
                _ => layout.work = out.clone(),
            }
        }
        let range = match &self.dates {
            Some(d) => DateRange::parse(d)?,
            None => DateRange::default(),
        };
        Ok(Context { cfg, layout, range })
    }
}

/// Runs one command and returns the line to print on success.
pub fn run(cli: &Cli) -> Result<String> {
    let ctx = cli.context()?;
    let pool = match cli.jobs {
        Some(0) => return Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    }
    .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(&cli.command, &ctx))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| format!("{x:.4}"))
}

fn dispatch(command: &Command, ctx: &Context) -> Result<String> {
    Ok(match command {
        Command::Synth => {
            let dates = commands::synth::run(ctx)?;
            format!("synth: {} dates written to {}", dates.len(), ctx.layout.data.display())
        }
        Command::Segment => {
            let s = commands::segment::run(ctx)?;
            format!(
                "segment: {} dates, median d {} (initializer {})",
                s.rows.len(),
                fmt_opt(s.median_d),
                fmt_opt(s.median_init_d)
            )
        }
        Command::Match => {
            let s = commands::matching::run(ctx)?;
            format!(
                "match: {} model maps over {} dates, cluster status accuracy {}",
                s.n_models,
                s.n_dates,
                fmt_opt(s.accuracy)
            )
        }
        Command::Classify => {
            let rows = commands::classify::classify(ctx)?;
            let good = rows.iter().filter(|r| r.class == coronal_core::classify::MapClass::Good).count();
            format!("classify: {} maps, {good} good", rows.len())
        }
        Command::TrainClassifier { selector: true } => {
            let rows = commands::classify::train_selectors(ctx)?;
            let parts: Vec<String> =
                rows.iter().map(|r| format!("{} {}/{} valid", r.source, r.valid, r.candidates)).collect();
            format!("train-classifier: selectors trained ({})", parts.join(", "))
        }
        Command::TrainClassifier { selector: false } => {
            let s = commands::classify::train_classifier(ctx)?;
            format!(
                "train-classifier: held-out accuracy {:.4} on {} maps, OOB error {:.4}",
                s.accuracy, s.n_test, s.oob_error
            )
        }
        Command::Tune => {
            let r = commands::tune::run(ctx)?;
            format!(
                "tune: alpha {:.4}, sigma {:.4} from {} images{}",
                r.tuned.alpha,
                r.tuned.sigma,
                r.dates.len(),
                if r.tuned.warning { " (evaluation budget reached)" } else { "" }
            )
        }
        Command::Eval => {
            commands::eval::run(ctx)?;
            format!("eval: report written to {}", ctx.layout.report("report.md").display())
        }
    })
}
