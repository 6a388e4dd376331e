//! Command-line front end: configuration, the five subcommands and their
//! output files.

pub mod commands;
pub mod config;
pub mod error;
pub mod predictions;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use evsurv::metrics::SurvivalCurveMode;
use evsurv::Exec;

pub use config::RunConfig;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "evsurv", version, about = "Evidential survival regression with Gaussian random fuzzy numbers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write simulated train/validation CSVs.
    Simulate,
    /// Fit a model; write checkpoint, history and validation predictions.
    Train,
    /// Repeated k-fold cross-validation report.
    Cv,
    /// Prediction and BPI curves over a grid of the single feature.
    Plotdata {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Dataset to export alongside the curves.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Score a predictions file against a dataset.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        data: PathBuf,
    },
}

/// Each flag overrides one configuration entry.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// output_dir
    #[arg(long = "out", global = true)]
    pub output_dir: Option<PathBuf>,
    /// Number of prototypes.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub grid_size: Option<usize>,
    /// Comma-separated BPI levels.
    #[arg(long, global = true, value_delimiter = ',')]
    pub bpi_levels: Option<Vec<f64>>,
    #[arg(long, global = true)]
    pub curve_mode: Option<SurvivalCurveMode>,

    /// data.source: simulate or csv
    #[arg(long, global = true)]
    pub source: Option<config::DataSource>,
    #[arg(long, global = true)]
    pub n_train: Option<usize>,
    #[arg(long, global = true)]
    pub n_val: Option<usize>,
    #[arg(long, global = true)]
    pub censor_prob: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub censor_lo: Option<f64>,
    /// data.path; also sets data.source = csv
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
    /// data.val_path
    #[arg(long, global = true)]
    pub val_csv: Option<PathBuf>,
    /// Comma-separated feature columns.
    #[arg(long, global = true, value_delimiter = ',')]
    pub features: Option<Vec<String>>,
    #[arg(long, global = true)]
    pub duration_col: Option<String>,
    #[arg(long, global = true)]
    pub event_col: Option<String>,
    #[arg(long, global = true)]
    pub val_fraction: Option<f64>,

    #[arg(long, global = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long, global = true)]
    pub xi: Option<f64>,
    #[arg(long, global = true)]
    pub rho: Option<f64>,

    #[arg(long, global = true)]
    pub learning_rate: Option<f64>,
    #[arg(long, global = true)]
    pub batch_size: Option<usize>,
    #[arg(long, global = true)]
    pub max_epochs: Option<usize>,
    #[arg(long, global = true)]
    pub patience: Option<usize>,

    #[arg(long, global = true)]
    pub folds: Option<usize>,
    #[arg(long, global = true)]
    pub repeats: Option<usize>,

    /// Run on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

impl Overrides {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($path:ident).+;)*) => {
                $(if let Some(v) = &self.$flag { c.$($path).+ = v.clone(); })*
            };
        }
        set! {
            seed => seed;
            output_dir => output_dir;
            k => k;
            grid_size => grid_size;
            bpi_levels => bpi_levels;
            curve_mode => curve_mode;
            source => data.source;
            n_train => data.n_train;
            n_val => data.n_val;
            censor_prob => data.censor_prob;
            censor_lo => data.censor_lo;
            features => data.features;
            duration_col => data.duration;
            event_col => data.event;
            val_fraction => data.val_fraction;
            lambda => loss.lambda;
            epsilon => loss.epsilon;
            xi => loss.xi;
            rho => loss.rho;
            learning_rate => train.learning_rate;
            batch_size => train.batch_size;
            max_epochs => train.max_epochs;
            patience => train.patience;
            folds => cv.folds;
            repeats => cv.repeats;
        }
        if let Some(p) = &self.csv {
            c.data.path = Some(p.clone());
            if self.source.is_none() {
                c.data.source = config::DataSource::Csv;
            }
        }
        if let Some(p) = &self.val_csv {
            c.data.val_path = Some(p.clone());
        }
        c.validate()?;
        Ok(c)
    }

    pub fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::Parallel
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.overrides.resolve()?;
    let exec = cli.overrides.exec();
    match &cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg),
        Command::Train => commands::cmd_train(&cfg, exec),
        Command::Cv => commands::cmd_cv(&cfg, exec).map(|_| ()),
        Command::Plotdata { checkpoint, data } => commands::cmd_plotdata(&cfg, checkpoint, data.as_deref()),
        Command::Eval { predictions, data } => commands::cmd_eval(&cfg, predictions, data, exec).map(|_| ()),
    }
}

/// Parses `args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
