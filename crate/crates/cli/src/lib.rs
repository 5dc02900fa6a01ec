//! `phri` command-line front end.

pub mod commands;
pub mod config;
pub mod failure;
pub mod manifest;
pub mod plot;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use phri_core::classifiers::Algorithm;
use phri_core::evaluation::{Grouping, SmoteMode};
use phri_core::features::FeatureMode;

use config::Config;
use failure::CmdResult;

#[derive(Debug, Parser)]
#[command(name = "phri", version, about = "Interaction inference for a force-sensing six-bar tensegrity")]
pub struct Cli {
    /// TOML configuration file. Flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the config file.
    #[arg(long, env = "PHRI_SEED", global = true)]
    pub seed: Option<u64>,
    /// Repeat for more log output.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate labeled synthetic recordings.
    Synth {
        #[arg(long)]
        out: PathBuf,
        /// Number of recordings.
        #[arg(long)]
        total: Option<usize>,
        /// `table1`, `equal` or four weights `null,drop,squeeze,handle`.
        #[arg(long)]
        ratios: Option<String>,
    },
    /// Validate a directory of recording CSVs into a dataset bundle.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// `id,label` table; overrides sidecar labels.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Accept recordings whose only violation is timestamp jitter.
        #[arg(long)]
        lenient: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the prestressed equilibrium and export it.
    Statics {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        diameter: Option<f64>,
        /// Largest bar compression, N.
        #[arg(long)]
        prestress: Option<f64>,
    },
    /// Window recordings and write the feature table.
    Features {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        stride: Option<usize>,
        #[arg(long)]
        mode: Option<FeatureMode>,
    },
    /// Fit one model on all observations.
    Train {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        features: Option<FeatureMode>,
        #[arg(long)]
        algo: Option<Algorithm>,
        /// Balance the training set with SMOTE.
        #[arg(long)]
        smote: Option<bool>,
        #[command(flatten)]
        hyper: Hyper,
    },
    /// Score a saved model.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stride: Option<usize>,
    },
    /// Cross-validate every window x features x algorithm cell.
    Grid {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',')]
        windows: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        features: Option<Vec<FeatureMode>>,
        #[arg(long, value_delimiter = ',')]
        algo: Option<Vec<Algorithm>>,
        #[arg(long)]
        folds: Option<usize>,
        #[arg(long)]
        repeats: Option<usize>,
        /// `recording` or `none`.
        #[arg(long)]
        grouping: Option<Grouping>,
        /// `in-fold`, `before-split` or `off`.
        #[arg(long)]
        smote: Option<SmoteMode>,
        #[command(flatten)]
        hyper: Hyper,
    },
    /// Summarize a grid output directory as report.md.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct Hyper {
    #[arg(long)]
    pub smote_k: Option<usize>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[arg(long)]
    pub trees: Option<usize>,
    /// Min-max scale features on the training rows.
    #[arg(long)]
    pub scale: Option<bool>,
    #[arg(long)]
    pub stride: Option<usize>,
}

impl Hyper {
    fn apply(&self, cfg: &mut Config) {
        if let Some(k) = self.smote_k {
            cfg.cv.smote_k = k;
        }
        if let Some(k) = self.knn_k {
            cfg.cv.knn_k = k;
        }
        if let Some(n) = self.trees {
            cfg.cv.forest.n_trees = n;
        }
        if let Some(s) = self.scale {
            cfg.cv.min_max_scaling = s;
        }
        if self.stride.is_some() {
            cfg.cv.stride = self.stride;
        }
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn execute(cli: Cli) -> CmdResult {
    let mut cfg = Config::load(cli.config.as_deref())?;
    cfg.apply_seed(cli.seed);
    match cli.command {
        Command::Synth { out, total, ratios } => {
            set(&mut cfg.synth.total, total);
            set(&mut cfg.synth.ratios, ratios);
            commands::synth(&cfg, &out)
        }
        Command::Ingest {
            input,
            labels,
            lenient,
            out,
        } => commands::ingest(&cfg, &input, labels.as_deref(), lenient, &out),
        Command::Statics {
            out,
            diameter,
            prestress,
        } => {
            set(&mut cfg.statics.diameter_m, diameter);
            set(&mut cfg.statics.prestress_n, prestress);
            commands::statics(&cfg, &out)
        }
        Command::Features {
            input,
            out,
            window,
            stride,
            mode,
        } => {
            set(&mut cfg.features.window, window);
            if stride.is_some() {
                cfg.features.stride = stride;
            }
            set(&mut cfg.features.mode, mode);
            commands::features(&cfg, &input, &out)
        }
        Command::Train {
            input,
            out,
            window,
            features,
            algo,
            smote,
            hyper,
        } => {
            set(&mut cfg.train.window, window);
            set(&mut cfg.train.features, features);
            set(&mut cfg.train.algorithm, algo);
            set(&mut cfg.train.smote, smote);
            hyper.apply(&mut cfg);
            commands::train(&cfg, &input, &out)
        }
        Command::Evaluate {
            model,
            input,
            out,
            stride,
        } => {
            if stride.is_some() {
                cfg.cv.stride = stride;
            }
            commands::evaluate(&cfg, &model, &input, &out)
        }
        Command::Grid {
            input,
            out,
            windows,
            features,
            algo,
            folds,
            repeats,
            grouping,
            smote,
            hyper,
        } => {
            set(&mut cfg.grid.windows, windows);
            set(&mut cfg.grid.feature_modes, features);
            set(&mut cfg.grid.algorithms, algo);
            set(&mut cfg.cv.folds, folds);
            set(&mut cfg.cv.repeats, repeats);
            set(&mut cfg.cv.grouping, grouping);
            set(&mut cfg.cv.smote, smote);
            hyper.apply(&mut cfg);
            commands::grid(&cfg, &input, &out)
        }
        Command::Report { dir } => commands::report(&cfg, &dir),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { failure::ExitKind::Usage as i32 } else { 0 };
        }
    };
    init_logging(cli.verbose);
    match execute(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {f}");
            f.code()
        }
    }
}
