use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use surropt::commands::{self, LandscapeArgs, Overrides, Study};
use surropt::config::RunConfig;

#[derive(Parser)]
#[command(
    name = "surropt",
    version,
    about = "Surrogate-guided optimization of black-box simulators"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Reuse `initial.csv` from the output directory instead of sampling.
    #[arg(long)]
    resume: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Full optimization loop. Exits 0 on goal or convergence, 2 when the
    /// iteration budget runs out.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Query the initial Sobol design only.
    Sample {
        #[command(flatten)]
        common: Common,
        /// Number of points; defaults to the config's initial_samples.
        #[arg(long)]
        count: Option<usize>,
    },
    /// One of the analysis studies.
    Study {
        kind: StudyKind,
        #[command(flatten)]
        common: Common,
        /// Landscape axes as two zero-based input indices, e.g. `5,2`.
        #[arg(long)]
        dims: Option<String>,
        /// Landscape grid points per axis.
        #[arg(long)]
        resolution: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StudyKind {
    Sensitivity,
    Landscape,
    Sweep,
    Baseline,
    Predictions,
}

impl From<StudyKind> for Study {
    fn from(k: StudyKind) -> Study {
        match k {
            StudyKind::Sensitivity => Study::Sensitivity,
            StudyKind::Landscape => Study::Landscape,
            StudyKind::Sweep => Study::Sweep,
            StudyKind::Baseline => Study::Baseline,
            StudyKind::Predictions => Study::Predictions,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig> {
    let mut config = RunConfig::load(&common.config)?;
    Overrides {
        seed: common.seed,
        out: common.out.clone(),
        resume: common.resume,
    }
    .apply(&mut config);
    Ok(config)
}

fn init_threads() -> Result<()> {
    if let Ok(n) = std::env::var("SURROPT_THREADS") {
        let n: usize = n.parse().context("SURROPT_THREADS must be a non-negative integer")?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<u8> {
    init_threads()?;
    match cli.command {
        Cmd::Run { common } => {
            let config = load(&common)?;
            let summary = commands::cmd_run(&config, common.resume)?;
            println!(
                "{}: loss {} after {} iterations ({} queries)",
                summary.stop_reason, summary.true_loss, summary.iterations, summary.total_queries
            );
            Ok(commands::run_exit_code(summary.stop_reason) as u8)
        }
        Cmd::Sample { common, count } => {
            let config = load(&common)?;
            let data = commands::cmd_sample(&config, count)?;
            println!(
                "wrote {} records to {}",
                data.len(),
                config.output_dir.join(commands::INITIAL_CSV).display()
            );
            Ok(0)
        }
        Cmd::Study {
            kind,
            common,
            dims,
            resolution,
        } => {
            let config = load(&common)?;
            let args = LandscapeArgs {
                dims: dims.as_deref().map(commands::parse_dims).transpose()?,
                resolution,
            };
            commands::cmd_study(&config, kind.into(), common.resume, &args)?;
            println!("wrote study output to {}", config.output_dir.display());
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
