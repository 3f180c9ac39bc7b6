use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use petrowave::fitting::{FitModel, FitWindow};
use petrowave_cli::commands::{self, SweepSpec};
use petrowave_cli::{exit, CliError, ExperimentConfig, FitArgs, Outcome};

#[derive(Parser)]
#[command(name = "petrowave", version, about = "Simulate and analyse energy decay of a damped plate/wave system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check coupling admissibility and damping hypotheses
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 0 even when conditions fail
        #[arg(long)]
        force: bool,
    },
    /// Run the Galerkin simulation
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample the decay envelope and report the asymptotic rate
    Envelope {
        #[arg(long)]
        config: PathBuf,
        /// Energy CSV supplying E0 and the time grid
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a decay model to an energy trace and check envelope dominance
    Fit {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        model: Option<Model>,
        /// Fit window as `t_min,t_max`
        #[arg(long, value_parser = parse_window)]
        window: Option<FitWindow>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        q: Option<f64>,
        /// Dominance constant (default: anchored at the window start)
        #[arg(long)]
        constant: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a list of config variants, each in its own output directory
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Exponential,
    Power,
    PowerLog,
}

impl From<Model> for FitModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Exponential => FitModel::Exponential,
            Model::Power => FitModel::Power,
            Model::PowerLog => FitModel::PowerLog,
        }
    }
}

fn parse_window(s: &str) -> Result<FitWindow, String> {
    let (a, b) = s.split_once(',').ok_or("expected t_min,t_max")?;
    let a: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    FitWindow::new(a, b).map_err(|e| e.to_string())
}

const FIT_DEFAULTS: &str = r#"{"schema_version": 1, "basis": {"length": 1, "modes": 1}, "dt": 1e-3, "t_end": 0,
    "decay": {"omega": "fit"}}"#;

fn read_json(path: &Path) -> Result<serde_json::Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn dispatch(cmd: Command) -> Result<Outcome, CliError> {
    match cmd {
        Command::Check { config, out, force } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_check(&cfg, &cfg.output_dir(out.as_deref()), force)
        }
        Command::Simulate { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_simulate(&cfg, &cfg.output_dir(out.as_deref()))
        }
        Command::Envelope { config, trace, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            commands::cmd_envelope(&cfg, trace.as_deref(), &cfg.output_dir(out.as_deref()))
        }
        Command::Fit {
            trace,
            config,
            model,
            window,
            p,
            q,
            constant,
            out,
        } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::from_json(FIT_DEFAULTS)?,
            };
            let args = FitArgs {
                model: model.map(Into::into),
                window,
                p,
                q,
                constant,
            };
            commands::cmd_fit(&trace, &cfg, &args, &cfg.output_dir(out.as_deref()))
        }
        Command::Sweep { config, spec, jobs, out } => {
            let base = read_json(&config)?;
            let spec: SweepSpec = serde_json::from_value(read_json(&spec)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", spec.display())))?;
            let out = out.unwrap_or_else(|| PathBuf::from("out"));
            let (outcome, results) = commands::cmd_sweep(&base, &spec, jobs, &out)?;
            for r in &results {
                println!("{:>3}  {}  {}", r.exit_code, r.name, r.message);
            }
            match results.iter().map(|r| r.exit_code).max() {
                Some(code) if code != 0 => Err(CliError::Sweep {
                    code,
                    summary: outcome.summary,
                }),
                _ => Ok(outcome),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for p in &outcome.written {
                println!("  wrote {}", p.display());
            }
            ExitCode::from(exit::OK as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
