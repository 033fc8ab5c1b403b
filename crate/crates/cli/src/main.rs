use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nlch::config::{RunConfig, DEFAULT_CONFIG};
use nlch::error::Error;
use nlch::experiments;
use nlch::io::{write_run_artifacts, write_text};
use nlch::model::ValidationMode;
use nlch::solver::run;

/// Non-local Cahn-Hilliard tumor growth with a single-well Lennard-Jones potential.
#[derive(Debug, Parser)]
#[command(name = "nlch", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML configuration; the shipped default is used when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,
    /// Seed for random initial conditions, overriding the file.
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
    /// Enforce every assumption (default unless the file says otherwise).
    #[arg(long, conflicts_with = "lab")]
    strict: bool,
    /// Downgrade assumption failures to warnings.
    #[arg(long)]
    lab: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate potential, kernel and model assumptions.
    Check(Common),
    /// Integrate and write diagnostics, snapshots and a summary.
    Run(Common),
    /// Continuous dependence on initial data.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Second configuration; without it the first one's φ₀ is perturbed
        /// by the configured cosine mode.
        #[arg(long, value_name = "PATH")]
        other: Option<PathBuf>,
    },
    /// Runs over decreasing τ against the τ = 0 run.
    SweepTau {
        #[command(flatten)]
        common: Common,
        /// Comma-separated list overriding the file.
        #[arg(long, value_delimiter = ',')]
        taus: Option<Vec<f64>>,
    },
    /// Runs over decreasing λ and checks Cauchy behavior.
    SweepLambda {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Tabulates F, F_λ and F'_λ.
    PotentialTable {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = -0.5, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 1.5)]
        hi: f64,
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
}

fn load(common: &Common, path: Option<&Path>) -> Result<RunConfig, Error> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::from_toml_str(DEFAULT_CONFIG)?,
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.strict {
        cfg.mode = ValidationMode::Strict;
    }
    if common.lab {
        cfg.mode = ValidationMode::Lab;
    }
    Ok(cfg)
}

fn out_dir(common: &Common) -> Result<&Path, Error> {
    std::fs::create_dir_all(&common.out).map_err(|e| Error::io(&common.out, e))?;
    Ok(&common.out)
}

fn execute(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Check(common) => {
            let cfg = load(&common, common.config.as_deref())?;
            let report = experiments::check(&cfg)?;
            println!("{report}");
            Ok(if report.passes() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            })
        }
        Command::Run(common) => {
            let cfg = load(&common, common.config.as_deref())?;
            let problem = cfg.resolve()?;
            let result = run(&problem, cfg.run_options())?;
            for w in result.validation.warnings() {
                eprintln!("warning: {}: {}", w.name, w.detail);
            }
            let files = write_run_artifacts(out_dir(&common)?, &result, problem.potential.lambda())?;
            print!("{}", nlch::io::run_summary(&result, problem.potential.lambda()));
            println!("wrote {} files to {}", files.len(), common.out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { common, other } => {
            let cfg = load(&common, common.config.as_deref())?;
            let (a, b) = match other {
                Some(path) => (cfg.resolve()?, load(&common, Some(&path))?.resolve()?),
                None => experiments::perturbed_pair(&cfg)?,
            };
            let report = experiments::compare(&a, &b)?;
            let text = format!("{report}\n");
            write_text(&out_dir(&common)?.join("compare.txt"), &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepTau { common, taus } => {
            let cfg = load(&common, common.config.as_deref())?;
            let taus = taus.unwrap_or_else(|| cfg.experiment.taus.clone());
            let report = experiments::sweep_tau(&cfg.resolve()?, &taus, cfg.experiment.tau_bound_factor)?;
            let text = format!("{report}\n");
            write_text(&out_dir(&common)?.join("sweep_tau.csv"), &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::SweepLambda { common, lambdas } => {
            let cfg = load(&common, common.config.as_deref())?;
            let lambdas = lambdas.unwrap_or_else(|| cfg.experiment.lambdas.clone());
            let report = experiments::sweep_lambda(&cfg.resolve()?, &lambdas, cfg.experiment.cauchy_factor)?;
            let text = format!("{report}\n");
            write_text(&out_dir(&common)?.join("sweep_lambda.csv"), &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
        Command::PotentialTable {
            common,
            lo,
            hi,
            points,
        } => {
            let cfg = load(&common, common.config.as_deref())?;
            let text = experiments::potential_table_csv(&cfg.potential_params()?, lo, hi, points)?;
            write_text(&out_dir(&common)?.join("potential_table.csv"), &text)?;
            print!("{text}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
