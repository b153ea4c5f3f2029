use std::path::{Path, PathBuf};
use std::process::ExitCode;

use activesub::analyze::{self, REPORT_FILE};
use activesub::config::{AnalysisConfig, OptimizeConfig};
use activesub::diagnose::{diagnose, Thresholds};
use activesub::ego::Termination;
use activesub::{csvio, Error, Result, TestFunction};
use clap::{Parser, Subcommand};

/// Active subspace analysis of black-box objectives.
#[derive(Parser)]
#[command(name = "activesub", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample, fit a surrogate, find the active subspace and write the report and plots.
    Analyze {
        #[arg(long)]
        config: PathBuf,
    },
    /// Write a Latin-hypercube design as CSV.
    ///
    /// PROBLEM is a built-in name (`zakharov`, `hartman6`, `fourbar`; responses are
    /// included) or a bounds CSV with header `x1,...,xm` and two rows, lower then upper
    /// (designs only, for external evaluation).
    Sample {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Dimension for `zakharov`.
        #[arg(long)]
        dim: Option<usize>,
        /// Objective index for multi-objective built-ins.
        #[arg(long, default_value_t = 0)]
        objective: usize,
    },
    /// Run efficient global optimization on a built-in problem.
    Optimize {
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run the diagnosis rules on an existing projection and print the result as JSON.
    Diagnose {
        #[arg(long)]
        reduced: PathBuf,
        /// Eigenvalue file; defaults to `eigen_decay.csv` next to the reduced file.
        #[arg(long)]
        eigen: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Analyze { config } => {
            let config = AnalysisConfig::load(&config)?;
            let outcome = analyze::run_analysis(&config)?;
            let d = &outcome.diagnosis;
            let flags: Vec<&str> = d.flags.iter().map(|f| f.as_str()).collect();
            println!("report: {}", config.resolve(&config.output_dir).join(REPORT_FILE).display());
            println!("explained_1: {:.6}  explained_2: {:.6}", d.explained_1, d.explained_2);
            println!("flags: {}", if flags.is_empty() { "(none)".to_string() } else { flags.join(", ") });
            println!("{}", d.recommendation);
            Ok(())
        }
        Command::Sample {
            problem,
            k,
            seed,
            out,
            dim,
            objective,
        } => sample(&problem, k, seed, &out, dim, objective),
        Command::Optimize { config } => {
            let config = OptimizeConfig::load(&config)?;
            let result = analyze::run_optimize(&config)?;
            match &result.termination {
                Termination::BudgetExhausted => {}
                other => log::warn!("run stopped early: {other:?}"),
            }
            println!("evaluations: {}", result.history.len());
            println!("best_y: {}", result.best_y);
            println!("best_x: {:?}", result.best_x);
            Ok(())
        }
        Command::Diagnose { reduced, eigen } => {
            let eigen = eigen.unwrap_or_else(|| sibling(&reduced, analyze::EIGEN_CSV_FILE));
            let (xr, y) = csvio::read_reduced_csv(&reduced)?;
            let eigenvalues = csvio::read_eigen_csv(&eigen)?;
            let report = diagnose(&xr, &y, &eigenvalues, None, &Thresholds::default())?;
            let value = analyze::sorted_json(serde_json::to_value(&report)?);
            println!("{}", serde_json::to_string_pretty(&value)?);
            Ok(())
        }
    }
}

fn sibling(path: &Path, name: &str) -> PathBuf {
    path.parent().unwrap_or(Path::new("")).join(name)
}

fn sample(problem: &str, k: usize, seed: u64, out: &Path, dim: Option<usize>, objective: usize) -> Result<()> {
    let looks_like_file = problem.ends_with(".csv") || Path::new(problem).is_file();
    let samples = if looks_like_file {
        let space = csvio::read_bounds_csv(Path::new(problem))?;
        space.lhs_sample(k, seed)?
    } else {
        let f = match dim {
            Some(_) => TestFunction::by_name(problem, dim)?,
            None => problem.parse::<TestFunction>()?,
        };
        if objective >= f.num_objectives() {
            return Err(Error::UnknownObjective {
                index: objective,
                available: f.num_objectives(),
            });
        }
        let design = f.space().lhs_sample(k, seed)?;
        let y = (0..k)
            .map(|r| f.evaluate(objective, &design.point(r)))
            .collect::<Result<Vec<_>>>()?;
        design.with_responses(y)?
    };
    csvio::emit_design_csv(&samples, out)?;
    println!("wrote {} designs to {}", samples.len(), out.display());
    Ok(())
}
