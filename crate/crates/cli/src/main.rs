//! `sixvertex`: solve Bethe equations, evaluate free energies, check against dense
//! transfer matrices and run parameter sweeps.

mod commands;
mod sweep;
mod table;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use sixvertex::bethe_discrete::SolverOptions;

use commands::{CliError, Output, EXIT_DOMAIN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "sixvertex", version, about = "Six-vertex model Bethe ansatz toolkit")]
struct Cli {
    /// Newton tolerance on max |T(λ)ᵢ|.
    #[arg(long, global = true, default_value_t = 1e-12)]
    tol: f64,
    /// Nyström nodes for continuum densities.
    #[arg(long, global = true, default_value_t = sixvertex::bethe_continuum::DEFAULT_NODES)]
    nodes: usize,
    #[arg(long = "max-iter", global = true, default_value_t = 100)]
    max_iter: usize,
    /// Output format; tables default to csv, scalar commands to json.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print Δ, regime and (r, ζ, θ) for weights a b c.
    Regime { a: f64, b: f64, c: f64 },
    /// Solve the ground-state Bethe equations for N columns and n up arrows.
    Solve { n_sites: usize, n: usize, a: f64, b: f64, c: f64 },
    /// Closed-form free energy f(a,b,c).
    FreeEnergy { a: f64, b: f64, c: f64 },
    /// f_N^(n) from the Bethe eigenvalue.
    FiniteSize { n_sites: usize, n: usize, a: f64, b: f64, c: f64 },
    /// Measured and predicted f − f_N^(n).
    Correction { n_sites: usize, n: usize, a: f64, b: f64, c: f64 },
    /// Compare the Bethe eigenpair with the dense transfer block.
    Oracle { n_sites: usize, n: usize, a: f64, b: f64, c: f64 },
    /// Run a sweep described by a key=value config file.
    Sweep { config: PathBuf },
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let opts = SolverOptions {
        tol: cli.tol,
        max_iter: cli.max_iter,
        nodes: cli.nodes,
    };
    if !(cli.tol > 0.0) || cli.nodes < 32 {
        return Err(CliError {
            code: EXIT_DOMAIN,
            message: "--tol must be positive and --nodes at least 32".into(),
            detail: None,
        });
    }
    match cli.command {
        Command::Regime { a, b, c } => commands::regime(a, b, c),
        Command::Solve { n_sites, n, a, b, c } => commands::solve(n_sites, n, a, b, c, &opts),
        Command::FreeEnergy { a, b, c } => commands::free_energy_cmd(a, b, c),
        Command::FiniteSize { n_sites, n, a, b, c } => commands::finite_size(n_sites, n, a, b, c, &opts),
        Command::Correction { n_sites, n, a, b, c } => commands::correction(n_sites, n, a, b, c, &opts),
        Command::Oracle { n_sites, n, a, b, c } => commands::oracle(n_sites, n, a, b, c, &opts),
        Command::Sweep { ref config } => {
            let text = std::fs::read_to_string(config).map_err(|e| CliError {
                code: EXIT_DOMAIN,
                message: format!("cannot read {}: {e}", config.display()),
                detail: None,
            })?;
            let cfg = sweep::parse_config(&text)?;
            sweep::run(&cfg, &opts, cli.jobs).map(Output::Table)
        }
    }
}

fn render(out: &Output, format: Option<Format>) -> String {
    match (out, format) {
        (Output::Table(t), Some(Format::Json)) => format!("{:#}\n", t.to_json()),
        (Output::Table(t), _) => t.to_csv(),
        (Output::Json(v) | Output::Failed(v, _), _) => format!("{v:#}\n"),
    }
}

fn emit(text: &str, out: Option<&PathBuf>) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(out) => {
            if let Err(e) = emit(&render(&out, cli.format), cli.out.as_ref()) {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_DOMAIN as u8);
            }
            match out {
                Output::Failed(_, code) => ExitCode::from(code as u8),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            if let Some(d) = e.detail {
                eprintln!("{d:#}");
            }
            ExitCode::from(e.code as u8)
        }
    }
}
