use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schrodsim_cli::{cmd_estimate, cmd_respond, cmd_sweep, CliError, Overrides, RunConfig};
use schrodsim_core::response::Method;
use schrodsim_core::sweeps::Axis;

#[derive(Parser)]
#[command(name = "schrodsim", version, about = "Linear response of Lindbladian systems via Schrödingerization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct Common {
    /// TOML config, or a manifest.json from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// closed_form, dense, schrod, circuit or noisy_circuit.
    #[arg(long)]
    method: Option<String>,
    /// Shots per circuit; 0 reads exact probabilities.
    #[arg(long)]
    shots: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Compute χ(τ) and the dense reference series.
    Respond(Common),
    /// Sweep one grid or noise parameter and fit the error decay.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// eta_points, eta_half_width, recovery_offset, shots or noise_p2.
        #[arg(long)]
        axis: Option<String>,
    },
    /// Print qubit and circuit counts for the configured grid.
    Estimate(Common),
}

fn config_error(key: &str, e: impl ToString) -> CliError {
    CliError::Config {
        key: key.into(),
        message: e.to_string(),
    }
}

fn resolve(common: &Common, axis: Option<&str>) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let overrides = Overrides {
        seed: common.seed,
        method: common
            .method
            .as_deref()
            .map(|m| m.parse::<Method>().map_err(|e| config_error("--method", e)))
            .transpose()?,
        shots: common.shots,
        out: common.out.clone(),
        axis: axis
            .map(|a| a.parse::<Axis>().map_err(|e| config_error("--axis", e)))
            .transpose()?,
    };
    overrides.apply(&mut cfg);
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Respond(common) => {
            let cfg = resolve(&common, None)?;
            for p in cmd_respond(&cfg, common.config.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Sweep { common, axis } => {
            let cfg = resolve(&common, axis.as_deref())?;
            for p in cmd_sweep(&cfg, common.config.as_deref())? {
                println!("{}", p.display());
            }
        }
        Command::Estimate(common) => {
            let r = cmd_estimate(&resolve(&common, None)?)?;
            println!("eta_points             {}", r.eta_points);
            println!("ancilla_qubits         {}", r.ancilla_qubits);
            println!("circuits_per_timepoint {}", r.circuits_per_timepoint);
            println!("time_points            {}", r.time_points);
            println!("total_circuits         {}", r.total_circuits);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("SCHRODSIM_THREADS").ok().and_then(|v| v.parse().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
