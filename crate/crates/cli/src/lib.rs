//! Command implementations behind the `schrodsim` binary.
//!
//! Each command writes into the configured output directory and finishes
//! with `manifest.json`, which can be passed back as `--config` to repeat
//! the run.

pub mod config;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use schrodsim_core::noise::NoiseModel;
use schrodsim_core::response::{metadata_json, write_csv, Method, ResponseSeries};
use schrodsim_core::schrod::resource_estimate;
use schrodsim_core::sweeps::{
    fit_loglinear, pre_floor_window, run_sweep, sweep_file_name, write_sweep_csv, Axis,
    SweepMethod, SweepRow, SweepSpec, XTransform,
};

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid config at `{key}`: {message}")]
    Config { key: String, message: String },
    #[error("numerical failure: {0}")]
    Numerical(#[from] schrodsim_core::Error),
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for configuration problems, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub method: Option<Method>,
    pub shots: Option<u64>,
    pub out: Option<PathBuf>,
    pub axis: Option<Axis>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) {
        if let Some(s) = self.seed {
            cfg.execution.seed = s;
        }
        if let Some(m) = self.method {
            cfg.execution.method = m;
        }
        if let Some(s) = self.shots {
            cfg.execution.shots = s;
        }
        if let Some(o) = &self.out {
            cfg.output.directory = o.to_string_lossy().into_owned();
        }
        if let Some(a) = self.axis {
            cfg.sweep.axis = Some(a);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub version: String,
    /// SHA-256 of each input file, keyed by the path given on the command line.
    pub input_hashes: BTreeMap<String, String>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(
    dir: &Path,
    command: &str,
    cfg: &RunConfig,
    input: Option<&Path>,
    outputs: &[PathBuf],
) -> Result<PathBuf, CliError> {
    let mut input_hashes = BTreeMap::new();
    if let Some(p) = input {
        input_hashes.insert(p.display().to_string(), sha256_hex(&fs::read(p)?));
    }
    let manifest = Manifest {
        command: command.into(),
        config: cfg.clone(),
        seed: cfg.execution.seed,
        version: env!("CARGO_PKG_VERSION").into(),
        input_hashes,
        outputs: outputs
            .iter()
            .filter_map(|p| p.file_name().map(|f| f.to_string_lossy().into_owned()))
            .collect(),
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
    Ok(path)
}

fn write_series(dir: &Path, series: &ResponseSeries) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = dir.join(format!("chi_{}.csv", series.method));
    write_csv(series, BufWriter::new(File::create(&csv_path)?))?;
    let json_path = dir.join(format!("chi_{}.json", series.method));
    fs::write(&json_path, serde_json::to_string_pretty(&metadata_json(series)).unwrap() + "\n")?;
    Ok(vec![csv_path, json_path])
}

fn series_params(cfg: &RunConfig, noise: Option<&NoiseModel>) -> serde_json::Value {
    serde_json::json!({
        "model": cfg.model,
        "grid": cfg.grid,
        "time": cfg.time,
        "shots": cfg.execution.shots,
        "seed": cfg.execution.seed,
        "noise": noise,
    })
}

/// Computes χ with the configured method and always the dense reference.
pub fn cmd_respond(cfg: &RunConfig, input: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let times = cfg.times();
    let method = cfg.execution.method;
    let noise = (method == Method::NoisyCircuit).then(|| cfg.noise_model());

    let reference = problem.dense(&times)?.with_params(series_params(cfg, None));
    let series = match method {
        Method::Dense => None,
        Method::ClosedForm => Some(problem.closed_form(&times)?),
        Method::Schrod => Some(problem.schrod(&times, &cfg.eta_grid()?)?),
        Method::Circuit | Method::NoisyCircuit => Some(
            problem
                .circuit_biases(&times, &cfg.eta_grid()?, noise.as_ref())?
                .sampled_series(cfg.execution.shots, cfg.execution.seed)?,
        ),
    };

    let dir = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&dir)?;
    let mut outputs = write_series(&dir, &reference)?;
    if let Some(s) = series {
        outputs.extend(write_series(&dir, &s.with_params(series_params(cfg, noise.as_ref())))?);
    }
    outputs.push(write_manifest(&dir, "respond", cfg, input, &outputs)?);
    Ok(outputs)
}

fn sweep_spec(cfg: &RunConfig, method: SweepMethod) -> Result<SweepSpec, CliError> {
    let axis = cfg.sweep.axis.ok_or_else(|| CliError::Config {
        key: "sweep.axis".into(),
        message: "no axis given (use --axis or [sweep] axis)".into(),
    })?;
    let values = if cfg.sweep.values.is_empty() {
        config::default_axis_values(axis)
    } else {
        cfg.sweep.values.clone()
    };
    let spec = SweepSpec {
        axis,
        values,
        method,
        grid: cfg.grid_params(),
        times: cfg.times(),
        reference: cfg.execution.reference,
        seed: cfg.execution.seed,
        shots: cfg.execution.shots,
        repeats: cfg.execution.repeats,
        noise: cfg.noise_model(),
    };
    spec.validate().map_err(|e| CliError::Config {
        key: "sweep".into(),
        message: e.to_string(),
    })?;
    Ok(spec)
}

#[derive(Debug, Clone, Serialize)]
struct SweepSummary<'a> {
    spec: &'a SweepSpec,
    rows: &'a [SweepRow],
    window: Vec<f64>,
    fit_identity: Option<schrodsim_core::sweeps::LogLinearFit>,
    fit_log: Option<schrodsim_core::sweeps::LogLinearFit>,
}

fn write_sweep(
    dir: &Path,
    spec: &SweepSpec,
    rows: &[SweepRow],
    stamp: &str,
) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = dir.join(sweep_file_name(spec.axis, spec.method, stamp));
    write_sweep_csv(rows, BufWriter::new(File::create(&csv_path)?))?;
    let window = pre_floor_window(rows);
    let summary = SweepSummary {
        spec,
        rows,
        window: window.iter().map(|r| r.value).collect(),
        fit_identity: fit_loglinear(&window, XTransform::Identity).ok(),
        fit_log: fit_loglinear(&window, XTransform::Log).ok(),
    };
    let json_path = csv_path.with_extension("json");
    fs::write(&json_path, serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
    Ok(vec![csv_path, json_path])
}

/// Runs the configured sweep. With a `[noise]` section and a noiseless
/// method, the same axis is also swept with the noisy circuit so the two
/// curves can be compared.
pub fn cmd_sweep(cfg: &RunConfig, input: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    cfg.validate()?;
    let problem = cfg.problem()?;
    let method = cfg.sweep_method()?;
    let mut specs = vec![sweep_spec(cfg, method)?];
    if cfg.noise.is_some() && method != SweepMethod::NoisyCircuit {
        specs.push(sweep_spec(cfg, SweepMethod::NoisyCircuit)?);
    }
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S").to_string();
    let dir = PathBuf::from(&cfg.output.directory);
    fs::create_dir_all(&dir)?;
    let mut outputs = Vec::new();
    for spec in &specs {
        let rows = run_sweep(&problem, spec)?;
        outputs.extend(write_sweep(&dir, spec, &rows, &stamp)?);
    }
    outputs.push(write_manifest(&dir, "sweep", cfg, input, &outputs)?);
    Ok(outputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EstimateReport {
    pub eta_points: u64,
    pub ancilla_qubits: u32,
    pub circuits_per_timepoint: u64,
    pub time_points: u64,
    pub total_circuits: u64,
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<EstimateReport, CliError> {
    let n = cfg.grid.eta_points as u64;
    let r = resource_estimate(n).map_err(|e| CliError::Config {
        key: "grid.eta_points".into(),
        message: e.to_string(),
    })?;
    let time_points = cfg.time.num_points as u64;
    Ok(EstimateReport {
        eta_points: n,
        ancilla_qubits: r.ancilla_qubits,
        circuits_per_timepoint: r.circuits_per_timepoint,
        time_points,
        total_circuits: r.circuits_per_timepoint * time_points,
    })
}
