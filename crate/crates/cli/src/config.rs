//! Run configuration: TOML on disk, or the `config` object of a manifest.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use schrodsim_core::lindblad::{build_liouvillian, steady_state, Jump, LindbladModel};
use schrodsim_core::liouville::{sigma_x, vectorize_operator, Operator};
use schrodsim_core::noise::NoiseModel;
use schrodsim_core::response::{commutator_perturbation, uniform_times, Method, ResponseProblem};
use schrodsim_core::schrod::{make_grid, EtaGrid};
use schrodsim_core::sweeps::{Axis, GridParams, Reference, SweepMethod};

use crate::CliError;

/// Complex matrix written row by row as `[re, im]` pairs.
pub type MatrixConfig = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub time: TimeConfig,
    pub execution: ExecutionConfig,
    pub noise: Option<NoiseModel>,
    pub sweep: SweepConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub omega0: f64,
    pub gamma: f64,
    /// Overrides the amplitude-damping model when set.
    pub hamiltonian: Option<MatrixConfig>,
    pub jumps: Vec<JumpConfig>,
    /// Observable `A`; `σ_x` by default.
    pub observable: Option<MatrixConfig>,
    /// Drive `P` of `𝒱 = −i[P, ·]`; `σ_x` by default.
    pub drive: Option<MatrixConfig>,
    /// Equilibrium state; the steady state of ℒ by default.
    pub rho_eq: Option<MatrixConfig>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            omega0: 2.0,
            gamma: 0.2,
            hamiltonian: None,
            jumps: Vec::new(),
            observable: None,
            drive: None,
            rho_eq: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub operator: MatrixConfig,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub eta_half_width: f64,
    pub eta_points: usize,
    pub recovery_offset: f64,
}

/// Calibrated so that χ for the default model stays within 1e-3 of the
/// dense result on `t ∈ [0, 10]`.
impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            eta_half_width: 4000.0,
            eta_points: 16384,
            recovery_offset: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub t_max: f64,
    pub num_points: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            t_max: 10.0,
            num_points: 201,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExecutionConfig {
    pub method: Method,
    pub shots: u64,
    pub seed: u64,
    pub repeats: u32,
    pub reference: Reference,
}

impl Default for ExecutionConfig {
    fn default() -> Self {
        ExecutionConfig {
            method: Method::Schrod,
            shots: 0,
            seed: 0,
            repeats: 5,
            reference: Reference::Dense,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub axis: Option<Axis>,
    /// Axis values; a per-axis default list when empty.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub directory: String,
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: "out".into(),
            format: "csv".into(),
        }
    }
}

pub fn default_axis_values(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::EtaPoints => vec![2048.0, 4096.0, 8192.0, 16384.0, 32768.0],
        Axis::EtaHalfWidth => vec![250.0, 500.0, 1000.0, 2000.0, 4000.0],
        Axis::RecoveryOffset => vec![0.5, 1.0, 2.0, 4.0],
        Axis::Shots => vec![100.0, 1000.0, 10_000.0, 100_000.0],
        Axis::NoiseP2 => vec![1e-3, 5e-3, 1e-2],
    }
}

fn bad(key: &str, msg: impl Into<String>) -> CliError {
    CliError::Config {
        key: key.into(),
        message: msg.into(),
    }
}

fn operator(key: &str, m: &MatrixConfig) -> Result<Operator, CliError> {
    let d = m.len();
    if d == 0 || m.iter().any(|row| row.len() != d) {
        return Err(bad(key, "matrix must be square and non-empty"));
    }
    let flat: Vec<Complex64> = m.iter().flatten().map(|[re, im]| Complex64::new(*re, *im)).collect();
    Operator::from_rows(d, &flat).map_err(|e| bad(key, e.to_string()))
}

impl RunConfig {
    /// Reads TOML, or a manifest JSON whose `config` object is a RunConfig.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| bad("config", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text, path.extension().is_some_and(|e| e == "json"))
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, CliError> {
        if json {
            let v: serde_json::Value =
                serde_json::from_str(text).map_err(|e| bad("config", e.to_string()))?;
            let inner = v.get("config").cloned().unwrap_or(v);
            serde_json::from_value(inner).map_err(|e| bad(&key_from_message(&e.to_string()), e.to_string()))
        } else {
            toml::from_str(text).map_err(|e| bad(&key_from_message(e.message()), e.message().to_string()))
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if !(m.omega0.is_finite()) {
            return Err(bad("model.omega0", "must be finite"));
        }
        if !(m.gamma >= 0.0) || !m.gamma.is_finite() {
            return Err(bad("model.gamma", format!("must be finite and non-negative, got {}", m.gamma)));
        }
        for (i, j) in m.jumps.iter().enumerate() {
            if !(j.rate >= 0.0) {
                return Err(bad(&format!("model.jumps[{i}].rate"), "must be non-negative"));
            }
        }
        if !(self.grid.eta_half_width > 0.0) {
            return Err(bad("grid.eta_half_width", "must be positive"));
        }
        if self.grid.eta_points < 2 {
            return Err(bad("grid.eta_points", "must be at least 2"));
        }
        if !(self.grid.recovery_offset > 0.0) {
            return Err(bad("grid.recovery_offset", "must be positive"));
        }
        if !(self.time.t_max >= 0.0) || !self.time.t_max.is_finite() {
            return Err(bad("time.t_max", "must be finite and non-negative"));
        }
        if self.time.num_points == 0 || (self.time.num_points > 1 && self.time.t_max == 0.0) {
            return Err(bad("time.num_points", "need at least one point on a non-empty interval"));
        }
        if self.execution.repeats == 0 {
            return Err(bad("execution.repeats", "must be at least 1"));
        }
        if let Some(nm) = &self.noise {
            nm.validate().map_err(|e| bad(&noise_key(&e), e.to_string()))?;
        }
        if self.output.format != "csv" {
            return Err(bad("output.format", format!("unsupported format `{}`", self.output.format)));
        }
        if self.execution.method == Method::ClosedForm && m.hamiltonian.is_some() {
            return Err(bad("execution.method", "closed_form needs the amplitude-damping model"));
        }
        if m.hamiltonian.is_none() && !m.jumps.is_empty() {
            return Err(bad("model.jumps", "jumps need an explicit model.hamiltonian"));
        }
        self.problem()?;
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_times(self.time.t_max, self.time.num_points)
    }

    pub fn grid_params(&self) -> GridParams {
        GridParams {
            eta_half_width: self.grid.eta_half_width,
            eta_points: self.grid.eta_points,
            recovery_offset: self.grid.recovery_offset,
        }
    }

    pub fn eta_grid(&self) -> Result<EtaGrid, CliError> {
        make_grid(self.grid.eta_half_width, self.grid.eta_points, self.grid.recovery_offset)
            .map_err(|e| bad("grid", e.to_string()))
    }

    /// Noise settings in force: the configured section, or the defaults.
    pub fn noise_model(&self) -> NoiseModel {
        self.noise.unwrap_or_default()
    }

    pub fn sweep_method(&self) -> Result<SweepMethod, CliError> {
        match self.execution.method {
            Method::Schrod => Ok(SweepMethod::Schrod),
            Method::Circuit => Ok(SweepMethod::Circuit),
            Method::NoisyCircuit => Ok(SweepMethod::NoisyCircuit),
            other => Err(bad("execution.method", format!("`{other}` cannot be swept"))),
        }
    }

    pub fn problem(&self) -> Result<ResponseProblem, CliError> {
        let m = &self.model;
        let Some(h) = &m.hamiltonian else {
            let mut p = ResponseProblem::amplitude_damping(m.omega0, m.gamma)
                .map_err(|e| bad("model", e.to_string()))?;
            if m.observable.is_some() || m.drive.is_some() || m.rho_eq.is_some() {
                p = self.customize(p)?;
            }
            return Ok(p);
        };
        let h = operator("model.hamiltonian", h)?;
        let jumps = m
            .jumps
            .iter()
            .enumerate()
            .map(|(i, j)| {
                Ok(Jump {
                    operator: operator(&format!("model.jumps[{i}].operator"), &j.operator)?,
                    rate: j.rate,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let model = LindbladModel::new(h, jumps).map_err(|e| bad("model", e.to_string()))?;
        let l = build_liouvillian(&model);
        let d = model.dim();
        let observable = match &m.observable {
            Some(a) => operator("model.observable", a)?,
            None if d == 2 => sigma_x(),
            None => return Err(bad("model.observable", "required when the model is not a qubit")),
        };
        let drive = match &m.drive {
            Some(p) => operator("model.drive", p)?,
            None if d == 2 => sigma_x(),
            None => return Err(bad("model.drive", "required when the model is not a qubit")),
        };
        let rho = match &m.rho_eq {
            Some(r) => vectorize_operator(&operator("model.rho_eq", r)?),
            None => steady_state(&l).map_err(|e| bad("model.rho_eq", e.to_string()))?,
        };
        ResponseProblem::new(l, observable, commutator_perturbation(&drive), rho)
            .map_err(|e| bad("model", e.to_string()))
    }

    fn customize(&self, p: ResponseProblem) -> Result<ResponseProblem, CliError> {
        let m = &self.model;
        let observable = match &m.observable {
            Some(a) => operator("model.observable", a)?,
            None => p.observable.clone(),
        };
        let perturbation = match &m.drive {
            Some(d) => commutator_perturbation(&operator("model.drive", d)?),
            None => p.perturbation.clone(),
        };
        let rho = match &m.rho_eq {
            Some(r) => vectorize_operator(&operator("model.rho_eq", r)?),
            None => p.rho_eq.clone(),
        };
        let mut out = ResponseProblem::new(p.liouvillian, observable, perturbation, rho)
            .map_err(|e| bad("model", e.to_string()))?;
        out.amplitude_damping = p.amplitude_damping;
        Ok(out)
    }
}

/// Best-effort dotted key from a serde message such as
/// "unknown field `foo`, expected ..." so errors name what to fix.
fn key_from_message(msg: &str) -> String {
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "config".into())
}

fn noise_key(e: &schrodsim_core::Error) -> String {
    match e {
        schrodsim_core::Error::InvalidNoise(msg) => {
            format!("noise.{}", msg.split_whitespace().next().unwrap_or_default())
        }
        _ => "noise".into(),
    }
}
