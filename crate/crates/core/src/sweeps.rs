//! Parameter sweeps of the reconstruction error against a reference χ.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseModel;
use crate::response::{error_metric, ErrorMetric, ResponseProblem, ResponseSeries};
use crate::schrod::{make_grid, resource_estimate};

/// Errors below this are treated as numerical zero.
pub const FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    EtaPoints,
    EtaHalfWidth,
    RecoveryOffset,
    Shots,
    NoiseP2,
}

impl Axis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Axis::EtaPoints => "eta_points",
            Axis::EtaHalfWidth => "eta_half_width",
            Axis::RecoveryOffset => "recovery_offset",
            Axis::Shots => "shots",
            Axis::NoiseP2 => "noise_p2",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            Axis::EtaPoints,
            Axis::EtaHalfWidth,
            Axis::RecoveryOffset,
            Axis::Shots,
            Axis::NoiseP2,
        ]
        .into_iter()
        .find(|a| a.as_str() == s)
        .ok_or_else(|| Error::InvalidSweep(format!("unknown axis `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMethod {
    Schrod,
    Circuit,
    NoisyCircuit,
}

impl SweepMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            SweepMethod::Schrod => "schrod",
            SweepMethod::Circuit => "circuit",
            SweepMethod::NoisyCircuit => "noisy_circuit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reference {
    #[default]
    Dense,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub eta_half_width: f64,
    pub eta_points: usize,
    pub recovery_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: Axis,
    pub values: Vec<f64>,
    pub method: SweepMethod,
    /// Grid used for every non-swept parameter.
    pub grid: GridParams,
    pub times: Vec<f64>,
    pub reference: Reference,
    pub seed: u64,
    /// Shots per circuit for circuit methods; 0 reads exact probabilities.
    pub shots: u64,
    /// Seeds per row when sampling shots.
    pub repeats: u32,
    pub noise: NoiseModel,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::InvalidSweep("no axis values".into()));
        }
        let up = self.values.windows(2).all(|w| w[1] > w[0]);
        let down = self.values.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::InvalidSweep("axis values must be strictly monotone".into()));
        }
        let integral = matches!(self.axis, Axis::EtaPoints | Axis::Shots);
        if integral && self.values.iter().any(|v| v.fract() != 0.0 || *v < 0.0) {
            return Err(Error::InvalidSweep(format!(
                "{} values must be non-negative integers",
                self.axis
            )));
        }
        match (self.axis, self.method) {
            (Axis::Shots, SweepMethod::Schrod) => {
                return Err(Error::InvalidSweep("shots axis needs a circuit method".into()))
            }
            (Axis::NoiseP2, m) if m != SweepMethod::NoisyCircuit => {
                return Err(Error::InvalidSweep("noise_p2 axis needs noisy_circuit".into()))
            }
            _ => {}
        }
        if self.repeats == 0 {
            return Err(Error::InvalidSweep("repeats must be ≥ 1".into()));
        }
        self.noise.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: Axis,
    pub value: f64,
    /// Mean over repeats when shots are sampled.
    pub max_abs: f64,
    pub rms: f64,
    /// Standard deviation over repeats; 0 for deterministic rows.
    pub max_abs_std: f64,
    pub rms_std: f64,
    pub wall_time_s: f64,
    pub floored: bool,
    /// Ancilla register size for the row's grid.
    pub ancilla_qubits: u32,
}

fn reference_series(problem: &ResponseProblem, spec: &SweepSpec) -> Result<ResponseSeries> {
    match spec.reference {
        Reference::Dense => problem.dense(&spec.times),
        Reference::ClosedForm => problem.closed_form(&spec.times),
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn run_row(
    problem: &ResponseProblem,
    spec: &SweepSpec,
    reference: &ResponseSeries,
    value: f64,
) -> Result<SweepRow> {
    let mut grid = spec.grid;
    let mut shots = spec.shots;
    let mut noise = spec.noise;
    match spec.axis {
        Axis::EtaPoints => grid.eta_points = value as usize,
        Axis::EtaHalfWidth => grid.eta_half_width = value,
        Axis::RecoveryOffset => grid.recovery_offset = value,
        Axis::Shots => shots = value as u64,
        Axis::NoiseP2 => noise.p2 = value,
    }
    noise.validate()?;
    let eta = make_grid(grid.eta_half_width, grid.eta_points, grid.recovery_offset)?;

    let start = Instant::now();
    let metrics: Vec<ErrorMetric> = match spec.method {
        SweepMethod::Schrod => vec![error_metric(&problem.schrod(&spec.times, &eta)?, reference)?],
        SweepMethod::Circuit | SweepMethod::NoisyCircuit => {
            let nm = (spec.method == SweepMethod::NoisyCircuit).then_some(noise);
            let biases = problem.circuit_biases(&spec.times, &eta, nm.as_ref())?;
            if shots == 0 {
                vec![error_metric(&biases.exact_series()?, reference)?]
            } else {
                (0..spec.repeats as u64)
                    .map(|r| error_metric(&biases.sampled_series(shots, spec.seed.wrapping_add(r))?, reference))
                    .collect::<Result<_>>()?
            }
        }
    };
    let wall_time_s = start.elapsed().as_secs_f64();

    let (max_abs, max_abs_std) = mean_std(&metrics.iter().map(|m| m.max_abs).collect::<Vec<_>>());
    let (rms, rms_std) = mean_std(&metrics.iter().map(|m| m.rms).collect::<Vec<_>>());
    Ok(SweepRow {
        axis: spec.axis,
        value,
        max_abs,
        rms,
        max_abs_std,
        rms_std,
        wall_time_s,
        floored: max_abs < FLOOR,
        ancilla_qubits: resource_estimate(grid.eta_points as u64)?.ancilla_qubits,
    })
}

/// One row per axis value, in the order given. The reference series is
/// computed once and shared.
pub fn run_sweep(problem: &ResponseProblem, spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let reference = reference_series(problem, spec)?;
    spec.values
        .par_iter()
        .map(|&v| run_row(problem, spec, &reference, v))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XTransform {
    #[default]
    Identity,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
    pub x_transform: XTransform,
}

/// Least squares of `ln(max_abs)` against `x` or `ln x`, skipping floored rows.
pub fn fit_loglinear(rows: &[SweepRow], x_transform: XTransform) -> Result<LogLinearFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.max_abs >= FLOOR)
        .map(|r| {
            let x = match x_transform {
                XTransform::Identity => r.value,
                XTransform::Log => r.value.ln(),
            };
            (x, r.max_abs.ln())
        })
        .collect();
    if pts.len() < 3 {
        return Err(Error::DegenerateFit(pts.len()));
    }
    if pts.iter().any(|(x, _)| !x.is_finite()) {
        return Err(Error::InvalidSweep("log transform needs positive axis values".into()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateFit(pts.len()));
    }
    let slope = sxy / sxx;
    // a perfectly flat response is fully explained by a zero slope
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLinearFit {
        slope,
        intercept: my - slope * mx,
        r2,
        points: pts.len(),
        x_transform,
    })
}

/// Rows still above the error floor: those whose error exceeds 1.5 times
/// the smallest error in the sweep.
pub fn pre_floor_window(rows: &[SweepRow]) -> Vec<SweepRow> {
    let floor = rows.iter().map(|r| r.max_abs).fold(f64::INFINITY, f64::min);
    rows.iter().filter(|r| r.max_abs > 1.5 * floor).cloned().collect()
}

/// `true` when each error is at most `1 + slack` times its predecessor.
pub fn is_non_increasing(rows: &[SweepRow], slack: f64) -> bool {
    rows.windows(2).all(|w| w[1].max_abs <= (1.0 + slack) * w[0].max_abs)
}

#[derive(Serialize)]
struct CsvRow<'a> {
    axis: &'a str,
    value: f64,
    max_abs: f64,
    rms: f64,
    wall_time_s: f64,
    floored: bool,
}

/// Writes `axis,value,max_abs,rms,wall_time_s,floored` rows.
pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(CsvRow {
            axis: r.axis.as_str(),
            value: r.value,
            max_abs: r.max_abs,
            rms: r.rms,
            wall_time_s: r.wall_time_s,
            floored: r.floored,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn sweep_file_name(axis: Axis, method: SweepMethod, timestamp: &str) -> String {
    format!("sweep_{}_{}_{}.csv", axis.as_str(), method.as_str(), timestamp)
}
