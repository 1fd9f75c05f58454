//! Linear response kernels `χ(τ) = ⟨I|(A⊗I) e^{ℒτ} 𝒱|ρ_eq⟩`.
//!
//! Every path contracts the same two vectors: the perturbed state
//! `𝒱|ρ_eq⟩` and the observable bra `⟨I|(A⊗I)`, whose ket form is the
//! vectorization of `A†`.

use std::fmt;
use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::circuit::{ancilla_bias, draw_counts, stream_rng, HadamardTemplate, Part, EVOLUTION_GATE};
use crate::error::{Error, Result};
use crate::lindblad::{
    amplitude_damping_model, build_liouvillian, closed_form_amplitude_damping_operator,
    evolve_exact, Liouvillian,
};
use crate::liouville::{
    devectorize, expectation, left_superop, right_superop, sigma_x, vectorize,
    vectorize_operator, DensityMatrix, Operator, Superoperator, VectorizedState, C64, I, ZERO,
};
use crate::noise::{noisy_bias, NoiseModel};
use crate::schrod::{decompose, reconstruct_series, EtaGrid, HermitianPair, NodeSpectra};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    Dense,
    Schrod,
    Circuit,
    NoisyCircuit,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::Dense => "dense",
            Method::Schrod => "schrod",
            Method::Circuit => "circuit",
            Method::NoisyCircuit => "noisy_circuit",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed_form" => Ok(Method::ClosedForm),
            "dense" => Ok(Method::Dense),
            "schrod" => Ok(Method::Schrod),
            "circuit" => Ok(Method::Circuit),
            "noisy_circuit" => Ok(Method::NoisyCircuit),
            other => Err(Error::InvalidArgument(format!("unknown method `{other}`"))),
        }
    }
}

/// χ sampled on an ascending time grid, tagged with how it was computed.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseSeries {
    times: Vec<f64>,
    values: Vec<C64>,
    pub method: Method,
    pub params: serde_json::Value,
}

impl ResponseSeries {
    pub fn new(times: Vec<f64>, values: Vec<C64>, method: Method) -> Result<Self> {
        check_times(&times)?;
        if values.len() != times.len() {
            return Err(Error::DimMismatch {
                expected: times.len(),
                found: values.len(),
            });
        }
        Ok(ResponseSeries {
            times,
            values,
            method,
            params: serde_json::Value::Null,
        })
    }

    pub fn with_params(mut self, params: serde_json::Value) -> Self {
        self.params = params;
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t} must be finite and ≥ 0")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("times must be strictly ascending".into()));
    }
    Ok(())
}

/// `n` points evenly spaced on `[0, t_max]`.
pub fn uniform_times(t_max: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.0];
    }
    (0..n).map(|k| t_max * k as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub superop: Superoperator,
    pub label: String,
}

/// `𝒱[ρ] = −i[P, ρ]`.
pub fn commutator_perturbation(p: &Operator) -> Perturbation {
    let diff = left_superop(p).matrix() - right_superop(p).matrix();
    Perturbation {
        superop: Superoperator::new(diff * -I).unwrap(),
        label: "commutator".into(),
    }
}

fn perturbed_state(v: &Perturbation, rho_eq: &VectorizedState) -> Result<VectorizedState> {
    v.superop.apply(rho_eq)
}

fn check_observable(a: &Operator, n: usize) -> Result<()> {
    if a.dim() * a.dim() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: a.dim() * a.dim(),
        });
    }
    Ok(())
}

pub fn chi_dense(
    l: &Liouvillian,
    a: &Operator,
    v: &Perturbation,
    rho_eq: &VectorizedState,
    times: &[f64],
) -> Result<ResponseSeries> {
    check_times(times)?;
    check_observable(a, l.matrix().nrows())?;
    let x0 = perturbed_state(v, rho_eq)?;
    let values = times
        .par_iter()
        .map(|&t| expectation(a, &evolve_exact(l, &x0, t)?))
        .collect::<Result<Vec<_>>>()?;
    ResponseSeries::new(times.to_vec(), values, Method::Dense)
}

/// χ for the amplitude-damped qubit using the analytic propagator instead
/// of a matrix exponential.
pub fn chi_closed_form(
    omega0: f64,
    gamma: f64,
    a: &Operator,
    v: &Perturbation,
    rho_eq: &VectorizedState,
    times: &[f64],
) -> Result<ResponseSeries> {
    check_times(times)?;
    check_observable(a, 4)?;
    let x0 = devectorize(&perturbed_state(v, rho_eq)?)?;
    let values = times
        .iter()
        .map(|&t| {
            let xt = closed_form_amplitude_damping_operator(&x0, t, omega0, gamma);
            a.mul(&xt).map(|p| p.trace())
        })
        .collect::<Result<Vec<_>>>()?;
    ResponseSeries::new(times.to_vec(), values, Method::ClosedForm)
}

pub fn chi_schrod(
    pair: &HermitianPair,
    a: &Operator,
    v: &Perturbation,
    rho_eq: &VectorizedState,
    times: &[f64],
    grid: &EtaGrid,
) -> Result<ResponseSeries> {
    check_times(times)?;
    check_observable(a, pair.dim())?;
    let x0 = perturbed_state(v, rho_eq)?;
    let values = reconstruct_series(pair, &x0, times, grid)?
        .iter()
        .map(|x| expectation(a, x))
        .collect::<Result<Vec<_>>>()?;
    ResponseSeries::new(times.to_vec(), values, Method::Schrod)
}

/// Readout settings for [`chi_circuit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircuitOptions {
    /// Shots per circuit; 0 uses exact outcome probabilities.
    pub shots: u64,
    pub seed: u64,
    pub noise: Option<NoiseModel>,
}

/// Exact Hadamard-test biases for every `(time, node)` pair, from which
/// exact or shot-sampled χ series are assembled.
#[derive(Debug, Clone)]
pub struct CircuitBiases {
    times: Vec<f64>,
    weights: Vec<C64>,
    /// `n_init · n_obs`.
    scale: f64,
    /// `re[k][j]`, `im[k][j]` at time `k`, node `j`.
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
    noisy: bool,
}

/// Runs the ideal or noisy Hadamard test for each `(t, η_j, Re/Im)`.
pub fn circuit_biases(
    pair: &HermitianPair,
    a: &Operator,
    v: &Perturbation,
    rho_eq: &VectorizedState,
    times: &[f64],
    grid: &EtaGrid,
    noise: Option<&NoiseModel>,
) -> Result<CircuitBiases> {
    check_times(times)?;
    check_observable(a, pair.dim())?;
    if let Some(nm) = noise {
        nm.validate()?;
    }
    // validity is a property of the quadrature, not the readout
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    let required = pair.min_recovery_offset(t_max);
    if grid.recovery_offset <= required {
        return Err(Error::RecoveryOffsetTooSmall {
            offset: grid.recovery_offset,
            required,
        });
    }

    let init = perturbed_state(v, rho_eq)?;
    let n_init = init.norm();
    if n_init < 1e-12 {
        return Err(Error::PreparationFailure);
    }
    let obs = vectorize_operator(&a.adjoint());
    let n_obs = obs.norm();
    if n_obs < 1e-12 {
        return Err(Error::PreparationFailure);
    }
    let phi_init = init.vector() / C64::new(n_init, 0.0);
    let phi_obs = obs.vector() / C64::new(n_obs, 0.0);
    let template = HadamardTemplate::new(&phi_init, &phi_obs)?;
    let spectra = NodeSpectra::new(pair, grid);

    let rows = times
        .par_iter()
        .map(|&t| {
            let depth = noise.map_or(1, |nm| nm.evolution_depth(t, grid.points));
            let mut re = Vec::with_capacity(grid.points);
            let mut im = Vec::with_capacity(grid.points);
            for j in 0..grid.points {
                let u: DMatrix<C64> = spectra.get(j).propagator(t);
                for (part, out) in [(Part::Re, &mut re), (Part::Im, &mut im)] {
                    let mut circ = template.circuit(&u, part)?;
                    let b = match noise {
                        None => ancilla_bias(&circ)?,
                        Some(nm) => {
                            circ.gates_mut()[EVOLUTION_GATE].depth = depth;
                            noisy_bias(&circ, nm)?
                        }
                    };
                    out.push(b);
                }
            }
            Ok((re, im))
        })
        .collect::<Result<Vec<_>>>()?;
    let (re, im) = rows.into_iter().unzip();
    Ok(CircuitBiases {
        times: times.to_vec(),
        weights: grid.weights().to_vec(),
        scale: n_init * n_obs,
        re,
        im,
        noisy: noise.is_some(),
    })
}

/// Per-time standard errors of `Re χ` and `Im χ` under shot sampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl CircuitBiases {
    fn method(&self) -> Method {
        if self.noisy {
            Method::NoisyCircuit
        } else {
            Method::Circuit
        }
    }

    fn combine(&self, re: &[f64], im: &[f64]) -> C64 {
        let mut acc = ZERO;
        for (j, w) in self.weights.iter().enumerate() {
            acc += w * C64::new(re[j], im[j]);
        }
        acc * self.scale
    }

    /// χ from exact outcome probabilities.
    pub fn exact_series(&self) -> Result<ResponseSeries> {
        let values = (0..self.times.len())
            .map(|k| self.combine(&self.re[k], &self.im[k]))
            .collect();
        ResponseSeries::new(self.times.clone(), values, self.method())
    }

    /// χ from `shots` samples of every circuit. Circuit `(k, j, part)` draws
    /// from its own ChaCha stream, so the result does not depend on the
    /// evaluation order.
    pub fn sampled_series(&self, shots: u64, seed: u64) -> Result<ResponseSeries> {
        if shots == 0 {
            return self.exact_series();
        }
        let n = self.weights.len() as u64;
        let values = (0..self.times.len())
            .into_par_iter()
            .map(|k| {
                let mut est = [vec![0.0; n as usize], vec![0.0; n as usize]];
                for (p, exact) in [&self.re[k], &self.im[k]].into_iter().enumerate() {
                    for (j, &b) in exact.iter().enumerate() {
                        let stream = ((k as u64 * n) + j as u64) * 2 + p as u64;
                        let mut rng = stream_rng(seed, stream);
                        let p0 = ((1.0 + b) / 2.0).clamp(0.0, 1.0);
                        let counts = draw_counts(&[p0, 1.0 - p0], shots, &mut rng);
                        let n0 = *counts.get(&0).unwrap_or(&0) as f64;
                        est[p][j] = (2.0 * n0 - shots as f64) / shots as f64;
                    }
                }
                self.combine(&est[0], &est[1])
            })
            .collect();
        ResponseSeries::new(self.times.clone(), values, self.method())
    }

    /// Binomial standard errors of [`Self::sampled_series`]; the bias
    /// estimate of a circuit with exact bias `b` has variance `(1 − b²)/shots`.
    pub fn standard_errors(&self, shots: u64) -> StandardErrors {
        let s = shots.max(1) as f64;
        let mut out = StandardErrors {
            re: Vec::with_capacity(self.times.len()),
            im: Vec::with_capacity(self.times.len()),
        };
        for k in 0..self.times.len() {
            let (mut vr, mut vi) = (0.0, 0.0);
            for (j, w) in self.weights.iter().enumerate() {
                let var_re = (1.0 - self.re[k][j].powi(2)).max(0.0) / s;
                let var_im = (1.0 - self.im[k][j].powi(2)).max(0.0) / s;
                vr += w.re * w.re * var_re + w.im * w.im * var_im;
                vi += w.im * w.im * var_re + w.re * w.re * var_im;
            }
            out.re.push(self.scale * vr.sqrt());
            out.im.push(self.scale * vi.sqrt());
        }
        out
    }
}

/// χ assembled from Hadamard-test readouts: `Σ_j w_j n_init n_obs (Re_j + i Im_j)`.
#[allow(clippy::too_many_arguments)]
pub fn chi_circuit(
    pair: &HermitianPair,
    a: &Operator,
    v: &Perturbation,
    rho_eq: &VectorizedState,
    times: &[f64],
    grid: &EtaGrid,
    opts: &CircuitOptions,
) -> Result<ResponseSeries> {
    circuit_biases(pair, a, v, rho_eq, times, grid, opts.noise.as_ref())?
        .sampled_series(opts.shots, opts.seed)
}

/// Peak of the discrete Fourier spectrum of `Re χ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralPeak {
    /// Angular frequency of the largest nonzero-frequency bin.
    pub frequency: f64,
    /// Bin width `2π/(n·Δt)`.
    pub resolution: f64,
    /// No bin rises above round-off; `frequency` is then 0.
    pub flat: bool,
}

pub fn dominant_frequency(series: &ResponseSeries) -> Result<SpectralPeak> {
    let t = series.times();
    let n = t.len();
    if n < 8 {
        return Err(Error::TooFewPoints { needed: 8, found: n });
    }
    let dt = (t[n - 1] - t[0]) / (n - 1) as f64;
    if t.windows(2).any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0)) {
        return Err(Error::NonUniformGrid);
    }
    let mut buf: Vec<C64> = series.values().iter().map(|z| C64::new(z.re, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let resolution = 2.0 * std::f64::consts::PI / (n as f64 * dt);
    let (mut best, mut peak) = (0, 0.0);
    for (k, z) in buf.iter().enumerate().take(n / 2 + 1).skip(1) {
        if z.norm() > peak {
            best = k;
            peak = z.norm();
        }
    }
    let scale: f64 = series.values().iter().map(|z| z.re.abs()).sum();
    if best == 0 || peak <= 1e-10 * scale.max(f64::MIN_POSITIVE) {
        return Ok(SpectralPeak {
            frequency: 0.0,
            resolution,
            flat: true,
        });
    }
    Ok(SpectralPeak {
        frequency: best as f64 * resolution,
        resolution,
        flat: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetric {
    pub max_abs: f64,
    pub rms: f64,
}

pub fn error_metric(series: &ResponseSeries, reference: &ResponseSeries) -> Result<ErrorMetric> {
    let (a, b) = (series.times(), reference.times());
    if a.len() != b.len() || a.iter().zip(b).any(|(x, y)| (x - y).abs() > 1e-12 * x.abs().max(1.0)) {
        return Err(Error::GridMismatch);
    }
    if a.is_empty() {
        return Ok(ErrorMetric { max_abs: 0.0, rms: 0.0 });
    }
    let diffs: Vec<f64> = series
        .values()
        .iter()
        .zip(reference.values())
        .map(|(x, y)| (x - y).norm())
        .collect();
    Ok(ErrorMetric {
        max_abs: diffs.iter().cloned().fold(0.0, f64::max),
        rms: (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    re_chi: f64,
    im_chi: f64,
    method: Method,
}

/// Writes `t,re_chi,im_chi,method` rows.
pub fn write_csv<W: Write>(series: &ResponseSeries, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for (t, z) in series.times().iter().zip(series.values()) {
        out.serialize(CsvRow {
            t: *t,
            re_chi: z.re,
            im_chi: z.im,
            method: series.method,
        })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(r: R) -> Result<ResponseSeries> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut method = None;
    for row in rdr.deserialize() {
        let row: CsvRow = row?;
        if method.is_some_and(|m| m != row.method) {
            return Err(Error::InvalidArgument("mixed methods in one series".into()));
        }
        method = Some(row.method);
        times.push(row.t);
        values.push(C64::new(row.re_chi, row.im_chi));
    }
    let method = method.ok_or_else(|| Error::InvalidArgument("empty series".into()))?;
    ResponseSeries::new(times, values, method)
}

/// Sidecar metadata written next to the CSV.
pub fn metadata_json(series: &ResponseSeries) -> serde_json::Value {
    serde_json::json!({
        "method": series.method,
        "points": series.len(),
        "t_min": series.times().first(),
        "t_max": series.times().last(),
        "params": series.params,
    })
}

/// Everything χ depends on, with `ℋ₁`, `ℋ₂` derived once.
#[derive(Debug, Clone)]
pub struct ResponseProblem {
    pub liouvillian: Liouvillian,
    pub pair: HermitianPair,
    pub observable: Operator,
    pub perturbation: Perturbation,
    pub rho_eq: VectorizedState,
    /// `(ω₀, γ)` when the model is the amplitude-damped qubit, enabling the
    /// closed-form path.
    pub amplitude_damping: Option<(f64, f64)>,
}

impl ResponseProblem {
    pub fn new(
        liouvillian: Liouvillian,
        observable: Operator,
        perturbation: Perturbation,
        rho_eq: VectorizedState,
    ) -> Result<Self> {
        let n = liouvillian.matrix().nrows();
        check_observable(&observable, n)?;
        if perturbation.superop.matrix().nrows() != n || rho_eq.len() != n {
            return Err(Error::DimMismatch {
                expected: n,
                found: if rho_eq.len() != n { rho_eq.len() } else { perturbation.superop.matrix().nrows() },
            });
        }
        let pair = decompose(&liouvillian);
        Ok(ResponseProblem {
            liouvillian,
            pair,
            observable,
            perturbation,
            rho_eq,
            amplitude_damping: None,
        })
    }

    /// Amplitude-damped qubit probed and observed through `σ_x`, starting
    /// from the ground state.
    pub fn amplitude_damping(omega0: f64, gamma: f64) -> Result<Self> {
        let l = build_liouvillian(&amplitude_damping_model(omega0, gamma)?);
        let mut p = ResponseProblem::new(
            l,
            sigma_x(),
            commutator_perturbation(&sigma_x()),
            vectorize(&DensityMatrix::basis(2, 0)),
        )?;
        p.amplitude_damping = Some((omega0, gamma));
        Ok(p)
    }

    pub fn dense(&self, times: &[f64]) -> Result<ResponseSeries> {
        chi_dense(&self.liouvillian, &self.observable, &self.perturbation, &self.rho_eq, times)
    }

    pub fn closed_form(&self, times: &[f64]) -> Result<ResponseSeries> {
        let (w, g) = self.amplitude_damping.ok_or_else(|| {
            Error::InvalidArgument("closed form needs the amplitude-damping model".into())
        })?;
        chi_closed_form(w, g, &self.observable, &self.perturbation, &self.rho_eq, times)
    }

    pub fn schrod(&self, times: &[f64], grid: &EtaGrid) -> Result<ResponseSeries> {
        chi_schrod(&self.pair, &self.observable, &self.perturbation, &self.rho_eq, times, grid)
    }

    pub fn circuit_biases(
        &self,
        times: &[f64],
        grid: &EtaGrid,
        noise: Option<&NoiseModel>,
    ) -> Result<CircuitBiases> {
        circuit_biases(&self.pair, &self.observable, &self.perturbation, &self.rho_eq, times, grid, noise)
    }
}
