//! Statevector simulation of the modified Hadamard test.
//!
//! Qubit `q` is bit `q` of a basis index. In [`build_hadamard_test`] the
//! ancilla is qubit 0 and the system register occupies qubits `1..=m`, with
//! bit `i` of a Liouville-space index mapped to qubit `1 + i`. Liouville
//! vectors whose length is not a power of two are zero-padded and their
//! unitaries block-embedded with the identity on the padding.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::exp_hermitian;
use crate::liouville::{C64, I, ONE, ZERO};
use crate::schrod::{dilated_hamiltonian, unitary_propagator, HermitianPair};

pub const MAX_STATEVECTOR_QUBITS: usize = 20;
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    S,
    Sdg,
    Unitary(DMatrix<C64>),
}

/// A gate on `targets` (local bit `i` ↔ `targets[i]`), applied only when all
/// `controls` are 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    pub targets: Vec<usize>,
    pub controls: Vec<usize>,
    /// Compiled-depth weight; noisy simulation applies the gate's error
    /// channels this many times.
    pub depth: u32,
}

impl Gate {
    fn single(kind: GateKind, q: usize) -> Self {
        Gate {
            kind,
            targets: vec![q],
            controls: Vec::new(),
            depth: 1,
        }
    }

    pub fn h(q: usize) -> Self {
        Gate::single(GateKind::H, q)
    }

    pub fn x(q: usize) -> Self {
        Gate::single(GateKind::X, q)
    }

    pub fn s(q: usize) -> Self {
        Gate::single(GateKind::S, q)
    }

    pub fn sdg(q: usize) -> Self {
        Gate::single(GateKind::Sdg, q)
    }

    pub fn unitary(m: DMatrix<C64>, targets: Vec<usize>) -> Result<Self> {
        let dim = 1usize << targets.len();
        if m.nrows() != dim || m.ncols() != dim {
            return Err(Error::InvalidGate(format!(
                "{}x{} payload on {} targets",
                m.nrows(),
                m.ncols(),
                targets.len()
            )));
        }
        let defect = (m.adjoint() * &m - DMatrix::<C64>::identity(dim, dim))
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if defect > UNITARY_TOL {
            return Err(Error::InvalidGate(format!("payload not unitary ({defect:e})")));
        }
        Ok(Gate {
            kind: GateKind::Unitary(m),
            targets,
            controls: Vec::new(),
            depth: 1,
        })
    }

    pub fn controlled(mut self, controls: Vec<usize>) -> Self {
        self.controls = controls;
        self
    }

    pub fn with_depth(mut self, depth: u32) -> Self {
        self.depth = depth.max(1);
        self
    }

    /// Qubits touched by the gate: targets then controls.
    pub fn support(&self) -> Vec<usize> {
        self.targets.iter().chain(&self.controls).cloned().collect()
    }

    /// Local matrix on the targets.
    pub fn matrix(&self) -> DMatrix<C64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        match &self.kind {
            GateKind::H => DMatrix::from_row_slice(
                2,
                2,
                &[C64::new(h, 0.0), C64::new(h, 0.0), C64::new(h, 0.0), C64::new(-h, 0.0)],
            ),
            GateKind::X => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
            GateKind::S => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, I]),
            GateKind::Sdg => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -I]),
            GateKind::Unitary(m) => m.clone(),
        }
    }

    fn name(&self) -> String {
        match &self.kind {
            GateKind::H => "h".into(),
            GateKind::X => "x".into(),
            GateKind::S => "s".into(),
            GateKind::Sdg => "sdg".into(),
            GateKind::Unitary(m) => format!("unitary{}", m.nrows()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    gates: Vec<Gate>,
    measured: Vec<usize>,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Circuit {
            num_qubits,
            gates: Vec::new(),
            measured: Vec::new(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gates_mut(&mut self) -> &mut [Gate] {
        &mut self.gates
    }

    pub fn measured(&self) -> &[usize] {
        &self.measured
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        if !self.measured.is_empty() {
            return Err(Error::InvalidGate("gate after measurement".into()));
        }
        let support = gate.support();
        if let Some(q) = support.iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::InvalidGate(format!(
                "qubit {q} out of range for {} qubits",
                self.num_qubits
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(Error::InvalidGate("repeated or shared target/control".into()));
        }
        self.gates.push(gate);
        Ok(self)
    }

    /// Marks qubits for the final measurement.
    pub fn measure(&mut self, qubits: &[usize]) -> Result<&mut Self> {
        if let Some(q) = qubits.iter().find(|&&q| q >= self.num_qubits) {
            return Err(Error::InvalidGate(format!("measured qubit {q} out of range")));
        }
        self.measured.extend_from_slice(qubits);
        Ok(self)
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "qubits {}", self.num_qubits)?;
        for g in &self.gates {
            writeln!(f, "{} controls={:?} targets={:?}", g.name(), g.controls, g.targets)?;
        }
        write!(f, "measure {:?}", self.measured)
    }
}

/// Applies a local matrix to a statevector-like slice of length `2^n`.
pub(crate) fn apply_local(
    amps: &mut [C64],
    matrix: &DMatrix<C64>,
    targets: &[usize],
    controls: &[usize],
) {
    let k = targets.len();
    let local = 1usize << k;
    let target_mask: usize = targets.iter().map(|&q| 1usize << q).sum();
    let control_mask: usize = controls.iter().map(|&q| 1usize << q).sum();
    let offsets: Vec<usize> = (0..local)
        .map(|l| {
            (0..k)
                .filter(|&i| l >> i & 1 == 1)
                .map(|i| 1usize << targets[i])
                .sum()
        })
        .collect();
    let mut gathered = vec![ZERO; local];
    for base in 0..amps.len() {
        if base & target_mask != 0 || base & control_mask != control_mask {
            continue;
        }
        for (l, off) in offsets.iter().enumerate() {
            gathered[l] = amps[base | off];
        }
        for (r, off) in offsets.iter().enumerate() {
            let mut acc = ZERO;
            for (c, g) in gathered.iter().enumerate() {
                acc += matrix[(r, c)] * g;
            }
            amps[base | off] = acc;
        }
    }
}

pub fn simulate_statevector(c: &Circuit) -> Result<DVector<C64>> {
    if c.num_qubits > MAX_STATEVECTOR_QUBITS {
        return Err(Error::TooManyQubits {
            requested: c.num_qubits,
            limit: MAX_STATEVECTOR_QUBITS,
        });
    }
    let mut amps = vec![ZERO; 1 << c.num_qubits];
    amps[0] = ONE;
    for g in &c.gates {
        apply_local(&mut amps, &g.matrix(), &g.targets, &g.controls);
    }
    Ok(DVector::from_vec(amps))
}

/// Outcome index built from the measured qubits (bit `i` ↔ `measured[i]`).
fn outcome_of(index: usize, measured: &[usize]) -> usize {
    measured
        .iter()
        .enumerate()
        .map(|(i, &q)| (index >> q & 1) << i)
        .sum()
}

/// Probability of each outcome over the measured qubits, given basis-state
/// probabilities of the whole register.
pub(crate) fn marginal(populations: impl Iterator<Item = f64>, measured: &[usize]) -> Vec<f64> {
    let mut probs = vec![0.0; 1 << measured.len()];
    for (idx, p) in populations.enumerate() {
        probs[outcome_of(idx, measured)] += p;
    }
    probs
}

pub fn measurement_probabilities(c: &Circuit) -> Result<Vec<f64>> {
    let psi = simulate_statevector(c)?;
    Ok(marginal(psi.iter().map(|a| a.norm_sqr()), &c.measured))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub counts: BTreeMap<u64, u64>,
    pub shots: u64,
    pub seed: u64,
}

/// Multinomial draw as a chain of conditional binomials.
pub fn draw_counts(probs: &[f64], shots: u64, rng: &mut ChaCha8Rng) -> BTreeMap<u64, u64> {
    let mut counts = BTreeMap::new();
    let mut remaining = shots;
    let mut mass = 1.0;
    for (k, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let n = if k + 1 == probs.len() || mass <= 0.0 {
            remaining
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(remaining, q).unwrap().sample(rng)
        };
        if n > 0 {
            counts.insert(k as u64, n);
        }
        remaining -= n;
        mass -= p;
    }
    counts
}

/// Stream-separated generator: one independent ChaCha stream per work item.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn sample(c: &Circuit, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be at least 1".into()));
    }
    let probs = measurement_probabilities(c)?;
    let mut rng = stream_rng(seed, 0);
    Ok(ShotResult {
        counts: draw_counts(&probs, shots, &mut rng),
        shots,
        seed,
    })
}

/// Unitary whose first column is `target`; the rest is completed by
/// Gram–Schmidt over the standard basis.
pub fn state_prep_unitary(target: &DVector<C64>) -> Result<DMatrix<C64>> {
    let n = target.len();
    let norm = target.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::NotNormalized(norm));
    }
    let mut cols: Vec<DVector<C64>> = vec![target.clone()];
    for k in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::from_element(n, ZERO);
        v[k] = ONE;
        for c in &cols {
            let proj = c.dotc(&v);
            v -= c * proj;
        }
        let vn = v.norm();
        if vn < 1e-8 {
            continue;
        }
        cols.push(v / C64::new(vn, 0.0));
    }
    Ok(DMatrix::from_columns(&cols))
}

/// Which quadrature of the overlap the ancilla bias reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Re,
    Im,
}

fn register_qubits(len: usize) -> usize {
    let mut m = 1;
    while (1usize << m) < len {
        m += 1;
    }
    m
}

fn pad_vector(v: &DVector<C64>, dim: usize) -> DVector<C64> {
    let mut out = DVector::from_element(dim, ZERO);
    out.rows_mut(0, v.len()).copy_from(v);
    out
}

fn pad_unitary(u: &DMatrix<C64>, dim: usize) -> DMatrix<C64> {
    let mut out = DMatrix::identity(dim, dim);
    out.view_mut((0, 0), (u.nrows(), u.ncols())).copy_from(u);
    out
}

/// Hadamard test whose ancilla bias `P(0) − P(1)` equals
/// `Re⟨φ_obs|U|φ_init⟩` (or `Im` for [`Part::Im`]).
///
/// H; X; C-U_init; C-U; X; C-U_obs; [S]; H; measure. The first two controlled
/// blocks fire on the ancilla's original |0⟩ branch, the last on |1⟩. The
/// imaginary variant multiplies the |1⟩ branch by `i` before recombining.
pub fn build_hadamard_test(
    u: &DMatrix<C64>,
    phi_init: &DVector<C64>,
    phi_obs: &DVector<C64>,
    part: Part,
) -> Result<Circuit> {
    let len = phi_init.len();
    if phi_obs.len() != len || u.nrows() != len || u.ncols() != len {
        return Err(Error::DimMismatch {
            expected: len,
            found: if phi_obs.len() != len { phi_obs.len() } else { u.nrows() },
        });
    }
    let m = register_qubits(len);
    let dim = 1usize << m;
    let prep_init = state_prep_unitary(&pad_vector(phi_init, dim))?;
    let prep_obs = state_prep_unitary(&pad_vector(phi_obs, dim))?;
    let evo = if dim == len { u.clone() } else { pad_unitary(u, dim) };
    hadamard_test_from_blocks(prep_init, evo, prep_obs, m, part)
}

pub(crate) fn hadamard_test_from_blocks(
    prep_init: DMatrix<C64>,
    evolution: DMatrix<C64>,
    prep_obs: DMatrix<C64>,
    system_qubits: usize,
    part: Part,
) -> Result<Circuit> {
    let sys: Vec<usize> = (1..=system_qubits).collect();
    let mut c = Circuit::new(system_qubits + 1);
    c.push(Gate::h(0))?;
    c.push(Gate::x(0))?;
    c.push(Gate::unitary(prep_init, sys.clone())?.controlled(vec![0]))?;
    c.push(Gate::unitary(evolution, sys.clone())?.controlled(vec![0]))?;
    c.push(Gate::x(0))?;
    c.push(Gate::unitary(prep_obs, sys)?.controlled(vec![0]))?;
    if part == Part::Im {
        c.push(Gate::s(0))?;
    }
    c.push(Gate::h(0))?;
    c.measure(&[0])?;
    Ok(c)
}

/// Index of the controlled-evolution block in a Hadamard-test circuit.
pub const EVOLUTION_GATE: usize = 3;

/// Exact `P(0) − P(1)` of the first measured qubit.
pub fn ancilla_bias(c: &Circuit) -> Result<f64> {
    let p = measurement_probabilities(c)?;
    Ok(p[0] - p[1])
}

/// Reusable Hadamard-test template: state preparations are fixed, only the
/// evolution block changes between circuits.
#[derive(Debug, Clone)]
pub struct HadamardTemplate {
    prep_init: DMatrix<C64>,
    prep_obs: DMatrix<C64>,
    len: usize,
    system_qubits: usize,
}

impl HadamardTemplate {
    pub fn new(phi_init: &DVector<C64>, phi_obs: &DVector<C64>) -> Result<Self> {
        let len = phi_init.len();
        if phi_obs.len() != len {
            return Err(Error::DimMismatch {
                expected: len,
                found: phi_obs.len(),
            });
        }
        let m = register_qubits(len);
        let dim = 1usize << m;
        Ok(HadamardTemplate {
            prep_init: state_prep_unitary(&pad_vector(phi_init, dim))?,
            prep_obs: state_prep_unitary(&pad_vector(phi_obs, dim))?,
            len,
            system_qubits: m,
        })
    }

    pub fn circuit(&self, u: &DMatrix<C64>, part: Part) -> Result<Circuit> {
        if u.nrows() != self.len {
            return Err(Error::DimMismatch {
                expected: self.len,
                found: u.nrows(),
            });
        }
        let dim = 1usize << self.system_qubits;
        let evo = if dim == self.len { u.clone() } else { pad_unitary(u, dim) };
        hadamard_test_from_blocks(
            self.prep_init.clone(),
            evo,
            self.prep_obs.clone(),
            self.system_qubits,
            part,
        )
    }
}

/// How `exp(−iℋ_sch(η)t)` is compiled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PropagatorMethod {
    Exact,
    /// Product formula over `exp(−iηℋ₁Δt)` and `exp(−iℋ₂Δt)`; order 1 or 2.
    Trotter { order: u8, steps: u32 },
}

pub fn compile_propagator(
    pair: &HermitianPair,
    eta: f64,
    t: f64,
    method: PropagatorMethod,
) -> Result<DMatrix<C64>> {
    match method {
        PropagatorMethod::Exact => Ok(unitary_propagator(&dilated_hamiltonian(pair, eta), t)),
        PropagatorMethod::Trotter { order, steps } => {
            if steps == 0 {
                return Err(Error::InvalidArgument("Trotter steps must be ≥ 1".into()));
            }
            let dt = t / steps as f64;
            let h1 = pair.h1() * C64::new(eta, 0.0);
            let step = match order {
                1 => exp_hermitian(&h1, dt) * exp_hermitian(pair.h2(), dt),
                2 => {
                    let half = exp_hermitian(&h1, dt / 2.0);
                    &half * exp_hermitian(pair.h2(), dt) * &half
                }
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "Trotter order {order} unsupported"
                    )))
                }
            };
            let mut u = DMatrix::<C64>::identity(step.nrows(), step.ncols());
            for _ in 0..steps {
                u = &step * u;
            }
            Ok(u)
        }
    }
}
