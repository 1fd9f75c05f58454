//! Density-matrix simulation under a parametric gate-noise model.
//!
//! After every gate, depolarizing noise acts jointly on the gate's support
//! (`p1` for one qubit, `p2` otherwise), followed by independent dephasing on
//! each support qubit. A gate with `depth = k` stands for `k` compiled layers,
//! so its channels are applied `k` times. Readout flips each measured bit
//! independently.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::circuit::{apply_local, marginal, Circuit, HadamardTemplate, Part, EVOLUTION_GATE};
use crate::error::{Error, Result};
use crate::liouville::{C64, ZERO};
use crate::schrod::{dilated_hamiltonian, unitary_propagator, HermitianPair};

pub const MAX_DENSITY_QUBITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseModel {
    pub p1: f64,
    pub p2: f64,
    pub p_dephase: f64,
    pub readout_flip: f64,
    /// Compiled layers of the evolution block per unit time and per register
    /// qubit; 0 charges the block as a single layer.
    pub depth_alpha: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            p1: 1e-3,
            p2: 1e-2,
            p_dephase: 1e-3,
            readout_flip: 0.01,
            depth_alpha: 1.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            p1: 0.0,
            p2: 0.0,
            p_dephase: 0.0,
            readout_flip: 0.0,
            depth_alpha: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p1", self.p1),
            ("p2", self.p2),
            ("p_dephase", self.p_dephase),
            ("readout_flip", self.readout_flip),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if !(self.depth_alpha >= 0.0) || !self.depth_alpha.is_finite() {
            return Err(Error::InvalidNoise(format!(
                "depth_alpha = {} must be finite and non-negative",
                self.depth_alpha
            )));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.p_dephase == 0.0 && self.readout_flip == 0.0
    }

    /// Layers charged to `exp(−iℋ_sch t)` when the η grid has `grid_points`
    /// nodes: `max(1, ⌈αt⌉) · M` with `M` the ancilla register size.
    pub fn evolution_depth(&self, t: f64, grid_points: usize) -> u32 {
        if self.depth_alpha == 0.0 {
            return 1;
        }
        let mut m = 0u32;
        while (1u64 << m) < 2 * grid_points as u64 + 1 {
            m += 1;
        }
        let layers = (self.depth_alpha * t).ceil().max(1.0) as u32;
        layers * m.max(1)
    }
}

/// Density matrix of a qubit register; qubit `q` is bit `q` of an index.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterState {
    pub num_qubits: usize,
    pub rho: DMatrix<C64>,
}

fn apply_to_columns(m: &mut DMatrix<C64>, u: &DMatrix<C64>, targets: &[usize], controls: &[usize]) {
    let rows = m.nrows();
    for col in m.as_mut_slice().chunks_mut(rows) {
        apply_local(col, u, targets, controls);
    }
}

/// `ρ → (1−p)ρ + p · Tr_S(ρ) ⊗ I_S / 2^|S|`.
fn depolarize(rho: &mut DMatrix<C64>, support: &[usize], p: f64) {
    if p == 0.0 {
        return;
    }
    let mask: usize = support.iter().map(|&q| 1usize << q).sum();
    let dim = rho.nrows();
    let mut reduced = DMatrix::from_element(dim, dim, ZERO);
    for c in 0..dim {
        for r in 0..dim {
            if (r ^ c) & mask == 0 {
                reduced[(r & !mask, c & !mask)] += rho[(r, c)];
            }
        }
    }
    let share = p / (1usize << support.len()) as f64;
    for c in 0..dim {
        for r in 0..dim {
            let mixed = if (r ^ c) & mask == 0 {
                reduced[(r & !mask, c & !mask)] * share
            } else {
                ZERO
            };
            rho[(r, c)] = rho[(r, c)] * (1.0 - p) + mixed;
        }
    }
}

/// `ρ → (1−p)ρ + p Z_q ρ Z_q` on each qubit of the support.
fn dephase(rho: &mut DMatrix<C64>, support: &[usize], p: f64) {
    if p == 0.0 {
        return;
    }
    let keep = 1.0 - 2.0 * p;
    let dim = rho.nrows();
    for &q in support {
        let bit = 1usize << q;
        for c in 0..dim {
            for r in 0..dim {
                if (r ^ c) & bit != 0 {
                    rho[(r, c)] *= keep;
                }
            }
        }
    }
}

pub fn simulate_density(c: &Circuit, nm: &NoiseModel) -> Result<RegisterState> {
    nm.validate()?;
    let n = c.num_qubits();
    if n > MAX_DENSITY_QUBITS {
        return Err(Error::TooManyQubits {
            requested: n,
            limit: MAX_DENSITY_QUBITS,
        });
    }
    let dim = 1usize << n;
    let mut rho = DMatrix::from_element(dim, dim, ZERO);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    for g in c.gates() {
        let u = g.matrix();
        apply_to_columns(&mut rho, &u, &g.targets, &g.controls);
        rho.adjoint_mut();
        apply_to_columns(&mut rho, &u, &g.targets, &g.controls);

        let support = g.support();
        let k = g.depth as i32;
        let p = if support.len() == 1 { nm.p1 } else { nm.p2 };
        depolarize(&mut rho, &support, 1.0 - (1.0 - p).powi(k));
        dephase(&mut rho, &support, (1.0 - (1.0 - 2.0 * nm.p_dephase).powi(k)) / 2.0);
    }
    Ok(RegisterState { num_qubits: n, rho })
}

/// Outcome distribution over the measured qubits, including readout flips.
pub fn measure_probabilities(state: &RegisterState, measured: &[usize], nm: &NoiseModel) -> Vec<f64> {
    let mut probs = marginal(state.rho.diagonal().iter().map(|z| z.re), measured);
    let f = nm.readout_flip;
    if f > 0.0 {
        for bit in 0..measured.len() {
            let b = 1usize << bit;
            for k in 0..probs.len() {
                if k & b == 0 {
                    let (p0, p1) = (probs[k], probs[k | b]);
                    probs[k] = (1.0 - f) * p0 + f * p1;
                    probs[k | b] = f * p0 + (1.0 - f) * p1;
                }
            }
        }
    }
    probs
}

/// Noisy ancilla bias `P(0) − P(1)` of a Hadamard-test circuit.
pub fn noisy_bias(c: &Circuit, nm: &NoiseModel) -> Result<f64> {
    let state = simulate_density(c, nm)?;
    let p = measure_probabilities(&state, c.measured(), nm);
    Ok(p[0] - p[1])
}

/// Noisy estimate of `Re` or `Im` of `⟨φ_obs|exp(−iℋ_sch(η)t)|φ_init⟩`, with
/// the evolution block charged `depth` layers.
#[allow(clippy::too_many_arguments)]
pub fn noisy_overlap(
    pair: &HermitianPair,
    eta: f64,
    t: f64,
    phi_init: &DVector<C64>,
    phi_obs: &DVector<C64>,
    part: Part,
    nm: &NoiseModel,
    depth: u32,
) -> Result<f64> {
    let template = HadamardTemplate::new(phi_init, phi_obs)?;
    let u = unitary_propagator(&dilated_hamiltonian(pair, eta), t);
    let mut circ = template.circuit(&u, part)?;
    let g = &mut circ.gates_mut()[EVOLUTION_GATE];
    g.depth = depth.max(1);
    noisy_bias(&circ, nm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{ancilla_bias, build_hadamard_test, simulate_statevector, Gate};
    use crate::lindblad::{amplitude_damping_model, build_liouvillian};
    use crate::liouville::MaxAbs;
    use crate::schrod::decompose;
    use crate::testing::{random_unit_vector, random_unitary};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn noiseless_density_matches_statevector() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..10 {
            let u = random_unitary(4, &mut rng);
            let a = random_unit_vector(4, &mut rng);
            let b = random_unit_vector(4, &mut rng);
            let circ = build_hadamard_test(&u, &a, &b, Part::Im).unwrap();
            let psi = simulate_statevector(&circ).unwrap();
            let state = simulate_density(&circ, &NoiseModel::noiseless()).unwrap();
            let pure = &psi * psi.adjoint();
            assert!((state.rho - pure).max_abs() < 1e-12);
            let nb = noisy_bias(&circ, &NoiseModel::noiseless()).unwrap();
            assert!((nb - ancilla_bias(&circ).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn full_depolarizing_single_qubit() {
        let mut c = Circuit::new(1);
        c.push(Gate::x(0)).unwrap();
        let nm = NoiseModel {
            p1: 1.0,
            ..NoiseModel::noiseless()
        };
        let state = simulate_density(&c, &nm).unwrap();
        let half = DMatrix::<C64>::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((state.rho - half).max_abs() < 1e-15);
    }

    #[test]
    fn channels_keep_state_physical() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let u = random_unitary(4, &mut rng);
        let a = random_unit_vector(4, &mut rng);
        let b = random_unit_vector(4, &mut rng);
        let mut circ = build_hadamard_test(&u, &a, &b, Part::Re).unwrap();
        circ.gates_mut()[EVOLUTION_GATE].depth = 7;
        let nm = NoiseModel {
            p1: 0.05,
            p2: 0.1,
            p_dephase: 0.03,
            readout_flip: 0.0,
            depth_alpha: 1.0,
        };
        let rho = simulate_density(&circ, &nm).unwrap().rho;
        let tr: C64 = rho.trace();
        assert!((tr.re - 1.0).abs() < 1e-12 && tr.im.abs() < 1e-12);
        assert!((&rho - rho.adjoint()).max_abs() < 1e-12);
        let eig = nalgebra::SymmetricEigen::new(rho).eigenvalues;
        assert!(eig.iter().all(|&l| l > -1e-12));
    }

    #[test]
    fn dephasing_kills_coherence_only() {
        let mut c = Circuit::new(1);
        c.push(Gate::h(0)).unwrap();
        let nm = NoiseModel {
            p_dephase: 0.5,
            ..NoiseModel::noiseless()
        };
        let rho = simulate_density(&c, &nm).unwrap().rho;
        assert!(rho[(0, 1)].norm() < 1e-15);
        assert!((rho[(0, 0)].re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn readout_flip_mixes_outcomes() {
        let mut c = Circuit::new(1);
        c.measure(&[0]).unwrap();
        let nm = NoiseModel {
            readout_flip: 0.01,
            ..NoiseModel::noiseless()
        };
        let state = simulate_density(&c, &nm).unwrap();
        let p = measure_probabilities(&state, c.measured(), &nm);
        assert!((p[0] - 0.99).abs() < 1e-15 && (p[1] - 0.01).abs() < 1e-15);
    }

    #[test]
    fn validation_and_limits() {
        let bad = NoiseModel {
            p2: 1.5,
            ..NoiseModel::default()
        };
        assert!(matches!(bad.validate(), Err(Error::InvalidNoise(_))));
        let big = Circuit::new(MAX_DENSITY_QUBITS + 1);
        assert!(matches!(
            simulate_density(&big, &NoiseModel::default()),
            Err(Error::TooManyQubits { .. })
        ));
    }

    #[test]
    fn evolution_depth_model() {
        let nm = NoiseModel::default();
        // 2·16384+1 needs 16 qubits
        assert_eq!(nm.evolution_depth(0.0, 16384), 16);
        assert_eq!(nm.evolution_depth(2.5, 16384), 48);
        let flat = NoiseModel {
            depth_alpha: 0.0,
            ..nm
        };
        assert_eq!(flat.evolution_depth(10.0, 16384), 1);
    }

    #[test]
    fn noisy_overlap_reduces_to_ideal() {
        let pair = decompose(&build_liouvillian(&amplitude_damping_model(2.0, 0.2).unwrap()));
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = random_unit_vector(4, &mut rng);
        let b = random_unit_vector(4, &mut rng);
        let u = unitary_propagator(&dilated_hamiltonian(&pair, 0.7), 1.3);
        let want = b.dotc(&(&u * &a));
        let re = noisy_overlap(&pair, 0.7, 1.3, &a, &b, Part::Re, &NoiseModel::noiseless(), 5).unwrap();
        let im = noisy_overlap(&pair, 0.7, 1.3, &a, &b, Part::Im, &NoiseModel::noiseless(), 5).unwrap();
        assert!((re - want.re).abs() < 1e-12 && (im - want.im).abs() < 1e-12);

        // noise contracts the bias towards zero
        let noisy = noisy_overlap(&pair, 0.7, 1.3, &a, &b, Part::Re, &NoiseModel::default(), 5).unwrap();
        assert!(noisy.abs() < want.re.abs());
    }
    #[test]
    fn depolarized_hadamard() {
        let mut c = Circuit::new(1);
        c.push(Gate::h(0)).unwrap();
        let nm = NoiseModel {
            p1: 0.1,
            ..NoiseModel::noiseless()
        };
        let rho = simulate_density(&c, &nm).unwrap().rho;
        // 0.9·|+⟩⟨+| + 0.1·I/2
        let want = [[0.5, 0.45], [0.45, 0.5]];
        for r in 0..2 {
            for col in 0..2 {
                assert!((rho[(r, col)] - C64::new(want[r][col], 0.0)).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn readout_flip_arithmetic() {
        let mut c = Circuit::new(1);
        let theta = 2.0 * 0.8f64.sqrt().acos();
        let ry = DMatrix::from_row_slice(
            2,
            2,
            &[
                C64::new((theta / 2.0).cos(), 0.0),
                C64::new(-(theta / 2.0).sin(), 0.0),
                C64::new((theta / 2.0).sin(), 0.0),
                C64::new((theta / 2.0).cos(), 0.0),
            ],
        );
        c.push(Gate::unitary(ry, vec![0]).unwrap()).unwrap();
        c.measure(&[0]).unwrap();
        let state = simulate_density(&c, &NoiseModel::noiseless()).unwrap();
        let flip = |e: f64| NoiseModel {
            readout_flip: e,
            ..NoiseModel::noiseless()
        };
        let p = measure_probabilities(&state, c.measured(), &flip(0.0));
        assert!((p[0] - 0.8).abs() < 1e-12);
        let p = measure_probabilities(&state, c.measured(), &flip(0.02));
        assert!((p[0] - 0.788).abs() < 1e-12 && (p[0] + p[1] - 1.0).abs() < 1e-15);
        let p = measure_probabilities(&state, c.measured(), &flip(0.5));
        assert!((p[0] - 0.5).abs() < 1e-15 && (p[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_never_amplifies_worked_example() {
        let pair = decompose(&build_liouvillian(&amplitude_damping_model(2.0, 0.2).unwrap()));
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let init = DVector::from_vec(vec![ZERO, C64::new(0.0, -s), C64::new(0.0, s), ZERO]);
        let obs = DVector::from_vec(vec![ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO]);
        let nm = NoiseModel {
            p1: 0.01,
            p2: 0.05,
            ..NoiseModel::noiseless()
        };
        for eta in [-40.0, -3.0, 0.0, 0.5, 7.0] {
            for t in [0.0, 1.0, 4.0, 10.0] {
                for part in [Part::Re, Part::Im] {
                    let ideal = noisy_overlap(&pair, eta, t, &init, &obs, part, &NoiseModel::noiseless(), 1).unwrap();
                    let noisy = noisy_overlap(&pair, eta, t, &init, &obs, part, &nm, 10).unwrap();
                    assert!(noisy.abs() <= ideal.abs() + 1e-10);
                }
            }
        }
    }
}
