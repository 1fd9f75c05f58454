//! Schrödingerization of a Liouvillian.
//!
//! ℒ = ℋ₁ − iℋ₂ with ℋ₁ = (ℒ + ℒ†)/2 and ℋ₂ = i(ℒ − ℒ†)/2. The warped state
//! `w(t, ξ) = e^{−ξ}|ρ(t)⟩` on ξ > 0 evolves, mode by mode in the Fourier
//! variable η, under the Hermitian `ℋ_sch(η) = ηℋ₁ + ℋ₂`. The physical state
//! is read back from the inverse transform at a recovery point ξ* > 0:
//!
//! ```text
//! |ρ(t)⟩ = e^{ξ*} (1/2π) ∫ e^{iηξ*} / (1 + iη) · e^{−iℋ_sch(η)t} |ρ(0)⟩ dη
//! ```
//!
//! which holds as long as ξ* exceeds `max(0, λ_max(ℋ₁))·t`, the distance the
//! ξ = 0 discontinuity of the initial profile travels by time t. The integral
//! is truncated to `[−L, L]` and evaluated with an `N`-point midpoint rule.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::{exp_hermitian, HermitianSpectrum};
use crate::lindblad::Liouvillian;
use crate::liouville::{VectorizedState, C64, I, ZERO};

/// Tolerance on Hermiticity of the decomposition.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Hermitian and anti-Hermitian parts of a Liouvillian.
#[derive(Debug, Clone)]
pub struct HermitianPair {
    h1: DMatrix<C64>,
    h2: DMatrix<C64>,
    h1_max_eigenvalue: f64,
}

impl HermitianPair {
    pub fn h1(&self) -> &DMatrix<C64> {
        &self.h1
    }

    pub fn h2(&self) -> &DMatrix<C64> {
        &self.h2
    }

    /// Largest eigenvalue of ℋ₁. Positive for generators (like amplitude
    /// damping) whose Hermitian part is not negative semidefinite.
    pub fn h1_max_eigenvalue(&self) -> f64 {
        self.h1_max_eigenvalue
    }

    pub fn dim(&self) -> usize {
        self.h1.nrows()
    }

    /// Smallest recovery offset that is valid up to time `t`.
    pub fn min_recovery_offset(&self, t: f64) -> f64 {
        if self.h1_max_eigenvalue <= 1e-10 {
            0.0
        } else {
            self.h1_max_eigenvalue * t
        }
    }

    /// `ℋ₁ − iℋ₂`.
    pub fn recombine(&self) -> DMatrix<C64> {
        &self.h1 - &self.h2 * I
    }
}

pub fn decompose(l: &Liouvillian) -> HermitianPair {
    let m = l.matrix();
    let adj = m.adjoint();
    let h1 = (m + &adj) * C64::new(0.5, 0.0);
    let h2 = (m - &adj) * C64::new(0.0, 0.5);
    let h1_max_eigenvalue = h1.clone().symmetric_eigenvalues().max();
    HermitianPair {
        h1,
        h2,
        h1_max_eigenvalue,
    }
}

#[derive(Debug, Clone)]
pub struct DilatedHamiltonian {
    pub eta: f64,
    pub matrix: DMatrix<C64>,
}

/// `ℋ_sch(η) = ηℋ₁ + ℋ₂`.
pub fn dilated_hamiltonian(pair: &HermitianPair, eta: f64) -> DilatedHamiltonian {
    DilatedHamiltonian {
        eta,
        matrix: &pair.h1 * C64::new(eta, 0.0) + &pair.h2,
    }
}

/// `exp(−iℋ_sch(η)t)`.
pub fn unitary_propagator(dh: &DilatedHamiltonian, t: f64) -> DMatrix<C64> {
    exp_hermitian(&dh.matrix, t)
}

/// Midpoint quadrature in η with the recovery-offset weights.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaGrid {
    pub half_width: f64,
    pub points: usize,
    pub recovery_offset: f64,
    nodes: Vec<f64>,
    weights: Vec<C64>,
}

impl EtaGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `w_j = e^{ξ*} (Δη/2π) e^{iη_j ξ*} / (1 + iη_j)`.
    pub fn weights(&self) -> &[C64] {
        &self.weights
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn weight_sum(&self) -> C64 {
        self.weights.iter().sum()
    }
}

pub fn make_grid(half_width: f64, points: usize, recovery_offset: f64) -> Result<EtaGrid> {
    if !(half_width > 0.0) || !half_width.is_finite() {
        return Err(Error::InvalidGrid(format!("half width {half_width}")));
    }
    if points < 2 {
        return Err(Error::InvalidGrid(format!("{points} points")));
    }
    if !(recovery_offset > 0.0) || !recovery_offset.is_finite() {
        return Err(Error::InvalidGrid(format!(
            "recovery offset {recovery_offset}"
        )));
    }
    let step = 2.0 * half_width / points as f64;
    let scale = recovery_offset.exp() * step / (2.0 * std::f64::consts::PI);
    let nodes: Vec<f64> = (0..points)
        .map(|j| -half_width + (j as f64 + 0.5) * step)
        .collect();
    let weights = nodes
        .iter()
        .map(|&eta| C64::from_polar(scale, eta * recovery_offset) / C64::new(1.0, eta))
        .collect();
    Ok(EtaGrid {
        half_width,
        points,
        recovery_offset,
        nodes,
        weights,
    })
}

/// Spectral data of `ℋ_sch(η_j)` for every node, shared across time points.
#[derive(Debug, Clone)]
pub struct NodeSpectra {
    spectra: Vec<HermitianSpectrum>,
}

impl NodeSpectra {
    pub fn new(pair: &HermitianPair, grid: &EtaGrid) -> Self {
        let spectra = grid
            .nodes()
            .par_iter()
            .map(|&eta| HermitianSpectrum::new(&dilated_hamiltonian(pair, eta).matrix))
            .collect();
        NodeSpectra { spectra }
    }

    pub fn get(&self, j: usize) -> &HermitianSpectrum {
        &self.spectra[j]
    }

    pub fn len(&self) -> usize {
        self.spectra.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spectra.is_empty()
    }
}

fn check_offset(pair: &HermitianPair, grid: &EtaGrid, t_max: f64) -> Result<()> {
    let required = pair.min_recovery_offset(t_max);
    if grid.recovery_offset <= required {
        return Err(Error::RecoveryOffsetTooSmall {
            offset: grid.recovery_offset,
            required,
        });
    }
    Ok(())
}

/// Quadrature approximation of `exp(ℒt)|v0⟩`.
pub fn reconstruct(
    pair: &HermitianPair,
    v0: &VectorizedState,
    t: f64,
    grid: &EtaGrid,
) -> Result<VectorizedState> {
    Ok(reconstruct_series(pair, v0, &[t], grid)?.remove(0))
}

/// [`reconstruct`] at several times, sharing one eigendecomposition per node.
/// Each output is summed over nodes in ascending order, so results do not
/// depend on the thread count.
pub fn reconstruct_series(
    pair: &HermitianPair,
    v0: &VectorizedState,
    times: &[f64],
    grid: &EtaGrid,
) -> Result<Vec<VectorizedState>> {
    let n = pair.dim();
    if v0.len() != n {
        return Err(Error::DimMismatch {
            expected: n,
            found: v0.len(),
        });
    }
    if let Some(&t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let t_max = times.iter().cloned().fold(0.0, f64::max);
    check_offset(pair, grid, t_max)?;

    let spectra = NodeSpectra::new(pair, grid);
    // c_j = w_j Q_j† v0
    let coeffs: Vec<DVector<C64>> = (0..grid.points)
        .into_par_iter()
        .map(|j| spectra.get(j).vecs.adjoint() * v0.vector() * grid.weights()[j])
        .collect();

    times
        .par_iter()
        .map(|&t| {
            let mut acc = DVector::from_element(n, ZERO);
            let mut scratch = DVector::from_element(n, ZERO);
            for (j, c) in coeffs.iter().enumerate() {
                let spec = spectra.get(j);
                for m in 0..n {
                    scratch[m] = c[m] * C64::from_polar(1.0, -spec.eigvals[m] * t);
                }
                acc.gemv(C64::new(1.0, 0.0), &spec.vecs, &scratch, C64::new(1.0, 0.0));
            }
            VectorizedState::new(acc)
        })
        .collect()
}

/// Ancilla register size and circuit count for an `N`-node η grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceReport {
    pub ancilla_qubits: u32,
    pub circuits_per_timepoint: u64,
}

/// `M = ⌈log₂(2N + 1)⌉`; one real and one imaginary circuit per node.
pub fn resource_estimate(points: u64) -> Result<ResourceReport> {
    if points == 0 {
        return Err(Error::InvalidGrid("0 points".into()));
    }
    let levels = 2 * points + 1;
    let mut m = 0u32;
    while (1u64 << m) < levels {
        m += 1;
    }
    Ok(ResourceReport {
        ancilla_qubits: m,
        circuits_per_timepoint: 2 * points,
    })
}
