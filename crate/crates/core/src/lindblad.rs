//! Vectorized Lindbladians, steady states and exact evolution.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expm::{expm_pade, Diagonalization};
use crate::liouville::{
    identity_vector, left_superop, right_superop, sigma_minus, sigma_z, DensityMatrix, Operator,
    MaxAbs, Superoperator, VectorizedState, C64, I,
};

/// Singular values below this count towards the kernel of ℒ.
pub const KERNEL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct Jump {
    pub operator: Operator,
    pub rate: f64,
}

/// Hamiltonian (ħ = 1) plus jump operators with non-negative rates.
#[derive(Debug, Clone, PartialEq)]
pub struct LindbladModel {
    hamiltonian: Operator,
    jumps: Vec<Jump>,
}

impl LindbladModel {
    pub fn new(hamiltonian: Operator, jumps: Vec<Jump>) -> Result<Self> {
        let d = hamiltonian.dim();
        for (index, j) in jumps.iter().enumerate() {
            if j.operator.dim() != d {
                return Err(Error::DimMismatch {
                    expected: d,
                    found: j.operator.dim(),
                });
            }
            if !(j.rate >= 0.0) {
                return Err(Error::NegativeRate {
                    index,
                    rate: j.rate,
                });
            }
        }
        Ok(LindbladModel { hamiltonian, jumps })
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn jumps(&self) -> &[Jump] {
        &self.jumps
    }
}

/// `H = (ω₀/2)σ_z` with a single `σ₋` jump at rate `γ`.
pub fn amplitude_damping_model(omega0: f64, gamma: f64) -> Result<LindbladModel> {
    LindbladModel::new(
        sigma_z().scale(C64::new(omega0 / 2.0, 0.0)),
        vec![Jump {
            operator: sigma_minus(),
            rate: gamma,
        }],
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    superop: Superoperator,
    model: Option<LindbladModel>,
}

impl Liouvillian {
    /// Wraps an arbitrary generator; used for synthetic inputs.
    pub fn from_superop(superop: Superoperator) -> Self {
        Liouvillian {
            superop,
            model: None,
        }
    }

    pub fn superop(&self) -> &Superoperator {
        &self.superop
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.superop.matrix()
    }

    pub fn model(&self) -> Option<&LindbladModel> {
        self.model.as_ref()
    }

    pub fn op_dim(&self) -> usize {
        self.superop.op_dim()
    }
}

/// ℒ = −i(H⊗I − I⊗Hᵀ) + Σₖ γₖ [Lₖ⊗Lₖ* − ½(Lₖ†Lₖ⊗I + I⊗(Lₖ†Lₖ)ᵀ)].
pub fn build_liouvillian(model: &LindbladModel) -> Liouvillian {
    let h = model.hamiltonian();
    let mut m = (left_superop(h).into_matrix() - right_superop(h).into_matrix()) * (-I);
    for jump in model.jumps() {
        if jump.rate == 0.0 {
            continue;
        }
        let l = &jump.operator;
        let ldl = l.adjoint().mul(l).unwrap();
        let feed = left_superop(l).compose(&right_superop(&l.adjoint())).unwrap();
        let drain = left_superop(&ldl).into_matrix() + right_superop(&ldl).into_matrix();
        m += (feed.into_matrix() - drain * C64::new(0.5, 0.0)) * C64::new(jump.rate, 0.0);
    }
    Liouvillian {
        superop: Superoperator::new(m).unwrap(),
        model: Some(model.clone()),
    }
}

/// Right-hand side of the master equation evaluated directly in matrix form.
pub fn master_equation_rhs(model: &LindbladModel, rho: &Operator) -> Operator {
    let h = model.hamiltonian().matrix();
    let r = rho.matrix();
    let mut out = (h * r - r * h) * (-I);
    for jump in model.jumps() {
        let l = jump.operator.matrix();
        let ld = l.adjoint();
        let ldl = &ld * l;
        let term = l * r * &ld - (&ldl * r + r * &ldl) * C64::new(0.5, 0.0);
        out += term * C64::new(jump.rate, 0.0);
    }
    Operator::new(out).unwrap()
}

/// Unique kernel vector of ℒ, normalized to unit trace.
pub fn steady_state(l: &Liouvillian) -> Result<VectorizedState> {
    let m = l.matrix();
    let n = m.nrows();
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested right singular vectors");
    let kernel: Vec<usize> = (0..n)
        .filter(|&k| svd.singular_values[k] < KERNEL_TOL)
        .collect();
    if kernel.len() != 1 {
        return Err(Error::DegenerateKernel(kernel.len()));
    }
    let row = kernel[0];
    let v = v_t.row(row).adjoint();
    let d = l.op_dim();
    let trace: C64 = (0..d)
        .map(|i| v[crate::liouville::vec_index(i, i, d)])
        .sum();
    if trace.norm() < KERNEL_TOL {
        return Err(Error::DegenerateKernel(0));
    }
    VectorizedState::new(v / trace)
}

/// Matrix-exponential route used by [`evolve_exact`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpMethod {
    #[default]
    Pade,
    /// Eigendecomposition; falls back to Padé when ℒ is defective or its
    /// eigenvector matrix is ill-conditioned.
    Eigen,
}

/// `exp(ℒt)|v0⟩` by dense matrix exponential.
pub fn evolve_exact(l: &Liouvillian, v0: &VectorizedState, t: f64) -> Result<VectorizedState> {
    evolve_exact_with(l, v0, t, ExpMethod::Pade)
}

pub fn evolve_exact_with(
    l: &Liouvillian,
    v0: &VectorizedState,
    t: f64,
    method: ExpMethod,
) -> Result<VectorizedState> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("negative time {t}")));
    }
    let m = l.matrix();
    if v0.len() != m.ncols() {
        return Err(Error::DimMismatch {
            expected: m.ncols(),
            found: v0.len(),
        });
    }
    if t == 0.0 {
        return Ok(v0.clone());
    }
    let scaled = m * C64::new(t, 0.0);
    let e = match method {
        ExpMethod::Pade => expm_pade(&scaled),
        ExpMethod::Eigen => match Diagonalization::new(m) {
            Some(diag) => diag.exp(t),
            None => expm_pade(&scaled),
        },
    };
    VectorizedState::new(e * v0.vector())
}

/// Analytic amplitude-damping evolution, valid for any operator (not only
/// density matrices): populations relax at `γ`, coherences rotate at `ω₀`
/// and decay at `γ/2`.
pub fn closed_form_amplitude_damping_operator(
    x0: &Operator,
    t: f64,
    omega0: f64,
    gamma: f64,
) -> Operator {
    let x = x0.matrix();
    let decay = (-gamma * t).exp();
    let coh = C64::new(-gamma * t / 2.0, -omega0 * t).exp();
    let mut out = DMatrix::zeros(2, 2);
    out[(1, 1)] = x[(1, 1)] * decay;
    out[(1, 0)] = x[(1, 0)] * coh;
    out[(0, 1)] = x[(0, 1)] * coh.conj();
    out[(0, 0)] = x[(0, 0)] + x[(1, 1)] * (1.0 - decay);
    Operator::new(out).unwrap()
}

pub fn closed_form_amplitude_damping(
    rho0: &DensityMatrix,
    t: f64,
    omega0: f64,
    gamma: f64,
) -> Result<DensityMatrix> {
    if rho0.dim() != 2 {
        return Err(Error::DimMismatch {
            expected: 2,
            found: rho0.dim(),
        });
    }
    DensityMatrix::validate(closed_form_amplitude_damping_operator(
        rho0.operator(),
        t,
        omega0,
        gamma,
    ))
}

/// `max |⟨I|ℒ|` entry; zero for a trace-preserving generator.
pub fn trace_defect(l: &Liouvillian) -> f64 {
    let id = identity_vector(l.op_dim());
    (id.vector().adjoint() * l.matrix()).max_abs()
}
