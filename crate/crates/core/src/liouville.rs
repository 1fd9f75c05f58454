//! Liouville-space algebra.
//!
//! Operators on a `d`-level system are stored in the natural level basis
//! (`entries[(i, j)] = ⟨i|X|j⟩`, level `0` first). Vectorization uses the
//! *descending* enumeration of levels, row-major:
//!
//! | position `p`           | operator element        |
//! |------------------------|-------------------------|
//! | `(d-1-i)·d + (d-1-j)`  | `X[(i, j)]`             |
//!
//! For a qubit this gives `|X⟩ = (X₁₁, X₁₀, X₀₁, X₀₀)ᵀ`, so the left
//! multiplication superoperator is `A ⊗ I` and the right multiplication
//! superoperator is `I ⊗ Aᵀ` once `A` is re-indexed in descending order.
//!
//! The Pauli helpers follow the same convention: `|1⟩` is the excited
//! level, `σ_z = |1⟩⟨1| − |0⟩⟨0|` and `σ₋ = |0⟩⟨1|`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);
pub(crate) const I: C64 = C64::new(0.0, 1.0);

/// Tolerance for algebraic identities.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Floor for eigenvalues of a positive semidefinite matrix.
pub const PSD_TOL: f64 = 1e-10;

/// Position of the operator element `(i, j)` in a vectorized state.
#[inline]
pub fn vec_index(i: usize, j: usize, d: usize) -> usize {
    (d - 1 - i) * d + (d - 1 - j)
}

/// Inverse of [`vec_index`].
#[inline]
pub fn element_of(pos: usize, d: usize) -> (usize, usize) {
    (d - 1 - pos / d, d - 1 - pos % d)
}

/// Largest entry modulus of a complex matrix or vector.
pub trait MaxAbs {
    fn max_abs(&self) -> f64;
}

impl<R, C, S> MaxAbs for nalgebra::Matrix<C64, R, C, S>
where
    R: nalgebra::Dim,
    C: nalgebra::Dim,
    S: nalgebra::RawStorage<C64, R, C>,
{
    fn max_abs(&self) -> f64 {
        self.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// A general square operator on the physical Hilbert space.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator(DMatrix<C64>);

impl Operator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::DimMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Operator(m))
    }

    pub fn from_real(d: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Operator::new(DMatrix::from_row_iterator(
            d,
            d,
            entries.iter().map(|&x| C64::new(x, 0.0)),
        ))
    }

    /// Row-major complex entries.
    pub fn from_rows(d: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != d * d {
            return Err(Error::DimMismatch {
                expected: d * d,
                found: entries.len(),
            });
        }
        Operator::new(DMatrix::from_row_slice(d, d, entries))
    }

    pub fn identity(d: usize) -> Self {
        Operator(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Operator(DMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn adjoint(&self) -> Operator {
        Operator(self.0.adjoint())
    }

    pub fn mul(&self, other: &Operator) -> Result<Operator> {
        check_dim(self.dim(), other.dim())?;
        Ok(Operator(&self.0 * &other.0))
    }

    pub fn scale(&self, s: C64) -> Operator {
        Operator(&self.0 * s)
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| (0..d).all(|j| (self.0[(i, j)] - self.0[(j, i)].conj()).norm() <= tol))
    }
}

pub fn sigma_x() -> Operator {
    Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
}

pub fn sigma_y() -> Operator {
    Operator(DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]))
}

/// `|1⟩⟨1| − |0⟩⟨0|`.
pub fn sigma_z() -> Operator {
    Operator::from_real(2, &[-1.0, 0.0, 0.0, 1.0]).unwrap()
}

/// Lowering operator `|0⟩⟨1|`.
pub fn sigma_minus() -> Operator {
    Operator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap()
}

/// Raising operator `|1⟩⟨0|`.
pub fn sigma_plus() -> Operator {
    Operator::from_real(2, &[0.0, 0.0, 1.0, 0.0]).unwrap()
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Operator);

impl DensityMatrix {
    /// Checks the density-matrix invariants on a raw operator.
    pub fn validate(op: Operator) -> Result<Self> {
        if !op.is_hermitian(ALGEBRA_TOL) {
            return Err(Error::InvalidDensityMatrix("not Hermitian".into()));
        }
        let tr = op.trace();
        if (tr - ONE).norm() > ALGEBRA_TOL {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min_eig = op
            .matrix()
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min_eig}"
            )));
        }
        Ok(DensityMatrix(op))
    }

    /// Pure state `|k⟩⟨k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        m[(k, k)] = ONE;
        DensityMatrix(Operator(m))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(Operator::identity(d).scale(C64::new(1.0 / d as f64, 0.0)))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn operator(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        self.0.matrix()
    }
}

/// A vector in Liouville space (`d²` components, ordering per [`vec_index`]).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedState(DVector<C64>);

impl VectorizedState {
    pub fn new(v: DVector<C64>) -> Result<Self> {
        operator_dim(v.len())?;
        Ok(VectorizedState(v))
    }

    pub fn from_slice(v: &[C64]) -> Result<Self> {
        VectorizedState::new(DVector::from_column_slice(v))
    }

    /// Physical dimension `d` (the vector has `d²` entries).
    pub fn op_dim(&self) -> usize {
        operator_dim(self.0.len()).unwrap()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }
}

/// A `d² × d²` matrix acting on vectorized states.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator(DMatrix<C64>);

impl Superoperator {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        operator_dim(m.nrows())?;
        Ok(Superoperator(m))
    }

    pub fn identity(d: usize) -> Self {
        Superoperator(DMatrix::identity(d * d, d * d))
    }

    pub fn zeros(d: usize) -> Self {
        Superoperator(DMatrix::zeros(d * d, d * d))
    }

    /// Physical dimension `d`.
    pub fn op_dim(&self) -> usize {
        operator_dim(self.0.nrows()).unwrap()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.0
    }

    pub fn apply(&self, v: &VectorizedState) -> Result<VectorizedState> {
        check_dim(self.0.ncols(), v.len())?;
        Ok(VectorizedState(&self.0 * v.vector()))
    }

    pub fn compose(&self, other: &Superoperator) -> Result<Superoperator> {
        check_dim(self.0.ncols(), other.0.nrows())?;
        Ok(Superoperator(&self.0 * &other.0))
    }
}

fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimMismatch { expected, found });
    }
    Ok(())
}

/// `d` such that `d² = n`.
pub fn operator_dim(n: usize) -> Result<usize> {
    let d = (n as f64).sqrt().round() as usize;
    if d == 0 || d * d != n {
        return Err(Error::NonSquareDim(n));
    }
    Ok(d)
}

pub fn vectorize(rho: &DensityMatrix) -> VectorizedState {
    vectorize_operator(rho.operator())
}

/// Vectorizes any operator, not only density matrices.
pub fn vectorize_operator(x: &Operator) -> VectorizedState {
    let d = x.dim();
    let m = x.matrix();
    VectorizedState(DVector::from_fn(d * d, |p, _| {
        let (i, j) = element_of(p, d);
        m[(i, j)]
    }))
}

/// Exact inverse of [`vectorize`]. The result is a plain operator; use
/// [`DensityMatrix::validate`] when the density-matrix invariants matter.
pub fn devectorize(v: &VectorizedState) -> Result<Operator> {
    let n = v.len();
    let d = operator_dim(n)?;
    let x = v.vector();
    Ok(Operator(DMatrix::from_fn(d, d, |i, j| x[vec_index(i, j, d)])))
}

/// `|I⟩ = Σᵢ |i⟩ ⊗ |i⟩`.
pub fn identity_vector(d: usize) -> VectorizedState {
    let mut v = DVector::zeros(d * d);
    for i in 0..d {
        v[vec_index(i, i, d)] = ONE;
    }
    VectorizedState(v)
}

/// `⟨I|(A ⊗ I)|v⟩`, which equals `Tr(Aρ)` for `v = |ρ⟩`.
pub fn expectation(a: &Operator, v: &VectorizedState) -> Result<C64> {
    let d = a.dim();
    check_dim(d * d, v.len())?;
    let m = a.matrix();
    let x = v.vector();
    let mut acc = ZERO;
    for i in 0..d {
        for k in 0..d {
            acc += m[(i, k)] * x[vec_index(k, i, d)];
        }
    }
    Ok(acc)
}

/// Hilbert–Schmidt inner product `Tr(A†B)`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    check_dim(a.dim(), b.dim())?;
    Ok(a.matrix()
        .iter()
        .zip(b.matrix().iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// Superoperator of `ρ ↦ Aρ`.
pub fn left_superop(a: &Operator) -> Superoperator {
    let d = a.dim();
    let m = a.matrix();
    let mut s = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                s[(vec_index(i, j, d), vec_index(k, j, d))] += m[(i, k)];
            }
        }
    }
    Superoperator(s)
}

/// Superoperator of `ρ ↦ ρA`.
pub fn right_superop(a: &Operator) -> Superoperator {
    let d = a.dim();
    let m = a.matrix();
    let mut s = DMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                s[(vec_index(i, j, d), vec_index(i, k, d))] += m[(k, j)];
            }
        }
    }
    Superoperator(s)
}
