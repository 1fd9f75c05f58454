//! Random inputs for property tests.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::liouville::{DensityMatrix, Operator, C64};

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn random_matrix(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    DMatrix::from_fn(n, n, |_, _| gaussian(rng))
}

pub fn random_operator(d: usize, rng: &mut impl Rng) -> Operator {
    Operator::new(random_matrix(d, rng)).unwrap()
}

pub fn random_hermitian(d: usize, rng: &mut impl Rng) -> Operator {
    let g = random_matrix(d, rng);
    Operator::new((&g + g.adjoint()) * C64::new(0.5, 0.0)).unwrap()
}

/// Full-rank `G G† / Tr(G G†)`.
pub fn random_density_matrix(d: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = random_matrix(d, rng);
    let mut p = &g * g.adjoint();
    let tr = p.trace();
    p /= tr;
    // exact Hermitian symmetry, trace error is a few ulp
    let p = DMatrix::from_fn(d, d, |i, j| {
        if i == j {
            C64::new(p[(i, i)].re, 0.0)
        } else if i < j {
            p[(i, j)]
        } else {
            p[(j, i)].conj()
        }
    });
    DensityMatrix::validate(Operator::new(p).unwrap()).unwrap()
}

pub fn random_unit_vector(n: usize, rng: &mut impl Rng) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| gaussian(rng));
    let norm = v.norm();
    v / C64::new(norm, 0.0)
}

/// Haar-ish unitary from the QR factorization of a Gaussian matrix.
pub fn random_unitary(n: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let qr = random_matrix(n, rng).qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q;
    for j in 0..n {
        let phase = r[(j, j)] / C64::new(r[(j, j)].norm(), 0.0);
        for i in 0..n {
            u[(i, j)] *= phase;
        }
    }
    u
}
