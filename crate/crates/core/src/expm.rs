//! Dense matrix exponentials for small complex matrices.
//!
//! [`expm_pade`] is the scaling-and-squaring Padé method (degrees 3 to 13,
//! Higham 2005). [`expm_eig`] diagonalizes through a complex Schur form and
//! declines when the eigenvector matrix is badly conditioned.
//! [`exp_hermitian`] computes `exp(−iHt)` for Hermitian `H` from its spectral
//! decomposition.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::liouville::{C64, ONE, ZERO};
#[cfg(test)]
use crate::liouville::MaxAbs;

const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// Condition-number ceiling for the eigendecomposition route.
pub const EIG_COND_LIMIT: f64 = 1e8;

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Odd/even split `U = A·Σ b_{2k+1} A^{2k}`, `V = Σ b_{2k} A^{2k}` for low degrees.
fn pade_low(a: &DMatrix<C64>, b: &[f64]) -> (DMatrix<C64>, DMatrix<C64>) {
    let n = a.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let mut pow = id.clone();
    let mut u = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for k in 0..b.len() / 2 {
        u += &pow * re(b[2 * k + 1]);
        v += &pow * re(b[2 * k]);
        pow = &pow * &a2;
    }
    (a * u, v)
}

fn pade_13(a: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    let b = &B13;
    let n = a.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let a2 = a * a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]);
    let u = a * (&a6 * inner_u
        + &a6 * re(b[7])
        + &a4 * re(b[5])
        + &a2 * re(b[3])
        + &id * re(b[1]));
    let inner_v = &a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]);
    let v = &a6 * inner_v + &a6 * re(b[6]) + &a4 * re(b[4]) + &a2 * re(b[2]) + &id * re(b[0]);
    (u, v)
}

/// `exp(A)` by scaling and squaring with a diagonal Padé approximant.
pub fn expm_pade(a: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm of a non-square matrix");
    if n == 0 {
        return a.clone();
    }
    let norm = one_norm(a);
    if norm == 0.0 {
        return DMatrix::identity(n, n);
    }
    let (u, v, squarings) = match THETA.iter().find(|(_, th)| norm <= *th) {
        Some(&(m, _)) => {
            let b: &[f64] = match m {
                3 => &B3,
                5 => &B5,
                7 => &B7,
                _ => &B9,
            };
            let (u, v) = pade_low(a, b);
            (u, v, 0)
        }
        None => {
            let s = (norm / THETA_13).log2().ceil().max(0.0) as i32;
            let scaled = a * re(2f64.powi(-s));
            let (u, v) = pade_13(&scaled);
            (u, v, s)
        }
    };
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.lu().solve(&p).expect("singular Padé denominator");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Eigenvalues and right eigenvectors (columns) through a complex Schur form.
/// Returns `None` for defective matrices.
pub fn eigen_decomposition(a: &DMatrix<C64>) -> Option<(DVector<C64>, DMatrix<C64>)> {
    let n = a.nrows();
    let (q, t) = a.clone().try_schur(1e-14, 10_000)?.unpack();
    let scale = one_norm(a).max(1.0);
    let mut y = DMatrix::<C64>::zeros(n, n);
    for k in 0..n {
        y[(k, k)] = ONE;
        let lambda = t[(k, k)];
        for i in (0..k).rev() {
            let mut num = ZERO;
            for m in i + 1..=k {
                num += t[(i, m)] * y[(m, k)];
            }
            let den = t[(i, i)] - lambda;
            if den.norm() <= 1e-13 * scale {
                if num.norm() <= 1e-13 * scale {
                    y[(i, k)] = ZERO;
                } else {
                    return None;
                }
            } else {
                y[(i, k)] = -num / den;
            }
        }
        let norm = y.column(k).norm();
        y.column_mut(k).unscale_mut(norm);
    }
    let eigvals = DVector::from_fn(n, |k, _| t[(k, k)]);
    Some((eigvals, q * y))
}

fn condition_number(m: &DMatrix<C64>) -> f64 {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Precomputed diagonalization `A = V Λ V⁻¹` for repeated `exp(A t)`.
#[derive(Debug, Clone)]
pub struct Diagonalization {
    eigvals: DVector<C64>,
    vecs: DMatrix<C64>,
    inv: DMatrix<C64>,
}

impl Diagonalization {
    /// `None` when `A` is defective or its eigenvector matrix has condition
    /// number at or above [`EIG_COND_LIMIT`].
    pub fn new(a: &DMatrix<C64>) -> Option<Self> {
        let (eigvals, vecs) = eigen_decomposition(a)?;
        if condition_number(&vecs) >= EIG_COND_LIMIT {
            return None;
        }
        let inv = vecs.clone().try_inverse()?;
        Some(Diagonalization { eigvals, vecs, inv })
    }

    pub fn exp(&self, t: f64) -> DMatrix<C64> {
        let n = self.eigvals.len();
        let mut scaled = self.vecs.clone();
        for k in 0..n {
            let e = (self.eigvals[k] * t).exp();
            scaled.column_mut(k).scale_mut_c(e);
        }
        scaled * &self.inv
    }
}

trait ScaleC {
    fn scale_mut_c(&mut self, s: C64);
}

impl<S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>> ScaleC
    for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
{
    fn scale_mut_c(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

/// `exp(A)` through diagonalization, or `None` if that route is declined.
pub fn expm_eig(a: &DMatrix<C64>) -> Option<DMatrix<C64>> {
    Diagonalization::new(a).map(|d| d.exp(1.0))
}

/// Spectral decomposition of a Hermitian matrix, reused for `exp(−iHt)`.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigvals: DVector<f64>,
    pub vecs: DMatrix<C64>,
}

impl HermitianSpectrum {
    pub fn new(h: &DMatrix<C64>) -> Self {
        let eig = SymmetricEigen::new(h.clone());
        HermitianSpectrum {
            eigvals: eig.eigenvalues,
            vecs: eig.eigenvectors,
        }
    }

    /// Phases `exp(−iλₖt)`.
    pub fn phases(&self, t: f64) -> DVector<C64> {
        self.eigvals.map(|l| C64::from_polar(1.0, -l * t))
    }

    /// `exp(−iHt)`.
    pub fn propagator(&self, t: f64) -> DMatrix<C64> {
        let ph = self.phases(t);
        let mut scaled = self.vecs.clone();
        for k in 0..ph.len() {
            scaled.column_mut(k).scale_mut_c(ph[k]);
        }
        scaled * self.vecs.adjoint()
    }
}

/// `exp(−iHt)` for Hermitian `H`.
pub fn exp_hermitian(h: &DMatrix<C64>, t: f64) -> DMatrix<C64> {
    HermitianSpectrum::new(h).propagator(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_hermitian, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Truncated Taylor series with many squarings: slow but independent.
    fn taylor_oracle(a: &DMatrix<C64>) -> DMatrix<C64> {
        let n = a.nrows();
        let s = (one_norm(a).log2().ceil() + 1.0).max(0.0) as i32;
        let scaled = a * re(2f64.powi(-s));
        let mut term = DMatrix::<C64>::identity(n, n);
        let mut sum = term.clone();
        for k in 1..30 {
            term = &term * &scaled * re(1.0 / k as f64);
            sum += &term;
        }
        for _ in 0..s {
            sum = &sum * &sum;
        }
        sum
    }

    #[test]
    fn zero_matrix_gives_identity() {
        let z = DMatrix::<C64>::zeros(3, 3);
        assert_eq!(expm_pade(&z), DMatrix::identity(3, 3));
    }

    #[test]
    fn diagonal_matches_scalar_exponentials() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![
            C64::new(-0.2, 0.0),
            C64::new(-0.1, -2.0),
            C64::new(-0.1, 2.0),
            ZERO,
        ]));
        for t in [0.3, 1.0, 7.5, 40.0] {
            let e = expm_pade(&(&d * re(t)));
            for k in 0..4 {
                let want = (d[(k, k)] * t).exp();
                assert!((e[(k, k)] - want).norm() <= 1e-13 * want.norm().max(1.0));
            }
        }
    }

    #[test]
    fn pade_agrees_with_taylor_across_norm_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for scale in [1e-3, 0.1, 0.5, 1.5, 4.0, 30.0] {
            let a = random_matrix(4, &mut rng) * re(scale / 4.0);
            let p = expm_pade(&a);
            let o = taylor_oracle(&a);
            let rel = (&p - &o).max_abs() / o.max_abs();
            assert!(rel < 1e-10, "scale {scale}: rel {rel}");
        }
    }

    #[test]
    fn eig_route_agrees_with_pade() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let a = random_matrix(4, &mut rng);
            let e = expm_eig(&a).expect("random matrices are diagonalizable");
            let p = expm_pade(&a);
            assert!((&e - &p).max_abs() <= 1e-10 * p.max_abs().max(1.0));
        }
    }

    #[test]
    fn eig_route_declines_defective_matrix() {
        let jordan = DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(expm_eig(&jordan).is_none());
    }

    #[test]
    fn hermitian_propagator_is_unitary_and_matches_pade() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let h = random_hermitian(4, &mut rng).into_matrix();
            let u = exp_hermitian(&h, 1.3);
            let id = DMatrix::<C64>::identity(4, 4);
            assert!((u.adjoint() * &u - id).max_abs() < 1e-12);
            let p = expm_pade(&(&h * C64::new(0.0, -1.3)));
            assert!((&u - &p).max_abs() < 1e-12);
        }
    }
}
