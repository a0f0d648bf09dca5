//! Thin helpers over faer for the dense complex algebra used throughout.

use crate::C64;
use faer::linalg::solvers::{PartialPivLu, Solve};
use faer::{ColRef, Mat, Par, Side};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not positive definite (pivot {0})")]
    NotPositiveDefinite(usize),
    #[error("matrix is numerically singular (reciprocal condition estimate {rcond:.3e})")]
    Singular { rcond: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
}

pub fn matvec(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.ncols(), x.len());
    let y = a * ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// `aᵀ x` (no conjugation).
pub fn matvec_t(a: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    assert_eq!(a.nrows(), x.len());
    let y = a.transpose() * ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

/// Bilinear product `xᵀ y`.
pub fn dot(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Sesquilinear product `xᴴ y`.
pub fn dotc(x: &[C64], y: &[C64]) -> C64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm2(x: &[C64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

pub fn conj(x: &[C64]) -> Vec<C64> {
    x.iter().map(|v| v.conj()).collect()
}

/// Lower Cholesky factor of a Hermitian positive definite matrix.
pub fn cholesky_lower(a: &Mat<C64>) -> Result<Mat<C64>, LinalgError> {
    match a.llt(Side::Lower) {
        Ok(llt) => Ok(llt.L().to_owned()),
        Err(faer::linalg::solvers::LltError::NonPositivePivot { index }) => Err(LinalgError::NotPositiveDefinite(index)),
    }
}

/// Solves `L X = B` in place.
pub fn lower_solve_in_place(l: &Mat<C64>, b: &mut Mat<C64>) {
    faer::linalg::triangular_solve::solve_lower_triangular_in_place(l.as_ref(), b.as_mut(), Par::Seq);
}

/// `L⁻¹ B L⁻ᵀ` for lower triangular `L_r`, `L_c` (rows and columns whitened separately).
pub fn whiten(b: &Mat<C64>, l_rows: &Mat<C64>, l_cols: &Mat<C64>) -> Mat<C64> {
    let mut x = b.clone();
    lower_solve_in_place(l_rows, &mut x);
    let mut y = x.transpose().to_owned();
    lower_solve_in_place(l_cols, &mut y);
    y.transpose().to_owned()
}

/// Largest singular value.
pub fn spectral_norm(a: &Mat<C64>) -> f64 {
    a.singular_values().map(|s| s.first().copied().unwrap_or(0.0)).unwrap_or(f64::NAN)
}

/// Dense LU factorization with a cheap conditioning diagnostic.
pub struct DenseLu {
    lu: PartialPivLu<C64>,
    pub rcond: f64,
}

impl DenseLu {
    /// Factorizes `a`; rejects matrices whose pivot ratio falls below `rcond_floor`.
    pub fn new(a: &Mat<C64>, rcond_floor: f64) -> Result<Self, LinalgError> {
        let lu = a.partial_piv_lu();
        let u = lu.U();
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..u.nrows() {
            let d = u[(i, i)].norm();
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let rcond = if u.nrows() == 0 { 1.0 } else if hi > 0.0 { lo / hi } else { 0.0 };
        if !(rcond > rcond_floor) {
            return Err(LinalgError::Singular { rcond });
        }
        Ok(Self { lu, rcond })
    }

    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let x = self.lu.solve(ColRef::from_slice(b));
        (0..x.nrows()).map(|i| x[i]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solve_and_whiten() {
        let a = Mat::<C64>::from_fn(3, 3, |i, j| if i == j { C64::new(4.0, 0.0) } else { C64::new(1.0, 0.0) });
        let lu = DenseLu::new(&a, 1e-14).unwrap();
        let b = vec![C64::new(1.0, 1.0), C64::new(0.0, 2.0), C64::new(-1.0, 0.0)];
        let x = lu.solve(&b);
        let r = matvec(&a, &x);
        assert!(r.iter().zip(&b).all(|(p, q)| (p - q).norm() < 1e-14));
        let l = cholesky_lower(&a).unwrap();
        let w = whiten(&a, &l, &l);
        for i in 0..3 {
            for j in 0..3 {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((w[(i, j)] - e).norm() < 1e-14);
            }
        }
        assert!((spectral_norm(&w) - 1.0).abs() < 1e-13);
        let singular = Mat::<C64>::zeros(2, 2);
        assert!(matches!(DenseLu::new(&singular, 1e-14), Err(LinalgError::Singular { .. })));
        let indefinite = Mat::<C64>::from_fn(2, 2, |i, j| C64::new(if i == j { -1.0 } else { 0.0 }, 0.0));
        assert!(cholesky_lower(&indefinite).is_err());
    }
}
