//! Discrete fractional norms `‖φ‖²_{−1/2} = φᴴ V(σ₀) φ` and `‖ψ‖²_{1/2} = ψᴴ (W(σ₀) + M) ψ`.
//!
//! Both matrices are assembled with unit material at real `σ₀`, so they are real symmetric
//! positive definite; only their Cholesky factors are kept.

use super::TraceError;
use crate::calderon::{MultiTraceVector, TraceLayout};
use crate::linalg::{self, cholesky_lower};
use crate::mesh::Boundary;
use crate::operators::{assemble_operators, assemble_p1_mass, Wanted};
use crate::quadrature::{Medium, QuadratureOrders};
use crate::C64;
use faer::{ColRef, Mat};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormKind {
    /// P1 data in `H^{1/2}`.
    Half,
    /// P0 data in `H^{−1/2}`.
    MinusHalf,
    /// Whole multi-trace vector.
    Multi,
}

pub struct TraceNorms {
    pub sigma0: f64,
    pub layout: TraceLayout,
    /// Cholesky factors of `V(σ₀)`.
    lv: Vec<Mat<C64>>,
    /// Cholesky factors of `W(σ₀) + M_{P1}`.
    lw: Vec<Mat<C64>>,
}

fn adjoint_apply(l: &Mat<C64>, x: &[C64]) -> Vec<C64> {
    let y = l.adjoint() * ColRef::from_slice(x);
    (0..y.nrows()).map(|i| y[i]).collect()
}

fn lower_solve(l: &Mat<C64>, r: &[C64]) -> Vec<C64> {
    let mut m = Mat::from_fn(r.len(), 1, |i, _| r[i]);
    linalg::lower_solve_in_place(l, &mut m);
    (0..r.len()).map(|i| m[(i, 0)]).collect()
}

impl TraceNorms {
    pub fn assemble(boundaries: &[Boundary], sigma0: f64, orders: &QuadratureOrders) -> Result<Self, TraceError> {
        if !(sigma0 > 0.0 && sigma0.is_finite()) {
            return Err(TraceError::BadSigma(sigma0));
        }
        let mut lv = Vec::new();
        let mut lw = Vec::new();
        for b in boundaries {
            let set = assemble_operators(C64::new(sigma0, 0.0), b, &Medium::default(), Wanted { v: true, k: false, w: true }, orders)?;
            let mut v = set.v.expect("requested");
            // Exact symmetry and zero imaginary part at real frequency.
            for i in 0..v.nrows() {
                for j in 0..v.ncols() {
                    v[(i, j)].im = 0.0;
                }
            }
            lv.push(cholesky_lower(&v)?);
            drop(v);
            let mut w = set.w.expect("requested");
            for (r, c, val) in assemble_p1_mass(b, None).triplets() {
                w[(r, c)] += val;
            }
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    w[(i, j)].im = 0.0;
                }
            }
            lw.push(cholesky_lower(&w)?);
        }
        Ok(Self { sigma0, layout: TraceLayout::from_boundaries(boundaries), lv, lw })
    }

    pub fn l_half(&self, j: usize) -> &Mat<C64> {
        &self.lw[j]
    }

    pub fn l_minus_half(&self, j: usize) -> &Mat<C64> {
        &self.lv[j]
    }

    pub fn half(&self, j: usize, psi: &[C64]) -> f64 {
        linalg::norm2(&adjoint_apply(&self.lw[j], psi))
    }

    pub fn minus_half(&self, j: usize, phi: &[C64]) -> f64 {
        linalg::norm2(&adjoint_apply(&self.lv[j], phi))
    }

    pub fn multi(&self, x: &MultiTraceVector) -> f64 {
        (0..self.layout.blocks.len())
            .map(|j| self.half(j, x.dirichlet(j)).powi(2) + self.minus_half(j, x.neumann(j)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Dual norm of a functional on P1 (`‖r‖_{−1/2}` via `(W + M)⁻¹`).
    pub fn dual_half(&self, j: usize, r: &[C64]) -> f64 {
        linalg::norm2(&lower_solve(&self.lw[j], r))
    }

    /// Dual norm of a functional on P0 (`‖r‖_{1/2}` via `V⁻¹`).
    pub fn dual_minus_half(&self, j: usize, r: &[C64]) -> f64 {
        linalg::norm2(&lower_solve(&self.lv[j], r))
    }

    /// Dual norm of a functional stored in multi-trace layout (tested with `ψ_D` in the
    /// Dirichlet slot and `ψ_N` in the Neumann slot).
    pub fn dual_multi(&self, r: &MultiTraceVector) -> f64 {
        (0..self.layout.blocks.len())
            .map(|j| self.dual_half(j, r.dirichlet(j)).powi(2) + self.dual_minus_half(j, r.neumann(j)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Block diagonal lower factor `L_X` of the multi-trace norm matrix.
    pub fn multi_factor(&self) -> Mat<C64> {
        let n = self.layout.len();
        let mut l = Mat::<C64>::zeros(n, n);
        for j in 0..self.layout.blocks.len() {
            let (d, nn) = (self.layout.dirichlet(j), self.layout.neumann(j));
            for (a, i) in d.clone().enumerate() {
                for (b, k) in d.clone().enumerate() {
                    l[(i, k)] = self.lw[j][(a, b)];
                }
            }
            for (a, i) in nn.clone().enumerate() {
                for (b, k) in nn.clone().enumerate() {
                    l[(i, k)] = self.lv[j][(a, b)];
                }
            }
        }
        l
    }

    pub fn norm(&self, kind: NormKind, j: usize, x: &[C64]) -> Result<f64, TraceError> {
        if !x.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            return Err(TraceError::NonFinite);
        }
        match kind {
            NormKind::Half if x.len() == self.layout.blocks[j].vertices => Ok(self.half(j, x)),
            NormKind::MinusHalf if x.len() == self.layout.blocks[j].triangles => Ok(self.minus_half(j, x)),
            NormKind::Multi if x.len() == self.layout.len() => {
                Ok(self.multi(&MultiTraceVector::from_data(&self.layout, x.to_vec()).map_err(|_| TraceError::Length)?))
            }
            _ => Err(TraceError::Length),
        }
    }
}

/// One-shot discrete norm (assembles the norm matrices at `σ₀`).
pub fn discrete_norm(kind: NormKind, x: &[C64], boundaries: &[Boundary], j: usize, sigma0: f64) -> Result<f64, TraceError> {
    let norms = TraceNorms::assemble(boundaries, sigma0, &QuadratureOrders::default())?;
    norms.norm(kind, j, x)
}
