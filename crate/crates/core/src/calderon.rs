//! Frequency scaling, the block Calderón operator and the ± pairings on multi-trace vectors.
//!
//! Per subdomain the scaled operator is
//!
//! ```text
//! A_j(s) = [ −K_j    s V_j  ]
//!          [ W_j/s   K_j'   ]
//! ```
//!
//! acting on `(s^{1/2} γ_D u, s^{−1/2} γ_N u)`. Cauchy data of a solution satisfy
//! `(A_j − Id/2) γ = 0`. Galerkin rows are ordered like the trial vector: the first row block
//! is tested with P1 functions `ψ_D` (Neumann-type equation), the second with P0 `ψ_N`.

use crate::linalg::{self, LinalgError};
use crate::mesh::{Boundary, Subdomain};
use crate::operators::{assemble_mass, assemble_operators, Csr, OperatorError, Wanted};
use crate::quadrature::{Medium, QuadratureOrders};
use crate::traces::TraceNorms;
use crate::C64;
use faer::Mat;
use serde::{Deserialize, Serialize};
use std::ops::Range;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CalderonError {
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("trace vector layout does not match the operator")]
    Layout,
}

/// `s^{1/2}` and `s^{−1/2}` on the principal branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingPair {
    pub sqrt: C64,
    pub inv_sqrt: C64,
}

impl ScalingPair {
    pub fn new(s: C64) -> Self {
        let sqrt = s.sqrt();
        Self { sqrt, inv_sqrt: sqrt.inv() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDims {
    pub subdomain: Subdomain,
    pub vertices: usize,
    pub triangles: usize,
}

/// Block sizes of a multi-trace vector `(φ_{1,D}, φ_{1,N}, φ_{2,D}, φ_{2,N})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceLayout {
    pub blocks: Vec<BlockDims>,
}

impl TraceLayout {
    pub fn from_boundaries(boundaries: &[Boundary]) -> Self {
        Self {
            blocks: boundaries
                .iter()
                .map(|b| BlockDims { subdomain: b.subdomain, vertices: b.num_vertices(), triangles: b.num_triangles() })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(|b| b.vertices + b.triangles).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn offset(&self, j: usize) -> usize {
        self.blocks[..j].iter().map(|b| b.vertices + b.triangles).sum()
    }

    /// Index range of the Dirichlet (P1) block of boundary `j`.
    pub fn dirichlet(&self, j: usize) -> Range<usize> {
        let o = self.offset(j);
        o..o + self.blocks[j].vertices
    }

    /// Index range of the Neumann (P0) block of boundary `j`.
    pub fn neumann(&self, j: usize) -> Range<usize> {
        let o = self.offset(j) + self.blocks[j].vertices;
        o..o + self.blocks[j].triangles
    }

    /// Range of both blocks of boundary `j`.
    pub fn block(&self, j: usize) -> Range<usize> {
        let o = self.offset(j);
        o..o + self.blocks[j].vertices + self.blocks[j].triangles
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MultiTraceVector {
    pub layout: TraceLayout,
    pub data: Vec<C64>,
}

impl MultiTraceVector {
    pub fn zeros(layout: &TraceLayout) -> Self {
        Self { data: vec![C64::default(); layout.len()], layout: layout.clone() }
    }

    pub fn from_data(layout: &TraceLayout, data: Vec<C64>) -> Result<Self, CalderonError> {
        if data.len() != layout.len() {
            return Err(CalderonError::Layout);
        }
        Ok(Self { layout: layout.clone(), data })
    }

    pub fn dirichlet(&self, j: usize) -> &[C64] {
        &self.data[self.layout.dirichlet(j)]
    }

    pub fn neumann(&self, j: usize) -> &[C64] {
        &self.data[self.layout.neumann(j)]
    }

    pub fn dirichlet_mut(&mut self, j: usize) -> &mut [C64] {
        let r = self.layout.dirichlet(j);
        &mut self.data[r]
    }

    pub fn neumann_mut(&mut self, j: usize) -> &mut [C64] {
        let r = self.layout.neumann(j);
        &mut self.data[r]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    pub fn conj(&self) -> Self {
        Self { layout: self.layout.clone(), data: linalg::conj(&self.data) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { layout: self.layout.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { layout: self.layout.clone(), data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScaleDirection {
    /// `γ ↦ D(s) γ`
    Forward,
    /// `γ ↦ D(s)⁻¹ γ`
    Inverse,
}

pub fn scale_traces(s: C64, trace: &MultiTraceVector, direction: ScaleDirection) -> MultiTraceVector {
    let sc = ScalingPair::new(s);
    let (fd, fn_) = match direction {
        ScaleDirection::Forward => (sc.sqrt, sc.inv_sqrt),
        ScaleDirection::Inverse => (sc.inv_sqrt, sc.sqrt),
    };
    let mut out = trace.clone();
    for j in 0..trace.layout.blocks.len() {
        out.dirichlet_mut(j).iter_mut().for_each(|v| *v *= fd);
        out.neumann_mut(j).iter_mut().for_each(|v| *v *= fn_);
    }
    out
}

/// Unscaled operators of one boundary at one frequency.
#[derive(Clone, Debug)]
pub struct CalderonBlock {
    pub subdomain: Subdomain,
    pub medium: Medium,
    pub v: Mat<C64>,
    pub k: Mat<C64>,
    pub w: Mat<C64>,
    /// Mixed P0 × P1 mass matrix.
    pub mass: Csr,
}

/// `A(s) = diag(A_1(s), A_2(s))`.
#[derive(Clone, Debug)]
pub struct BlockCalderon {
    pub s: C64,
    pub layout: TraceLayout,
    pub blocks: Vec<CalderonBlock>,
}

impl BlockCalderon {
    pub fn assemble(s: C64, boundaries: &[Boundary], media: &[Medium], orders: &QuadratureOrders) -> Result<Self, CalderonError> {
        let mut blocks = Vec::with_capacity(boundaries.len());
        for (b, m) in boundaries.iter().zip(media) {
            let set = assemble_operators(s, b, m, Wanted::ALL, orders)?;
            blocks.push(CalderonBlock {
                subdomain: b.subdomain,
                medium: *m,
                v: set.v.expect("requested"),
                k: set.k.expect("requested"),
                w: set.w.expect("requested"),
                mass: assemble_mass(b, None),
            });
        }
        Ok(Self { s, layout: TraceLayout::from_boundaries(boundaries), blocks })
    }

    /// Galerkin matrix of `A_j(s) − shift·Id` (rows `ψ_D`, `ψ_N`; columns `φ_D`, `φ_N`).
    pub fn block_matrix(&self, j: usize, shift: f64) -> Mat<C64> {
        let blk = &self.blocks[j];
        let (nv, nt) = (blk.w.nrows(), blk.v.nrows());
        let s = self.s;
        let inv_s = s.inv();
        let mass = blk.mass.to_dense();
        Mat::from_fn(nv + nt, nv + nt, |r, c| match (r < nv, c < nv) {
            (true, true) => blk.w[(r, c)] * inv_s,
            (true, false) => blk.k[(c - nv, r)] - mass[(c - nv, r)] * shift,
            (false, true) => -blk.k[(r - nv, c)] - mass[(r - nv, c)] * shift,
            (false, false) => blk.v[(r - nv, c - nv)] * s,
        })
    }

    /// Block diagonal Galerkin matrix of `A(s) − shift·Id` over the whole layout.
    pub fn matrix(&self, shift: f64) -> Mat<C64> {
        let n = self.layout.len();
        let mut out = Mat::<C64>::zeros(n, n);
        for j in 0..self.blocks.len() {
            let r = self.layout.block(j);
            let m = self.block_matrix(j, shift);
            for (a, i) in r.clone().enumerate() {
                for (b, k) in r.clone().enumerate() {
                    out[(i, k)] = m[(a, b)];
                }
            }
        }
        out
    }

    /// Applies the Galerkin matrix of `A(s) − shift·Id` without forming it. The result holds,
    /// per boundary, the functional tested with `ψ_D` in the Dirichlet slot and the one tested
    /// with `ψ_N` in the Neumann slot.
    pub fn apply(&self, x: &MultiTraceVector, shift: f64) -> Result<MultiTraceVector, CalderonError> {
        if x.layout != self.layout {
            return Err(CalderonError::Layout);
        }
        let mut out = MultiTraceVector::zeros(&self.layout);
        let inv_s = self.s.inv();
        for (j, blk) in self.blocks.iter().enumerate() {
            let (xd, xn) = (x.dirichlet(j), x.neumann(j));
            let wd = linalg::matvec(&blk.w, xd);
            let ktn = linalg::matvec_t(&blk.k, xn);
            let mtn = blk.mass.matvec_transpose_c(xn);
            let kd = linalg::matvec(&blk.k, xd);
            let md = blk.mass.matvec_c(xd);
            let vn = linalg::matvec(&blk.v, xn);
            for (i, o) in out.dirichlet_mut(j).iter_mut().enumerate() {
                *o = wd[i] * inv_s + ktn[i] - mtn[i] * shift;
            }
            for (i, o) in out.neumann_mut(j).iter_mut().enumerate() {
                *o = -kd[i] - md[i] * shift + vn[i] * self.s;
            }
        }
        Ok(out)
    }

    /// `Re⟨A(s) φ, φ̄⟩₊`.
    pub fn quadratic_form(&self, phi: &MultiTraceVector) -> Result<f64, CalderonError> {
        let y = self.apply(phi, 0.0)?;
        Ok(linalg::dotc(&phi.data, &y.data).re)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PairingSign {
    Plus,
    Minus,
}

/// `⟨Φ, Ψ⟩± = Σ_j ⟨φ_{j,D}, ψ_{j,N}⟩ ± ⟨φ_{j,N}, ψ_{j,D}⟩`, bilinear. `masses[j]` is the mixed
/// P0 × P1 mass matrix of boundary `j` (possibly restricted to a part).
pub fn pairing(sign: PairingSign, phi: &MultiTraceVector, psi: &MultiTraceVector, masses: &[Csr]) -> Result<C64, CalderonError> {
    if phi.layout != psi.layout || masses.len() != phi.layout.blocks.len() {
        return Err(CalderonError::Layout);
    }
    let sg = match sign {
        PairingSign::Plus => 1.0,
        PairingSign::Minus => -1.0,
    };
    let mut total = C64::default();
    for (j, m) in masses.iter().enumerate() {
        let a = linalg::dot(psi.neumann(j), &m.matvec_c(phi.dirichlet(j)));
        let b = linalg::dot(phi.neumann(j), &m.matvec_c(psi.dirichlet(j)));
        total += a + b * sg;
    }
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalderonResidual {
    pub value: f64,
    /// Set when the input traces vanish and the quotient is undefined.
    pub trivial: bool,
}

/// `‖(A(s) − Id/2) γ‖_* / ‖γ‖_X` for scaled traces `γ`, measured in the discrete norms.
pub fn calderon_residual(a: &BlockCalderon, norms: &TraceNorms, traces: &MultiTraceVector) -> Result<CalderonResidual, CalderonError> {
    let denom = norms.multi(traces);
    if denom == 0.0 {
        return Ok(CalderonResidual { value: 0.0, trivial: true });
    }
    let r = a.apply(traces, 0.5)?;
    Ok(CalderonResidual { value: norms.dual_multi(&r) / denom, trivial: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_builtin, BuiltinKind};
    use crate::operators::{assemble_bio, assemble_mass};
    use crate::quadrature::OperatorKind;

    fn sphere(level: u32) -> Vec<Boundary> {
        vec![generate_builtin(BuiltinKind::Icosphere { level }).unwrap().boundary(Subdomain::One)]
    }

    #[test]
    fn scaling_examples() {
        let b = sphere(0);
        let layout = TraceLayout::from_boundaries(&b);
        let mut x = MultiTraceVector::zeros(&layout);
        x.dirichlet_mut(0).iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        x.neumann_mut(0).iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        let y = scale_traces(C64::new(4.0, 0.0), &x, ScaleDirection::Forward);
        assert!(y.dirichlet(0).iter().all(|v| *v == C64::new(2.0, 0.0)));
        assert!(y.neumann(0).iter().all(|v| *v == C64::new(0.5, 0.0)));
        let s = C64::new(1.0, 3.0);
        let z = scale_traces(s, &scale_traces(s, &x, ScaleDirection::Forward), ScaleDirection::Inverse);
        assert!(z.data.iter().zip(&x.data).all(|(a, b)| (a - b).norm() < 1e-15));
        let sc = ScalingPair::new(C64::new(1.0, 1.0));
        assert!((sc.sqrt.norm() - 2f64.powf(0.25)).abs() < 1e-15);
        assert!((sc.sqrt * sc.inv_sqrt - 1.0).norm() < 1e-15);
        assert!((sc.sqrt * sc.sqrt - C64::new(1.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn block_entries_match_operators() {
        let b = sphere(1);
        let s = C64::new(1.0, 2.0);
        let m = Medium::default();
        let a = BlockCalderon::assemble(s, &b, &[m], &QuadratureOrders::default()).unwrap();
        let g = a.block_matrix(0, 0.0);
        let v = assemble_bio(OperatorKind::V, s, &b[0], &m).unwrap().data;
        let w = assemble_bio(OperatorKind::W, s, &b[0], &m).unwrap().data;
        let nv = b[0].num_vertices();
        assert_eq!(g[(nv + 3, nv + 5)], v[(3, 5)] * s);
        assert!((g[(2, 7)] - w[(2, 7)] / s).norm() <= 1e-15 * w[(2, 7)].norm());
        let conj = BlockCalderon::assemble(s.conj(), &b, &[m], &QuadratureOrders::default()).unwrap();
        let gc = conj.block_matrix(0, 0.0);
        for i in 0..g.nrows() {
            for j in 0..g.ncols() {
                assert!((g[(i, j)].conj() - gc[(i, j)]).norm() < 1e-12 * (1.0 + g[(i, j)].norm()));
            }
        }
        // The matrix-free product agrees with the assembled one.
        let layout = &a.layout;
        let x = MultiTraceVector::from_data(layout, (0..layout.len()).map(|i| C64::new((i as f64).sin(), (i as f64).cos())).collect()).unwrap();
        let y = a.apply(&x, 0.5).unwrap();
        let full = linalg::matvec(&a.matrix(0.5), &x.data);
        assert!(y.data.iter().zip(&full).all(|(p, q)| (p - q).norm() < 1e-12));
    }

    #[test]
    fn pairing_examples() {
        let b = sphere(1);
        let layout = TraceLayout::from_boundaries(&b);
        let masses = vec![assemble_mass(&b[0], None)];
        let mut phi = MultiTraceVector::zeros(&layout);
        phi.dirichlet_mut(0).iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        let mut psi = MultiTraceVector::zeros(&layout);
        psi.neumann_mut(0).iter_mut().for_each(|v| *v = C64::new(1.0, 0.0));
        let area = b[0].area();
        let plus = pairing(PairingSign::Plus, &phi, &psi, &masses).unwrap();
        assert!((plus.re - area).abs() < 1e-12);
        let minus = pairing(PairingSign::Minus, &phi, &psi, &masses).unwrap();
        assert!((minus.re - area).abs() < 1e-12);
        let swapped = pairing(PairingSign::Minus, &psi, &phi, &masses).unwrap();
        assert!((swapped.re + area).abs() < 1e-12);
    }
}
