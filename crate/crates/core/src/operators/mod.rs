//! Galerkin matrices of the Laplace-domain boundary integral operators on one closed
//! boundary `Γ_j`, plus mass matrices and layer potentials.
//!
//! Spaces: Neumann data in P0 (one DOF per triangle), Dirichlet data in continuous P1 (one
//! DOF per vertex). All pairings are bilinear (no conjugation).
//!
//! * `V` is `nT × nT`, `⟨V φ_q, φ_p⟩`.
//! * `K` is `nT × nV` (P0 test, P1 trial); `K' = Kᵀ` exactly.
//! * `W` is `nV × nV`, assembled through the Maue identity.

mod dump;
mod potential;
mod sparse;

pub use dump::{read_matrix_dump, write_matrix_dump, DumpHeader, DUMP_MAGIC};
pub use potential::{eval_potential, eval_potential_gradient, PotentialError, PotentialKind};
pub use sparse::Csr;

use crate::mesh::{Boundary, Part};
use crate::quadrature::pair::{canonical_order, local_matrix_w_entry, pair_moments, PanelQuadCache};
use crate::quadrature::{classify_pair, Medium, OperatorKind, PairIntegrals, QuadratureOrders};
use crate::C64;
use faer::Mat;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("boundary of subdomain {0} is not closed ({1} open edges)")]
    NotClosed(u8, usize),
    #[error("frequency must be finite, got {0}")]
    BadFrequency(C64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpaceKind {
    /// Piecewise constants on triangles (Neumann data).
    P0,
    /// Continuous piecewise linears on vertices (Dirichlet data).
    P1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscreteSpace {
    pub kind: SpaceKind,
    pub subdomain: u8,
    pub dofs: usize,
}

impl DiscreteSpace {
    pub fn p0(b: &Boundary) -> Self {
        Self { kind: SpaceKind::P0, subdomain: b.subdomain.number(), dofs: b.num_triangles() }
    }

    pub fn p1(b: &Boundary) -> Self {
        Self { kind: SpaceKind::P1, subdomain: b.subdomain.number(), dofs: b.num_vertices() }
    }
}

/// Dense Galerkin matrix with its spaces.
#[derive(Clone, Debug)]
pub struct GalerkinMatrix {
    pub kind: OperatorKind,
    pub s: C64,
    pub rows: DiscreteSpace,
    pub cols: DiscreteSpace,
    pub data: Mat<C64>,
}

/// Which operators to produce in one assembly pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Wanted {
    pub v: bool,
    pub k: bool,
    pub w: bool,
}

impl Wanted {
    pub const ALL: Wanted = Wanted { v: true, k: true, w: true };
}

/// `V`, `K` and `W` of one boundary at one frequency (absent entries were not requested).
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub s: C64,
    pub v: Option<Mat<C64>>,
    pub k: Option<Mat<C64>>,
    pub w: Option<Mat<C64>>,
}

/// Rows of panels processed together before their contributions are scattered.
const ROW_BLOCK: usize = 64;

struct RowContrib {
    q: usize,
    v: C64,
    /// `K[p][vert(q)_b]`
    k_pq: [C64; 3],
    /// `K[q][vert(p)_a]`
    k_qp: [C64; 3],
    /// `W[vert(p)_a][vert(q)_b]`
    w: [[C64; 3]; 3],
}

fn check_closed(b: &Boundary) -> Result<(), OperatorError> {
    let open = b.open_edges();
    if open > 0 {
        Err(OperatorError::NotClosed(b.subdomain.number(), open))
    } else {
        Ok(())
    }
}

/// Assembles the requested operators in one pass over unordered panel pairs. Rows are
/// processed in blocks in parallel and scattered sequentially, so results are bitwise
/// reproducible.
pub fn assemble_operators(
    s: C64,
    b: &Boundary,
    medium: &Medium,
    wanted: Wanted,
    orders: &QuadratureOrders,
) -> Result<OperatorSet, OperatorError> {
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(OperatorError::BadFrequency(s));
    }
    check_closed(b)?;
    let kappa = medium.kappa(s);
    let a2 = medium.a * medium.a;
    let nt = b.num_triangles();
    let nv = b.num_vertices();
    let mut v = wanted.v.then(|| Mat::<C64>::zeros(nt, nt));
    let mut k = wanted.k.then(|| Mat::<C64>::zeros(nt, nv));
    let mut w = wanted.w.then(|| Mat::<C64>::zeros(nv, nv));
    let cache = PanelQuadCache::new(&b.panels, orders);

    let row = |p: usize| -> Vec<RowContrib> {
        let px = &b.panels[p];
        let tp = &b.triangles[p];
        (p..nt)
            .map(|q| {
                let py = &b.panels[q];
                let tq = &b.triangles[q];
                let m: PairIntegrals = if canonical_order(tp, tq) {
                    pair_moments(kappa, &b.panels, &cache, p, q, &classify_pair(tp, tq), orders)
                } else {
                    pair_moments(kappa, &b.panels, &cache, q, p, &classify_pair(tq, tp), orders).swapped()
                };
                let mut wloc = [[C64::default(); 3]; 3];
                if wanted.w {
                    for (a, row) in wloc.iter_mut().enumerate() {
                        for (bb, e) in row.iter_mut().enumerate() {
                            *e = local_matrix_w_entry(&m, kappa, a2, px, py, a, bb);
                        }
                    }
                    if q == p {
                        // The singular rule is not symmetric in (x, y); symmetrize the self-pair.
                        for a in 0..3 {
                            for bb in a + 1..3 {
                                let avg = (wloc[a][bb] + wloc[bb][a]) * 0.5;
                                wloc[a][bb] = avg;
                                wloc[bb][a] = avg;
                            }
                        }
                    }
                }
                RowContrib { q, v: m.g / a2, k_pq: m.dg_y, k_qp: m.dg_x, w: wloc }
            })
            .collect()
    };

    for start in (0..nt).step_by(ROW_BLOCK) {
        let end = (start + ROW_BLOCK).min(nt);
        let block: Vec<Vec<RowContrib>> = (start..end).into_par_iter().map(row).collect();
        for (p, contribs) in (start..end).zip(block) {
            let tp = b.triangles[p];
            for c in contribs {
                let q = c.q;
                let tq = b.triangles[q];
                if let Some(v) = v.as_mut() {
                    v[(p, q)] = c.v;
                    v[(q, p)] = c.v;
                }
                if let Some(k) = k.as_mut() {
                    for j in 0..3 {
                        k[(p, tq[j])] += c.k_pq[j];
                    }
                    if p != q {
                        for j in 0..3 {
                            k[(q, tp[j])] += c.k_qp[j];
                        }
                    }
                }
                if let Some(w) = w.as_mut() {
                    for i in 0..3 {
                        for j in 0..3 {
                            w[(tp[i], tq[j])] += c.w[i][j];
                            if p != q {
                                w[(tq[j], tp[i])] += c.w[i][j];
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(OperatorSet { s, v, k, w })
}

/// Galerkin matrix of a single operator.
pub fn assemble_bio(kind: OperatorKind, s: C64, b: &Boundary, medium: &Medium) -> Result<GalerkinMatrix, OperatorError> {
    let orders = QuadratureOrders::default();
    let wanted = Wanted { v: kind == OperatorKind::V, k: matches!(kind, OperatorKind::K | OperatorKind::KPrime), w: kind == OperatorKind::W };
    let set = assemble_operators(s, b, medium, wanted, &orders)?;
    let (rows, cols, data) = match kind {
        OperatorKind::V => (DiscreteSpace::p0(b), DiscreteSpace::p0(b), set.v.expect("requested")),
        OperatorKind::K => (DiscreteSpace::p0(b), DiscreteSpace::p1(b), set.k.expect("requested")),
        OperatorKind::KPrime => (DiscreteSpace::p1(b), DiscreteSpace::p0(b), set.k.expect("requested").transpose().to_owned()),
        OperatorKind::W => (DiscreteSpace::p1(b), DiscreteSpace::p1(b), set.w.expect("requested")),
    };
    Ok(GalerkinMatrix { kind, s, rows, cols, data })
}

/// Mixed mass matrix `M[t][v] = ∫_t λ_v` (P0 rows, P1 columns), optionally restricted to
/// triangles carrying `restriction`.
pub fn assemble_mass(b: &Boundary, restriction: Option<Part>) -> Csr {
    let mut trip = Vec::with_capacity(3 * b.num_triangles());
    for (t, tri) in b.triangles.iter().enumerate() {
        if restriction.is_some_and(|p| b.parts[t] != p) {
            continue;
        }
        let a = b.panels[t].area / 3.0;
        for &v in tri {
            trip.push((t, v, a));
        }
    }
    Csr::from_triplets(b.num_triangles(), b.num_vertices(), trip)
}

/// P1 mass matrix `∫ λ_u λ_v`, optionally restricted to triangles carrying `restriction`.
pub fn assemble_p1_mass(b: &Boundary, restriction: Option<Part>) -> Csr {
    let mut trip = Vec::with_capacity(9 * b.num_triangles());
    for (t, tri) in b.triangles.iter().enumerate() {
        if restriction.is_some_and(|p| b.parts[t] != p) {
            continue;
        }
        let a = b.panels[t].area / 12.0;
        for i in 0..3 {
            for j in 0..3 {
                trip.push((tri[i], tri[j], if i == j { 2.0 * a } else { a }));
            }
        }
    }
    Csr::from_triplets(b.num_vertices(), b.num_vertices(), trip)
}

/// P0 mass matrix (diagonal of triangle areas).
pub fn assemble_p0_mass(b: &Boundary) -> Csr {
    let trip = b.panels.iter().enumerate().map(|(t, p)| (t, t, p.area)).collect();
    Csr::from_triplets(b.num_triangles(), b.num_triangles(), trip)
}

impl Boundary {
    /// Number of edges not shared by exactly two triangles.
    pub fn open_edges(&self) -> usize {
        let mut count: HashMap<(usize, usize), usize> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
        count.values().filter(|&&c| c != 2).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_builtin, BuiltinKind, Subdomain};
    use std::f64::consts::PI;

    fn sphere(level: u32) -> Boundary {
        generate_builtin(BuiltinKind::Icosphere { level }).unwrap().boundary(Subdomain::One)
    }

    #[test]
    fn v_is_complex_symmetric_and_w_symmetric() {
        let b = sphere(1);
        let set = assemble_operators(C64::new(1.0, 2.0), &b, &Medium::new(1.2, 0.8).unwrap(), Wanted::ALL, &QuadratureOrders::default()).unwrap();
        let v = set.v.unwrap();
        let w = set.w.unwrap();
        let mut maxdiff: f64 = 0.0;
        for i in 0..v.nrows() {
            for j in 0..v.ncols() {
                maxdiff = maxdiff.max((v[(i, j)] - v[(j, i)]).norm());
            }
        }
        assert_eq!(maxdiff, 0.0);
        for i in 0..w.nrows() {
            for j in 0..w.ncols() {
                assert_eq!(w[(i, j)], w[(j, i)]);
            }
        }
        // Not Hermitian for complex s.
        assert!(v[(0, 1)].im.abs() > 1e-8);
    }

    #[test]
    fn newtonian_limits_on_level_two() {
        let b = sphere(2);
        let s = C64::new(1e-6, 0.0);
        let set = assemble_operators(s, &b, &Medium::default(), Wanted { v: true, k: true, w: false }, &QuadratureOrders::default()).unwrap();
        let v = set.v.unwrap();
        let k = set.k.unwrap();
        let total: f64 = (0..v.nrows()).flat_map(|i| (0..v.ncols()).map(move |j| (i, j))).map(|(i, j)| v[(i, j)].re).sum();
        // ⟨V1,1⟩ = ∫∫ 1/(4π|x−y|) = |Γ| on the unit sphere.
        assert!((total - b.area()).abs() < 0.01 * b.area(), "{total} vs {}", b.area());
        assert!((total - 4.0 * PI).abs() < 0.05 * 4.0 * PI);
        // K1 = −1/2 tested against P0: row sums equal −|t|/2.
        let mut mean = 0.0;
        for t in 0..k.nrows() {
            let row: f64 = (0..k.ncols()).map(|j| k[(t, j)].re).sum();
            mean += row / b.panels[t].area;
        }
        mean /= k.nrows() as f64;
        assert!((mean + 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn w_annihilates_constants_at_zero_frequency() {
        let b = sphere(1);
        let set = assemble_operators(C64::new(1e-8, 0.0), &b, &Medium::default(), Wanted { v: false, k: false, w: true }, &QuadratureOrders::default()).unwrap();
        let w = set.w.unwrap();
        for i in 0..w.nrows() {
            let row: C64 = (0..w.ncols()).map(|j| w[(i, j)]).sum();
            assert!(row.norm() < 1e-12);
        }
    }

    #[test]
    fn material_scaling() {
        // V·a², K and W/a² depend on (s, a, p) only through κ = sp/a.
        let b = sphere(1);
        let o = QuadratureOrders::default();
        let s = C64::new(1.0, 1.0);
        let base = assemble_operators(s, &b, &Medium::new(1.0, 1.0).unwrap(), Wanted::ALL, &o).unwrap();
        let scaled = assemble_operators(s * 2.0, &b, &Medium::new(2.0, 1.0).unwrap(), Wanted::ALL, &o).unwrap();
        let repar = assemble_operators(s * 0.5, &b, &Medium::new(1.0, 2.0).unwrap(), Wanted::ALL, &o).unwrap();
        let (v0, v1, v2) = (base.v.unwrap(), scaled.v.unwrap(), repar.v.unwrap());
        let (w0, w1) = (base.w.unwrap(), scaled.w.unwrap());
        let (k0, k1) = (base.k.unwrap(), scaled.k.unwrap());
        for i in 0..v0.nrows() {
            for j in 0..v0.ncols() {
                assert!((v1[(i, j)] * 4.0 - v0[(i, j)]).norm() < 1e-14);
                assert_eq!(v2[(i, j)], v0[(i, j)]);
            }
            for j in 0..k0.ncols() {
                assert!((k1[(i, j)] - k0[(i, j)]).norm() < 1e-14);
            }
        }
        for i in 0..w0.nrows() {
            for j in 0..w0.ncols() {
                assert!((w1[(i, j)] / 4.0 - w0[(i, j)]).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn conjugate_frequency_gives_conjugate_matrices() {
        let b = sphere(1);
        let m = Medium::new(0.9, 1.1).unwrap();
        let o = QuadratureOrders::default();
        let s = C64::new(1.0, 2.0);
        let a = assemble_operators(s, &b, &m, Wanted::ALL, &o).unwrap();
        let c = assemble_operators(s.conj(), &b, &m, Wanted::ALL, &o).unwrap();
        let (ka, kc) = (a.k.unwrap(), c.k.unwrap());
        for i in 0..ka.nrows() {
            for j in 0..ka.ncols() {
                assert!((ka[(i, j)].conj() - kc[(i, j)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn mass_matrices() {
        let m = generate_builtin(BuiltinKind::SplitBall { level: 2, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 }).unwrap();
        let b = m.boundary(Subdomain::One);
        let full = assemble_mass(&b, None);
        let ones_v = vec![1.0; b.num_vertices()];
        let ones_t = vec![1.0; b.num_triangles()];
        let area: f64 = full.matvec(&ones_v).iter().sum();
        assert!((area - b.area()).abs() < 1e-13);
        let disk: f64 = assemble_mass(&b, Some(Part::Jump)).matvec(&ones_v).iter().sum();
        assert!((disk - m.part_area(Part::Jump)).abs() < 1e-13);
        let none = assemble_mass(&b, Some(Part::Neumann));
        assert_eq!(none.nnz(), 0);
        let p1: f64 = assemble_p1_mass(&b, None).matvec(&ones_v).iter().sum();
        assert!((p1 - b.area()).abs() < 1e-13);
        let p0: f64 = assemble_p0_mass(&b).matvec(&ones_t).iter().sum();
        assert!((p0 - b.area()).abs() < 1e-13);
    }

    #[test]
    fn open_boundary_is_rejected() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 1 }).unwrap();
        let cut = m.without_triangles(|t| t == 3).boundary(Subdomain::One);
        assert!(matches!(
            assemble_bio(OperatorKind::V, C64::new(1.0, 0.0), &cut, &Medium::default()),
            Err(OperatorError::NotClosed(1, _))
        ));
    }

    #[test]
    fn kprime_is_transpose_of_k() {
        let b = sphere(1);
        let s = C64::new(2.0, -1.0);
        let k = assemble_bio(OperatorKind::K, s, &b, &Medium::default()).unwrap();
        let kp = assemble_bio(OperatorKind::KPrime, s, &b, &Medium::default()).unwrap();
        assert_eq!((kp.rows.kind, kp.cols.kind), (SpaceKind::P1, SpaceKind::P0));
        for i in 0..k.data.nrows() {
            for j in 0..k.data.ncols() {
                assert_eq!(k.data[(i, j)], kp.data[(j, i)]);
            }
        }
    }
}
