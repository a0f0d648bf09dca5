//! DOF classification, the single-trace map `E`, offset traces and discrete trace norms.
//!
//! Vertex rule: a vertex touching `Γ_D` is constrained to zero; otherwise a vertex touching
//! `Γ_J` is one shared DOF used by both subdomains; every other vertex is free. Triangles on
//! `Γ_N` are constrained, `Γ_J` triangles share one DOF with signs `+1` (side 1) and `−1`
//! (side 2), all others are free.

mod norms;

pub use norms::{discrete_norm, NormKind, TraceNorms};

use crate::calderon::{MultiTraceVector, TraceLayout};
use crate::linalg::LinalgError;
use crate::mesh::{Boundary, Part, PartSet, SurfaceMesh};
use crate::operators::{Csr, OperatorError};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::io::{self, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("classification does not match the mesh: {0}")]
    Inconsistent(String),
    #[error("{kind} data supplied on {what} {index}, which is not on {part}")]
    WrongPart { kind: &'static str, what: &'static str, index: usize, part: char },
    #[error("Dirichlet data must vanish at junction vertex {0} adjacent to the impedance part")]
    IncompatibleJunction(usize),
    #[error("input vector has the wrong length")]
    Length,
    #[error("input contains non-finite values")]
    NonFinite,
    #[error("sigma0 must be positive, got {0}")]
    BadSigma(f64),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexClass {
    Dirichlet,
    Neumann,
    Impedance,
    Jump,
    /// Where `Γ_J` meets `∂Ω`.
    Junction,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DofClassification {
    pub vertices: Vec<VertexClass>,
    pub vertex_parts: Vec<PartSet>,
    pub triangles: Vec<Part>,
}

impl DofClassification {
    /// Dirichlet DOF forced to zero.
    pub fn vertex_constrained(&self, v: usize) -> bool {
        self.vertex_parts[v].contains(Part::Dirichlet)
    }

    pub fn vertex_shared(&self, v: usize) -> bool {
        !self.vertex_constrained(v) && self.vertex_parts[v].contains(Part::Jump)
    }
}

pub fn classify_dofs(mesh: &SurfaceMesh) -> DofClassification {
    let vertex_parts = mesh.vertex_parts();
    let vertices = vertex_parts
        .iter()
        .map(|ps| {
            if ps.contains(Part::Jump) {
                if ps.touches_outer() {
                    VertexClass::Junction
                } else {
                    VertexClass::Jump
                }
            } else if ps.contains(Part::Dirichlet) {
                VertexClass::Dirichlet
            } else if ps.contains(Part::Impedance) {
                VertexClass::Impedance
            } else {
                VertexClass::Neumann
            }
        })
        .collect();
    DofClassification { vertices, vertex_parts, triangles: mesh.parts().to_vec() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DofKind {
    Dirichlet,
    Neumann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DofGroup {
    OnlyOne,
    OnlyTwo,
    Shared,
}

/// Provenance of one single-trace DOF.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SingleDof {
    pub kind: DofKind,
    pub group: DofGroup,
    /// Global vertex (Dirichlet) or triangle (Neumann) index.
    pub global: usize,
}

/// Prolongation `E` from single-trace DOFs to multi-trace DOFs.
#[derive(Clone, Debug)]
pub struct SingleTraceMap {
    pub layout: TraceLayout,
    pub dofs: Vec<SingleDof>,
    /// Per column, its nonzero entries `(multi-trace row, coefficient)`.
    pub columns: Vec<Vec<(usize, f64)>>,
}

fn local_maps(boundaries: &[Boundary]) -> (Vec<HashMap<usize, usize>>, Vec<HashMap<usize, usize>>) {
    let verts = boundaries.iter().map(|b| b.global_vertex.iter().enumerate().map(|(l, &g)| (g, l)).collect()).collect();
    let tris = boundaries.iter().map(|b| b.global_triangle.iter().enumerate().map(|(l, &g)| (g, l)).collect()).collect();
    (verts, tris)
}

pub fn build_single_trace_map(mesh: &SurfaceMesh, boundaries: &[Boundary], class: &DofClassification) -> Result<SingleTraceMap, TraceError> {
    if class.vertices.len() != mesh.num_vertices() || class.triangles.len() != mesh.num_triangles() || boundaries.is_empty() || boundaries.len() > 2 {
        return Err(TraceError::Inconsistent("sizes differ".into()));
    }
    let layout = TraceLayout::from_boundaries(boundaries);
    let (vmaps, tmaps) = local_maps(boundaries);
    let group_of = |present: &[Option<usize>]| -> Option<DofGroup> {
        match (present.first().copied().flatten(), present.get(1).copied().flatten()) {
            (Some(_), Some(_)) => Some(DofGroup::Shared),
            (Some(_), None) => Some(if boundaries[0].subdomain.number() == 1 { DofGroup::OnlyOne } else { DofGroup::OnlyTwo }),
            (None, Some(_)) => Some(DofGroup::OnlyTwo),
            (None, None) => None,
        }
    };

    let mut entries: Vec<(SingleDof, Vec<(usize, f64)>)> = Vec::new();
    for v in 0..mesh.num_vertices() {
        if class.vertex_constrained(v) {
            continue;
        }
        let present: Vec<Option<usize>> = vmaps.iter().map(|m| m.get(&v).copied()).collect();
        let Some(group) = group_of(&present) else { continue };
        if (group == DofGroup::Shared) != class.vertex_shared(v) {
            return Err(TraceError::Inconsistent(format!("vertex {v} sharing disagrees with its parts")));
        }
        let rows = present
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|l| (layout.dirichlet(j).start + l, 1.0)))
            .collect();
        entries.push((SingleDof { kind: DofKind::Dirichlet, group, global: v }, rows));
    }
    for t in 0..mesh.num_triangles() {
        let part = class.triangles[t];
        if part == Part::Neumann {
            continue;
        }
        let present: Vec<Option<usize>> = tmaps.iter().map(|m| m.get(&t).copied()).collect();
        let Some(group) = group_of(&present) else { continue };
        if (group == DofGroup::Shared) != (part == Part::Jump) {
            return Err(TraceError::Inconsistent(format!("triangle {t} sharing disagrees with its part")));
        }
        let rows = present
            .iter()
            .enumerate()
            .filter_map(|(j, l)| l.map(|l| (layout.neumann(j).start + l, if j == 0 { 1.0 } else { -1.0 })))
            .collect();
        entries.push((SingleDof { kind: DofKind::Neumann, group, global: t }, rows));
    }
    // Stable sort into (kind, group) blocks.
    entries.sort_by_key(|(d, _)| (d.kind == DofKind::Neumann, d.group));
    let (dofs, columns) = entries.into_iter().unzip();
    Ok(SingleTraceMap { layout, dofs, columns })
}

impl SingleTraceMap {
    pub fn num_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn apply(&self, xi: &[C64]) -> MultiTraceVector {
        assert_eq!(xi.len(), self.num_dofs());
        let mut out = MultiTraceVector::zeros(&self.layout);
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, e) in col {
                out.data[r] += xi[c] * e;
            }
        }
        out
    }

    pub fn apply_transpose(&self, x: &[C64]) -> Vec<C64> {
        assert_eq!(x.len(), self.layout.len());
        self.columns.iter().map(|col| col.iter().map(|&(r, e)| x[r] * e).sum()).collect()
    }

    /// `Eᵀ G E` for a dense multi-trace matrix `G`.
    pub fn project(&self, g: &faer::Mat<C64>) -> faer::Mat<C64> {
        let n = self.num_dofs();
        faer::Mat::from_fn(n, n, |a, b| {
            let mut acc = C64::default();
            for &(i, ei) in &self.columns[a] {
                for &(k, ek) in &self.columns[b] {
                    acc += g[(i, k)] * (ei * ek);
                }
            }
            acc
        })
    }

    pub fn to_csr(&self) -> Csr {
        let trip = self.columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, e)| (r, c, e))).collect();
        Csr::from_triplets(self.layout.len(), self.num_dofs(), trip)
    }

    /// Coordinate format `row col value`, one entry per line, 0-based, preceded by a
    /// `rows cols nnz` header.
    pub fn export_coo<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let csr = self.to_csr();
        writeln!(out, "{} {} {}", csr.nrows, csr.ncols, csr.nnz())?;
        for (r, c, v) in csr.triplets() {
            writeln!(out, "{r} {c} {v}")?;
        }
        Ok(())
    }
}

/// Multi-trace vector of the offset function: Dirichlet block from `g_d` (global vertex
/// samples, nonzero only at vertices touching `Γ_D`), Neumann block from `d_n` (global
/// triangle values, nonzero only on `Γ_N`). Unscaled.
pub fn offset_traces(
    mesh: &SurfaceMesh,
    boundaries: &[Boundary],
    class: &DofClassification,
    g_d: &[C64],
    d_n: &[C64],
) -> Result<MultiTraceVector, TraceError> {
    if g_d.len() != mesh.num_vertices() || d_n.len() != mesh.num_triangles() {
        return Err(TraceError::Length);
    }
    let zero = C64::default();
    for (v, val) in g_d.iter().enumerate() {
        if *val == zero {
            continue;
        }
        if !class.vertex_parts[v].contains(Part::Dirichlet) {
            return Err(TraceError::WrongPart { kind: "Dirichlet", what: "vertex", index: v, part: 'D' });
        }
        if class.vertices[v] == VertexClass::Junction && class.vertex_parts[v].contains(Part::Impedance) {
            return Err(TraceError::IncompatibleJunction(v));
        }
    }
    for (t, val) in d_n.iter().enumerate() {
        if *val != zero && class.triangles[t] != Part::Neumann {
            return Err(TraceError::WrongPart { kind: "Neumann", what: "triangle", index: t, part: 'N' });
        }
    }
    let layout = TraceLayout::from_boundaries(boundaries);
    let mut out = MultiTraceVector::zeros(&layout);
    for (j, b) in boundaries.iter().enumerate() {
        for (l, &g) in b.global_vertex.iter().enumerate() {
            out.dirichlet_mut(j)[l] = g_d[g];
        }
        for (l, &g) in b.global_triangle.iter().enumerate() {
            out.neumann_mut(j)[l] = d_n[g];
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calderon::{pairing, PairingSign};
    use crate::mesh::{generate_builtin, BuiltinKind, Subdomain};
    use crate::operators::assemble_mass;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn split(level: u32) -> SurfaceMesh {
        generate_builtin(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 }).unwrap()
    }

    fn bounds(m: &SurfaceMesh) -> Vec<Boundary> {
        m.subdomains().into_iter().map(|s| m.boundary(s)).collect()
    }

    #[test]
    fn classification_examples() {
        let m = split(1);
        let c = classify_dofs(&m);
        let top = m.vertices().iter().position(|p| p[2] > 0.999).unwrap();
        assert_eq!(c.vertices[top], VertexClass::Dirichlet);
        let rim = m.vertices().iter().position(|p| p[2].abs() < 1e-12 && (p[0].hypot(p[1]) - 1.0).abs() < 1e-12).unwrap();
        assert_eq!(c.vertices[rim], VertexClass::Junction);
        assert!(c.vertex_shared(rim));
        let ico = generate_builtin(BuiltinKind::Icosphere { level: 1 }).unwrap();
        assert!(classify_dofs(&ico).vertices.iter().all(|v| *v == VertexClass::Dirichlet));
    }

    #[test]
    fn classification_is_refinement_consistent() {
        let m = split(1);
        let r = m.refine();
        let (c0, c1) = (classify_dofs(&m), classify_dofs(&r));
        for v in 0..m.num_vertices() {
            assert_eq!(c0.vertices[v], c1.vertices[v]);
        }
    }

    #[test]
    fn single_trace_map_structure() {
        let m = split(1);
        let b = bounds(&m);
        let c = classify_dofs(&m);
        let e = build_single_trace_map(&m, &b, &c).unwrap();
        let free_vertices = (0..m.num_vertices()).filter(|&v| !c.vertex_constrained(v)).count();
        let free_tris = m.parts().iter().filter(|p| **p != Part::Neumann).count();
        assert_eq!(e.num_dofs(), free_vertices + free_tris);
        // Column order: kind, then group.
        let keys: Vec<_> = e.dofs.iter().map(|d| (d.kind == DofKind::Neumann, d.group)).collect();
        assert!(keys.windows(2).all(|w| w[0] <= w[1]));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xi: Vec<C64> = (0..e.num_dofs()).map(|_| C64::new(rng.gen(), rng.gen())).collect();
        let x = e.apply(&xi);
        let (vm, tm) = local_maps(&b);
        for v in 0..m.num_vertices() {
            if let (Some(&l1), Some(&l2)) = (vm[0].get(&v), vm[1].get(&v)) {
                assert_eq!(x.dirichlet(0)[l1], x.dirichlet(1)[l2]);
            }
        }
        for t in 0..m.num_triangles() {
            if let (Some(&l1), Some(&l2)) = (tm[0].get(&t), tm[1].get(&t)) {
                assert_eq!(x.neumann(0)[l1], -x.neumann(1)[l2]);
            }
        }
        // EᵀE is diagonal with 1 or 2.
        for (col, d) in e.columns.iter().zip(&e.dofs) {
            let diag: f64 = col.iter().map(|(_, v)| v * v).sum();
            assert_eq!(diag, if d.group == DofGroup::Shared { 2.0 } else { 1.0 });
        }
        let mut buf = Vec::new();
        e.export_coo(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + e.columns.iter().map(Vec::len).sum::<usize>());
    }

    #[test]
    fn pairing_reduces_to_impedance_part() {
        let m = split(2);
        let b = bounds(&m);
        let c = classify_dofs(&m);
        let e = build_single_trace_map(&m, &b, &c).unwrap();
        let full: Vec<Csr> = b.iter().map(|b| assemble_mass(b, None)).collect();
        let imp: Vec<Csr> = b.iter().map(|b| assemble_mass(b, Some(Part::Impedance))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..5 {
            let xi: Vec<C64> = (0..e.num_dofs()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let eta: Vec<C64> = (0..e.num_dofs()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let (x, y) = (e.apply(&xi), e.apply(&eta));
            let a = pairing(PairingSign::Plus, &x, &y, &full).unwrap();
            let i = pairing(PairingSign::Plus, &x, &y, &imp).unwrap();
            assert!((a - i).norm() <= 1e-12 * a.norm().max(1.0), "{a} vs {i}");
        }
    }

    #[test]
    fn offset_trace_rules() {
        let m = split(1);
        let b = bounds(&m);
        let c = classify_dofs(&m);
        let zero_v = vec![C64::default(); m.num_vertices()];
        let zero_t = vec![C64::default(); m.num_triangles()];
        let z = offset_traces(&m, &b, &c, &zero_v, &zero_t).unwrap();
        assert!(z.data.iter().all(|v| *v == C64::default()));
        let d_n: Vec<C64> = m.parts().iter().map(|p| if *p == Part::Neumann { C64::new(1.0, 0.0) } else { C64::default() }).collect();
        let off = offset_traces(&m, &b, &c, &zero_v, &d_n).unwrap();
        let total: f64 = (0..b.len())
            .map(|j| off.neumann(j).iter().zip(&b[j].panels).map(|(v, p)| v.re * p.area).sum::<f64>())
            .sum();
        assert!((total - m.part_area(Part::Neumann)).abs() < 1e-12);
        let mut bad = zero_t.clone();
        bad[m.parts().iter().position(|p| *p == Part::Jump).unwrap()] = C64::new(1.0, 0.0);
        assert!(matches!(offset_traces(&m, &b, &c, &zero_v, &bad), Err(TraceError::WrongPart { .. })));
        let mut g = zero_v.clone();
        let bottom = m.vertices().iter().position(|p| p[2] < -0.999).unwrap();
        g[bottom] = C64::new(1.0, 0.0);
        assert!(matches!(offset_traces(&m, &b, &c, &g, &zero_t), Err(TraceError::WrongPart { .. })));
        let _ = Subdomain::One;
    }

    #[test]
    fn norms_are_positive_and_homogeneous() {
        let m = generate_builtin(BuiltinKind::Icosphere { level: 1 }).unwrap();
        let b = bounds(&m);
        let n = TraceNorms::assemble(&b, 1.0, &crate::quadrature::QuadratureOrders::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let phi: Vec<C64> = (0..b[0].num_triangles()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            let psi: Vec<C64> = (0..b[0].num_vertices()).map(|_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
            assert!(n.minus_half(0, &phi) > 0.0 && n.half(0, &psi) > 0.0);
            let two: Vec<C64> = phi.iter().map(|v| v * 2.0).collect();
            assert!((n.minus_half(0, &two) - 2.0 * n.minus_half(0, &phi)).abs() < 1e-13);
        }
        assert_eq!(n.half(0, &vec![C64::default(); b[0].num_vertices()]), 0.0);
        assert!(matches!(n.norm(NormKind::Half, 0, &[C64::new(f64::NAN, 0.0)]), Err(TraceError::NonFinite)));
    }
}
