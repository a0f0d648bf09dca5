//! Mixed single-trace formulation in the Laplace domain and its convolution-quadrature
//! time march.

mod cq;
mod field;
mod impedance;
mod system;

pub use cq::{cq_march, cq_weights, cq_weights_vec, default_lambda, CqError, CqGrid, CqScheme, TimeMarchResult, TransmissionProblem};
pub use field::{reconstruct_field, reconstruct_from_side};
pub use impedance::{check_dissipativity, impedance_default, DefaultImpedance, DissipativityReport, TransferOperator};
pub use system::{assemble_rhs, assemble_system, solve_frequency, AssembledSystem, LaplaceSolveResult};

use crate::calderon::{CalderonError, TraceLayout};
use crate::linalg::LinalgError;
use crate::mesh::{Boundary, Membership, MeshError, Part, Subdomain, SurfaceMesh};
use crate::operators::{assemble_mass, assemble_p1_mass, Csr, OperatorError, PotentialError};
use crate::quadrature::{triangle_rule, MaterialParams, Medium, QuadratureOrders};
use crate::signals::{BoundaryData, Eval};
use crate::traces::{build_single_trace_map, classify_dofs, DofClassification, SingleTraceMap, TraceError};
use crate::C64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Calderon(#[from] CalderonError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Cq(#[from] CqError),
    #[error("frequency {s} has Re s below the guard sigma0/10 = {guard}")]
    BelowGuard { s: C64, guard: f64 },
    #[error("frequency solve {index} at s = {s} failed: {source}")]
    Frequency { index: usize, s: C64, source: Box<SolverError> },
    #[error("transfer operator is not dissipative at s = {s}: Re<T phi, conj phi> = {value:.3e}")]
    NotDissipative { s: C64, value: f64 },
    #[error("point {0} is not inside any subdomain")]
    PointOutside(usize),
}

/// Mesh, boundaries, DOF maps and mass matrices shared by every frequency.
pub struct Discretization {
    pub mesh: SurfaceMesh,
    pub boundaries: Vec<Boundary>,
    pub class: DofClassification,
    pub map: SingleTraceMap,
    pub layout: TraceLayout,
    pub materials: MaterialParams,
    pub media: Vec<Medium>,
    pub orders: QuadratureOrders,
    /// Mixed P0 × P1 mass per boundary.
    pub masses: Vec<Csr>,
    /// Mixed mass restricted to `Γ_I`.
    pub impedance_masses: Vec<Csr>,
    /// P1 mass restricted to `Γ_I`.
    pub impedance_p1: Vec<Csr>,
}

impl Discretization {
    pub fn new(mesh: SurfaceMesh, materials: MaterialParams) -> Result<Self, SolverError> {
        let boundaries: Vec<Boundary> = mesh.subdomains().into_iter().map(|s| mesh.boundary(s)).collect();
        let class = classify_dofs(&mesh);
        let map = build_single_trace_map(&mesh, &boundaries, &class)?;
        let media = boundaries.iter().map(|b| materials.medium(b.subdomain)).collect();
        Ok(Self {
            layout: TraceLayout::from_boundaries(&boundaries),
            masses: boundaries.iter().map(|b| assemble_mass(b, None)).collect(),
            impedance_masses: boundaries.iter().map(|b| assemble_mass(b, Some(Part::Impedance))).collect(),
            impedance_p1: boundaries.iter().map(|b| assemble_p1_mass(b, Some(Part::Impedance))).collect(),
            mesh,
            boundaries,
            class,
            map,
            materials,
            media,
            orders: QuadratureOrders::default(),
        })
    }

    /// Subdomain carrying an outer (non-`J`) triangle.
    pub fn owner(&self, t: usize) -> Subdomain {
        match self.mesh.membership()[t] {
            Membership::Two => Subdomain::Two,
            _ => Subdomain::One,
        }
    }
}

/// Boundary data reduced to DOFs: Dirichlet vertex samples on `Γ_D`, Neumann triangle means on
/// `Γ_N`, and per boundary the P1 load `∫_{Γ_I} d_I λ_v`.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyData {
    pub g_d: Vec<C64>,
    pub d_n: Vec<C64>,
    pub d_i: Vec<Vec<C64>>,
}

const DATA_ORDER: usize = 4;

impl FrequencyData {
    pub fn zeros(disc: &Discretization) -> Self {
        Self {
            g_d: vec![C64::default(); disc.mesh.num_vertices()],
            d_n: vec![C64::default(); disc.mesh.num_triangles()],
            d_i: disc.boundaries.iter().map(|b| vec![C64::default(); b.num_vertices()]).collect(),
        }
    }

    pub fn sample(disc: &Discretization, data: &dyn BoundaryData, at: Eval) -> Self {
        let mut out = Self::zeros(disc);
        let mesh = &disc.mesh;
        for (v, x) in mesh.vertices().iter().enumerate() {
            if disc.class.vertex_constrained(v) {
                // Outer vertices belong to a single subdomain unless they touch the interface.
                let sub = mesh
                    .triangles()
                    .iter()
                    .enumerate()
                    .find(|(t, tri)| tri.contains(&v) && mesh.parts()[*t] == Part::Dirichlet)
                    .map(|(t, _)| disc.owner(t))
                    .unwrap_or(Subdomain::One);
                out.g_d[v] = data.dirichlet(at, x, &disc.materials.medium(sub));
            }
        }
        let rule = triangle_rule(DATA_ORDER);
        for t in 0..mesh.num_triangles() {
            if mesh.parts()[t] != Part::Neumann {
                continue;
            }
            let p = mesh.triangle_points(t);
            let n = mesh.triangle_normal(t);
            let m = disc.materials.medium(disc.owner(t));
            let mean: C64 = rule
                .bary
                .iter()
                .zip(&rule.weights)
                .map(|(l, w)| data.neumann(at, &crate::geometry::barycentric(&p, *l), &n, &m) * (2.0 * w))
                .sum();
            out.d_n[t] = mean;
        }
        for (j, b) in disc.boundaries.iter().enumerate() {
            let m = disc.media[j];
            for (l, tri) in b.triangles.iter().enumerate() {
                if b.parts[l] != Part::Impedance {
                    continue;
                }
                let panel = &b.panels[l];
                for (bary, w) in rule.bary.iter().zip(&rule.weights) {
                    let f = data.impedance(at, &panel.point(*bary), &panel.normal, &m) * (2.0 * panel.area * w);
                    for k in 0..3 {
                        out.d_i[j][tri[k]] += f * bary[k];
                    }
                }
            }
        }
        out
    }

    pub fn flatten(&self) -> Vec<C64> {
        let mut v = self.g_d.clone();
        v.extend_from_slice(&self.d_n);
        for d in &self.d_i {
            v.extend_from_slice(d);
        }
        v
    }

    pub fn unflatten(disc: &Discretization, v: &[C64]) -> Self {
        let mut out = Self::zeros(disc);
        let nv = out.g_d.len();
        let nt = out.d_n.len();
        out.g_d.copy_from_slice(&v[..nv]);
        out.d_n.copy_from_slice(&v[nv..nv + nt]);
        let mut o = nv + nt;
        for d in out.d_i.iter_mut() {
            let n = d.len();
            d.copy_from_slice(&v[o..o + n]);
            o += n;
        }
        out
    }
}

/// Interpolated Dirichlet and projected Neumann traces of `data` on every boundary
/// (Dirichlet at vertices, Neumann as triangle means), unscaled.
pub fn sample_traces(disc: &Discretization, data: &dyn BoundaryData, s: C64) -> crate::calderon::MultiTraceVector {
    let mut out = crate::calderon::MultiTraceVector::zeros(&disc.layout);
    let rule = triangle_rule(DATA_ORDER);
    let at = Eval::Laplace(s);
    for (j, b) in disc.boundaries.iter().enumerate() {
        let m = disc.media[j];
        for (l, x) in b.vertices.iter().enumerate() {
            out.dirichlet_mut(j)[l] = data.dirichlet(at, x, &m);
        }
        for (l, panel) in b.panels.iter().enumerate() {
            out.neumann_mut(j)[l] = rule
                .bary
                .iter()
                .zip(&rule.weights)
                .map(|(bary, w)| data.neumann(at, &panel.point(*bary), &panel.normal, &m) * (2.0 * w))
                .sum();
        }
    }
    out
}
