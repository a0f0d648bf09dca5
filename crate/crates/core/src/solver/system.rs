use super::{Discretization, FrequencyData, SolverError, TransferOperator};
use crate::calderon::{scale_traces, BlockCalderon, MultiTraceVector, ScaleDirection, ScalingPair};
use crate::linalg::{self, DenseLu};
use crate::traces::offset_traces;
use crate::C64;
use faer::Mat;

/// Pivot-ratio floor below which a frequency system counts as singular.
pub const RCOND_FLOOR: f64 = 1e-13;

/// Mixed single-trace system at one frequency.
pub struct AssembledSystem {
    pub s: C64,
    pub calderon: BlockCalderon,
    /// `⟨T̂(s) φ, ψ⟩_{Γ_I}` per boundary.
    pub transfer: Vec<Mat<C64>>,
    /// `Eᵀ (G_{A−½} + G_imp) E` on the single-trace DOFs.
    pub matrix: Mat<C64>,
}

impl AssembledSystem {
    /// `a^mix(ξ, ξ̄)`.
    pub fn mixed_form(&self, xi: &[C64]) -> C64 {
        linalg::dotc(xi, &linalg::matvec(&self.matrix, xi))
    }

    /// `⟨T̂ φ_D, ψ⟩` laid out in the Dirichlet slots of a multi-trace vector.
    pub fn transfer_apply(&self, x: &MultiTraceVector) -> MultiTraceVector {
        let mut out = MultiTraceVector::zeros(&x.layout);
        for (j, t) in self.transfer.iter().enumerate() {
            let y = linalg::matvec(t, x.dirichlet(j));
            out.dirichlet_mut(j).copy_from_slice(&y);
        }
        out
    }
}

/// Assembles the system for frequency `s`. The impedance condition reads
/// `γ_N u − s T̂(s) γ_D u = d_I` on `Γ_I`; for `T̂ = −a p` this is `a²∂_n u + a p ∂_t u = d_I`.
pub fn assemble_system(
    s: C64,
    disc: &Discretization,
    transfer: &dyn TransferOperator,
    sigma0: f64,
) -> Result<AssembledSystem, SolverError> {
    if !(s.re >= sigma0 / 10.0) {
        return Err(SolverError::BelowGuard { s, guard: sigma0 / 10.0 });
    }
    let calderon = BlockCalderon::assemble(s, &disc.boundaries, &disc.media, &disc.orders)?;
    let mut g = calderon.matrix(0.5);
    let layout = &disc.layout;
    let mut forms = Vec::with_capacity(disc.boundaries.len());
    for j in 0..disc.boundaries.len() {
        let rd = layout.dirichlet(j).start;
        let rn = layout.neumann(j).start;
        for (t, v, m) in disc.impedance_masses[j].triplets() {
            g[(rd + v, rn + t)] += C64::new(m, 0.0);
        }
        let t = transfer.form(s, disc, j);
        for a in 0..t.nrows() {
            for b in 0..t.ncols() {
                g[(rd + a, rd + b)] -= t[(a, b)];
            }
        }
        forms.push(t);
    }
    let matrix = disc.map.project(&g);
    Ok(AssembledSystem { s, calderon, transfer: forms, matrix })
}

/// Right-hand side `−Eᵀ G_{A−½} D(s) b̂ + Eᵀ l_imp` and the unscaled offset `b̂`.
pub fn assemble_rhs(
    sys: &AssembledSystem,
    disc: &Discretization,
    data: &FrequencyData,
) -> Result<(Vec<C64>, MultiTraceVector), SolverError> {
    let offset = offset_traces(&disc.mesh, &disc.boundaries, &disc.class, &data.g_d, &data.d_n)?;
    let scaled = scale_traces(sys.s, &offset, ScaleDirection::Forward);
    let mut r = sys.calderon.apply(&scaled, 0.5)?;
    r.data.iter_mut().for_each(|v| *v = -*v);
    let sc = ScalingPair::new(sys.s);
    for j in 0..disc.boundaries.len() {
        let mn = disc.impedance_masses[j].matvec_transpose_c(offset.neumann(j));
        let tb = linalg::matvec(&sys.transfer[j], offset.dirichlet(j));
        let slot = r.dirichlet_mut(j);
        for v in 0..slot.len() {
            slot[v] += sc.inv_sqrt * (data.d_i[j][v] - mn[v]) + sc.sqrt * tb[v];
        }
    }
    Ok((disc.map.apply_transpose(&r.data), offset))
}

#[derive(Clone, Debug)]
pub struct LaplaceSolveResult {
    pub s: C64,
    /// Single-trace coefficients.
    pub xi: Vec<C64>,
    /// `E ξ`, the scaled multi-trace of `u − u_off`.
    pub scaled: MultiTraceVector,
    /// `γ = D(s)⁻¹ E ξ + b̂`, unscaled total traces.
    pub traces: MultiTraceVector,
    pub offset: MultiTraceVector,
    /// `‖S ξ − r‖ / ‖r‖`.
    pub residual: f64,
    pub rcond: f64,
}

pub fn solve_frequency(
    sys: &AssembledSystem,
    disc: &Discretization,
    data: &FrequencyData,
) -> Result<LaplaceSolveResult, SolverError> {
    let (rhs, offset) = assemble_rhs(sys, disc, data)?;
    let lu = DenseLu::new(&sys.matrix, RCOND_FLOOR)?;
    let xi = lu.solve(&rhs);
    let res: Vec<C64> = linalg::matvec(&sys.matrix, &xi).iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let rn = linalg::norm2(&rhs);
    let residual = if rn > 0.0 { linalg::norm2(&res) / rn } else { linalg::norm2(&res) };
    let scaled = disc.map.apply(&xi);
    let traces = scale_traces(sys.s, &scaled, ScaleDirection::Inverse).add(&offset);
    Ok(LaplaceSolveResult { s: sys.s, xi, scaled, traces, offset, residual, rcond: lu.rcond })
}
