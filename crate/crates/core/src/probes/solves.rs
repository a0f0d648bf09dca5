use super::{loglog_slope, Check, ProbeError, ProbeReport, TimeStudyParams};
use crate::calderon::MultiTraceVector;
use crate::geometry::{self, Point};
use crate::mesh::{generate_builtin, BuiltinKind, Part, SurfaceMesh};
use crate::quadrature::{MaterialParams, Medium};
use crate::signals::{BoundaryData, Eval, PointSource};
use crate::solver::{assemble_system, reconstruct_field, sample_traces, solve_frequency, DefaultImpedance, Discretization, FrequencyData, LaplaceSolveResult};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn split_ball(level: u32) -> Result<SurfaceMesh, ProbeError> {
    Ok(generate_builtin(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })?)
}

/// Area-weighted relative L² errors `(dirichlet, neumann)` over all boundaries.
pub fn relative_trace_errors(disc: &Discretization, got: &MultiTraceVector, exact: &MultiTraceVector) -> (f64, f64) {
    let (mut ed, mut nd, mut en, mut nn) = (0.0, 0.0, 0.0, 0.0);
    for (j, b) in disc.boundaries.iter().enumerate() {
        for (l, p) in b.panels.iter().enumerate() {
            en += p.area * (got.neumann(j)[l] - exact.neumann(j)[l]).norm_sqr();
            nn += p.area * exact.neumann(j)[l].norm_sqr();
            for &v in &b.triangles[l] {
                ed += p.area / 3.0 * (got.dirichlet(j)[v] - exact.dirichlet(j)[v]).norm_sqr();
                nd += p.area / 3.0 * exact.dirichlet(j)[v].norm_sqr();
            }
        }
    }
    ((ed / nd).sqrt(), (en / nn).sqrt())
}

fn solve_with(disc: &Discretization, data: &dyn BoundaryData, s: C64) -> Result<LaplaceSolveResult, ProbeError> {
    let sys = assemble_system(s, disc, &DefaultImpedance, 1.0)?;
    Ok(solve_frequency(&sys, disc, &FrequencyData::sample(disc, data, Eval::Laplace(s)))?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FictitiousParams {
    pub level: u32,
    pub s: C64,
    pub medium: Medium,
    pub source: Point,
    pub tolerance: f64,
    /// Half distance between the mirrored probes across the interface.
    pub offset: f64,
    pub field_tolerance: f64,
}

impl Default for FictitiousParams {
    fn default() -> Self {
        Self {
            level: 3,
            s: C64::new(1.0, 2.0),
            medium: Medium::new(1.2, 0.9).expect("valid medium"),
            source: [0.0, 0.0, 2.0],
            tolerance: 1e-6,
            offset: 0.005,
            field_tolerance: 0.05,
        }
    }
}

/// Outer traces of the two-domain solve against the single-domain solve on the outer surface,
/// plus mirrored field probes across the interface.
pub fn probe_fictitious_interface(p: &FictitiousParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("fictitious_interface");
    r.param("level", p.level);
    r.param("s", p.s);
    r.param("medium", p.medium);
    r.param("source", p.source);
    let materials = MaterialParams::uniform(p.medium);
    let src = PointSource::new(p.source);
    let mesh = split_ball(p.level)?;
    let outer = mesh.outer_surface()?;
    let split = Discretization::new(mesh, materials)?;
    let single = Discretization::new(outer, materials)?;
    let a = solve_with(&split, &src, p.s)?;
    let b = solve_with(&single, &src, p.s)?;

    // Outer triangle k of the single mesh is the k-th non-interface triangle of the split mesh.
    let parts = split.mesh.parts();
    let mut rank = vec![usize::MAX; parts.len()];
    let mut k = 0;
    for (t, part) in parts.iter().enumerate() {
        if *part != Part::Jump {
            rank[t] = k;
            k += 1;
        }
    }
    let sb = &single.boundaries[0];
    let mut local = vec![usize::MAX; sb.triangles.len()];
    for (l, &g) in sb.global_triangle.iter().enumerate() {
        local[g] = l;
    }
    let (mut ed, mut nd, mut en, mut nn) = (0.0, 0.0, 0.0, 0.0);
    for (j, bj) in split.boundaries.iter().enumerate() {
        for (l, panel) in bj.panels.iter().enumerate() {
            let g = bj.global_triangle[l];
            if rank[g] == usize::MAX {
                continue;
            }
            let m = local[rank[g]];
            en += panel.area * (a.traces.neumann(j)[l] - b.traces.neumann(0)[m]).norm_sqr();
            nn += panel.area * b.traces.neumann(0)[m].norm_sqr();
            for &v in &bj.triangles[l] {
                let x = bj.vertices[v];
                let w = sb.triangles[m]
                    .iter()
                    .copied()
                    .min_by(|&u, &w| geometry::dist(&sb.vertices[u], &x).total_cmp(&geometry::dist(&sb.vertices[w], &x)))
                    .expect("three corners");
                ed += panel.area / 3.0 * (a.traces.dirichlet(j)[v] - b.traces.dirichlet(0)[w]).norm_sqr();
                nd += panel.area / 3.0 * b.traces.dirichlet(0)[w].norm_sqr();
            }
        }
    }
    let (ed, en) = ((ed / nd).sqrt(), (en / nn).sqrt());
    r.measure("trace.dirichlet_difference", ed, Check::AtMost { limit: p.tolerance });
    r.measure("trace.neumann_difference", en, Check::AtMost { limit: p.tolerance });
    let (xd, xn) = relative_trace_errors(&single, &b.traces, &sample_traces(&single, &src, p.s));
    r.measure("single_domain.dirichlet_error", xd, Check::Info);
    r.measure("single_domain.neumann_error", xn, Check::Info);
    r.measure("trace.neumann_difference_over_error", en / xn, Check::Info);

    // Mirrored probes z = ±offset above and below the interface disk.
    let mut pts = Vec::new();
    for &rho in &[0.2, 0.5] {
        for q in 0..4 {
            let phi = q as f64 * PI / 2.0 + 0.3;
            for sign in [1.0, -1.0] {
                pts.push([rho * phi.cos(), rho * phi.sin(), sign * p.offset]);
            }
        }
    }
    let u = reconstruct_field(&split, p.s, &a.traces, &pts)?;
    let (mut num, mut den) = (0.0, 0.0);
    for pair in u.chunks(2) {
        num += (pair[0] - pair[1]).norm_sqr();
        den += 0.5 * (pair[0].norm_sqr() + pair[1].norm_sqr());
    }
    r.measure("field.mirror_difference", (num / den).sqrt(), Check::AtMost { limit: p.field_tolerance });
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedParams {
    pub split_levels: Vec<u32>,
    pub s: C64,
    pub medium: Medium,
    pub source: Point,
    pub tolerance: f64,
    pub field_points: Vec<Point>,
}

impl Default for ManufacturedParams {
    fn default() -> Self {
        Self {
            split_levels: vec![2, 3],
            s: C64::new(1.0, 1.0),
            medium: Medium::new(1.2, 0.9).expect("valid medium"),
            source: [0.0, 0.0, 2.0],
            tolerance: 0.05,
            field_points: vec![[0.0, 0.0, 0.3], [0.0, 0.0, -0.3], [0.3, 0.2, 0.4], [-0.2, 0.3, -0.5]],
        }
    }
}

/// Point-source traces recovered by the mixed solve on the split ball with consistent data.
pub fn probe_manufactured(p: &ManufacturedParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("manufactured");
    r.param("split_levels", &p.split_levels);
    r.param("s", p.s);
    r.param("medium", p.medium);
    r.param("source", p.source);
    if p.split_levels.is_empty() {
        return Err(ProbeError::Parameters("manufactured probe needs at least one level".into()));
    }
    let src = PointSource::new(p.source);
    let last = p.split_levels.len() - 1;
    let mut errors = Vec::new();
    for (i, &level) in p.split_levels.iter().enumerate() {
        let disc = Discretization::new(split_ball(level)?, MaterialParams::uniform(p.medium))?;
        let res = solve_with(&disc, &src, p.s)?;
        let (ed, en) = relative_trace_errors(&disc, &res.traces, &sample_traces(&disc, &src, p.s));
        let check = if i == last { Check::AtMost { limit: p.tolerance } } else { Check::Info };
        r.measure(format!("level{level}.dirichlet_error"), ed, check);
        r.measure(format!("level{level}.neumann_error"), en, check);
        r.measure(format!("level{level}.residual"), res.residual, Check::Info);
        if i == last && !p.field_points.is_empty() {
            let u = reconstruct_field(&disc, p.s, &res.traces, &p.field_points)?;
            let (mut num, mut den) = (0.0, 0.0);
            for (x, v) in p.field_points.iter().zip(&u) {
                let exact = src.dirichlet(Eval::Laplace(p.s), x, &p.medium);
                num += (v - exact).norm_sqr();
                den += exact.norm_sqr();
            }
            r.measure(format!("level{level}.field_error"), (num / den).sqrt(), Check::AtMost { limit: p.tolerance });
        }
        errors.push((ed, en));
    }
    for (i, w) in errors.windows(2).enumerate() {
        let shrink = w[1].0 < w[0].0 && w[1].1 < w[0].1;
        r.measure(format!("refinement{}.errors_decrease", i + 1), shrink as u8 as f64, Check::AtLeast { limit: 1.0 });
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StudyKind {
    /// Sound-soft icosphere with point-source data, errors against the exact traces.
    FrequencyManufactured { levels: Vec<u32>, s: C64, source: Point },
    /// BDF2 self-convergence of a CQ march.
    TimeCq(TimeStudyParams),
}

pub fn convergence_study(kind: &StudyKind) -> Result<ProbeReport, ProbeError> {
    match kind {
        StudyKind::FrequencyManufactured { levels, s, source } => {
            if levels.len() < 3 {
                return Err(ProbeError::Parameters(format!("convergence study: need >= 3 levels, got {}", levels.len())));
            }
            let mut r = ProbeReport::new("convergence_frequency_manufactured");
            r.param("levels", levels);
            r.param("s", s);
            r.param("source", source);
            let src = PointSource::new(*source);
            let (mut hs, mut es) = (Vec::new(), Vec::new());
            for &level in levels {
                let disc = Discretization::new(generate_builtin(BuiltinKind::Icosphere { level })?, MaterialParams::default())?;
                let res = solve_with(&disc, &src, *s)?;
                let (_, en) = relative_trace_errors(&disc, &res.traces, &sample_traces(&disc, &src, *s));
                r.measure(format!("level{level}.neumann_error"), en, Check::Info);
                hs.push(disc.boundaries[0].mesh_size());
                es.push(en);
            }
            let decreasing = es.windows(2).all(|w| w[1] < w[0]);
            r.measure("errors_strictly_decrease", decreasing as u8 as f64, Check::AtLeast { limit: 1.0 });
            r.measure("fitted_order_in_h", loglog_slope(&hs, &es), Check::Info);
            Ok(r)
        }
        StudyKind::TimeCq(params) => {
            if params.steps.len() < 3 {
                return Err(ProbeError::Parameters(format!("convergence study: need >= 3 step sizes, got {}", params.steps.len())));
            }
            let mut r = ProbeReport::new("convergence_time_cq");
            super::time::self_convergence(params, &mut r, "", "coercivity.")?;
            Ok(r)
        }
    }
}
