use super::{loglog_slope, Check, ProbeError, ProbeReport};
use crate::geometry::{self, Point};
use crate::mesh::{generate_builtin, BuiltinKind};
use crate::quadrature::MaterialParams;
use crate::signals::{PointSource, Pulse};
use crate::solver::{cq_march, cq_weights, default_lambda, CqGrid, CqScheme, DefaultImpedance, Discretization, TimeMarchResult, TransmissionProblem};
use crate::C64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// BDF2 march of a retarded point-source pulse on the split ball with unit materials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeStudyParams {
    pub level: u32,
    pub t_end: f64,
    pub steps: Vec<usize>,
    pub scheme: CqScheme,
    pub width: f64,
    /// Arrival of the data on the surface in coarse steps.
    pub onset_steps: usize,
    pub source: Point,
    pub probe: Point,
    pub sigma0: f64,
    pub min_order: f64,
    pub coercivity_floor: f64,
}

impl Default for TimeStudyParams {
    fn default() -> Self {
        Self {
            level: 2,
            t_end: 4.0,
            steps: vec![32, 64, 128],
            scheme: CqScheme::Bdf2,
            width: 3.0,
            onset_steps: 10,
            source: [0.0, 0.0, 2.0],
            probe: [0.0, 0.0, 0.2],
            sigma0: 1.0,
            min_order: 1.8,
            coercivity_floor: -1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CausalityParams {
    pub dt: f64,
    pub steps: usize,
    pub width: f64,
    pub onset_steps: usize,
    /// Steps checked before the onset.
    pub quiet_steps: usize,
    pub tolerance: f64,
}

impl Default for CausalityParams {
    fn default() -> Self {
        Self { dt: 0.1, steps: 64, width: 1.5, onset_steps: 10, quiet_steps: 8, tolerance: 1e-8 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqParams {
    pub level: u32,
    pub symbol_dt: f64,
    pub symbol_steps: usize,
    /// Contour radius for polynomial symbols, which have no aliasing error.
    pub symbol_lambda: f64,
    pub symbol_tolerance: f64,
    pub rectangle_tolerance: f64,
    pub causality: CausalityParams,
    pub study: TimeStudyParams,
}

impl Default for CqParams {
    fn default() -> Self {
        Self {
            level: 2,
            symbol_dt: 0.1,
            symbol_steps: 32,
            symbol_lambda: 0.9,
            symbol_tolerance: 1e-10,
            rectangle_tolerance: 1e-6,
            causality: CausalityParams::default(),
            study: TimeStudyParams::default(),
        }
    }
}

fn split_disc(level: u32) -> Result<Discretization, ProbeError> {
    let mesh = generate_builtin(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })?;
    Ok(Discretization::new(mesh, MaterialParams::default())?)
}

/// Pulse emitted at the source so that it reaches the unit sphere at `arrival`.
fn retarded_source(source: Point, width: f64, arrival: f64) -> PointSource {
    let travel = geometry::norm(&source) - 1.0;
    PointSource::new(source).with_pulse(Pulse { width, onset: arrival - travel })
}

fn march(disc: &Discretization, src: &PointSource, grid: CqGrid, sigma0: f64, probes: Vec<Point>) -> Result<TimeMarchResult, ProbeError> {
    let problem = TransmissionProblem { disc, data: src, transfer: &DefaultImpedance, sigma0, grid, probes };
    Ok(cq_march(&problem)?)
}

/// Runs the study and records `order.*` under `prefix` and the time-domain coercivity sums
/// under `coercivity_prefix`.
pub(crate) fn self_convergence(p: &TimeStudyParams, r: &mut ProbeReport, prefix: &str, coercivity_prefix: &str) -> Result<(), ProbeError> {
    r.param("study", p);
    if p.steps.len() < 3 {
        return Err(ProbeError::Parameters(format!("need >= 3 step sizes, got {}", p.steps.len())));
    }
    if p.steps.windows(2).any(|w| w[0] == 0 || w[1] % w[0] != 0) {
        return Err(ProbeError::Parameters("step counts must divide each other".into()));
    }
    let disc = split_disc(p.level)?;
    let src = retarded_source(p.source, p.width, p.onset_steps as f64 * p.t_end / p.steps[0] as f64);
    let mut runs = Vec::new();
    for &n in &p.steps {
        let grid = CqGrid::new(p.scheme, p.t_end / n as f64, n)?;
        let run = march(&disc, &src, grid, p.sigma0, vec![p.probe])?;
        r.measure(format!("{coercivity_prefix}n{n}.weighted_sum"), run.coercivity, Check::AtLeast { limit: p.coercivity_floor });
        r.measure(format!("{prefix}n{n}.imaginary_residue"), run.imaginary_residue, Check::Info);
        runs.push(run);
    }
    // Coarse-grid differences between successive refinements.
    let (mut dts, mut dtr, mut dpr) = (Vec::new(), Vec::new(), Vec::new());
    for w in runs.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let stride = b.grid.steps / a.grid.steps;
        let (mut d, mut top, mut f, mut ftop) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
        for n in 0..=a.grid.steps {
            let (x, y) = (&a.traces[n], &b.traces[n * stride]);
            d = d.max(x.iter().zip(y).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt());
            top = top.max(y.iter().map(|v| v * v).sum::<f64>().sqrt());
            f = f.max((a.fields[n][0] - b.fields[n * stride][0]).abs());
            ftop = ftop.max(b.fields[n * stride][0].abs());
        }
        r.measure(format!("{prefix}n{}.trace_difference", a.grid.steps), d / top, Check::Info);
        r.measure(format!("{prefix}n{}.probe_difference", a.grid.steps), f / ftop, Check::Info);
        dts.push(a.grid.dt);
        dtr.push(d / top);
        dpr.push(f / ftop);
    }
    r.measure(format!("{prefix}order.traces"), loglog_slope(&dts, &dtr), Check::AtLeast { limit: p.min_order });
    r.measure(format!("{prefix}order.probe"), loglog_slope(&dts, &dpr), Check::AtLeast { limit: p.min_order });
    Ok(())
}

/// Symbol tests, causality and BDF2 self-convergence of the CQ march, with the
/// time-domain coercivity sums of the convergence runs.
pub fn probe_cq(p: &CqParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("cq");
    r.param("level", p.level);
    r.param("symbol_lambda", p.symbol_lambda);
    r.param("causality", &p.causality);

    let (dt, n) = (p.symbol_dt, p.symbol_steps);
    let w = cq_weights(CqScheme::Bdf1, &|s| s, dt, n, p.symbol_lambda)?;
    let err = w.iter().enumerate().map(|(k, x)| {
        let exact = match k {
            0 => 1.0 / dt,
            1 => -1.0 / dt,
            _ => 0.0,
        };
        (x - C64::new(exact, 0.0)).norm() * dt
    });
    r.measure("a.differentiation_error", err.fold(0.0, f64::max), Check::AtMost { limit: p.symbol_tolerance });
    let w = cq_weights(CqScheme::Bdf2, &|_| C64::new(1.0, 0.0), dt, n, p.symbol_lambda)?;
    let err = w.iter().enumerate().map(|(k, x)| (x - C64::new((k == 0) as u8 as f64, 0.0)).norm());
    r.measure("a.identity_error", err.fold(0.0, f64::max), Check::AtMost { limit: p.symbol_tolerance });
    // F = 1/s with BDF1 against the rectangle rule Δt Σ_{j ≤ m} f_j for f(t) = sin t.
    let w = cq_weights(CqScheme::Bdf1, &|s| 1.0 / s, dt, n, default_lambda(n))?;
    let f: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).sin()).collect();
    let mut worst: f64 = 0.0;
    let mut rect = 0.0;
    for m in 0..=n {
        rect += dt * f[m];
        let cq: f64 = (0..=m).map(|k| w[k].re * f[m - k]).sum();
        worst = worst.max((cq - rect).abs());
    }
    r.measure("a.rectangle_rule_error", worst, Check::AtMost { limit: p.rectangle_tolerance });

    let c = &p.causality;
    let disc = split_disc(p.level)?;
    let src = retarded_source(p.study.source, c.width, c.onset_steps as f64 * c.dt);
    let run = march(&disc, &src, CqGrid::new(CqScheme::Bdf2, c.dt, c.steps)?, p.study.sigma0, Vec::new())?;
    let norms = run.trace_norms();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    let quiet = norms[..c.quiet_steps.min(norms.len())].iter().cloned().fold(0.0, f64::max);
    r.measure("b.pre_onset_over_peak", quiet / peak, Check::AtMost { limit: c.tolerance });

    let study = TimeStudyParams { level: p.level, ..p.study.clone() };
    self_convergence(&study, &mut r, "c.", "coercivity.")?;
    Ok(r)
}
