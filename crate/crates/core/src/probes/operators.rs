use super::{random_vector, Check, ProbeError, ProbeReport};
use crate::calderon::{calderon_residual, scale_traces, BlockCalderon, MultiTraceVector, ScaleDirection};
use crate::geometry::{self, Point};
use crate::mesh::{generate_builtin, validate_mesh, BuiltinKind, Subdomain};
use crate::operators::{assemble_operators, eval_potential_gradient, PotentialKind, Wanted};
use crate::quadrature::{MaterialParams, Medium, QuadratureOrders};
use crate::signals::PointSource;
use crate::solver::{sample_traces, Discretization};
use crate::traces::TraceNorms;
use crate::C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

pub fn probe_mesh_validation(max_level: u32) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("mesh_validation");
    r.param("max_level", max_level);
    let mut last_area = 0.0;
    let mut monotone = true;
    for level in 0..=max_level {
        let ico = generate_builtin(BuiltinKind::Icosphere { level })?;
        let rep = validate_mesh(&ico);
        r.measure(format!("icosphere:{level}.valid"), rep.all_passed() as u8 as f64, Check::AtLeast { limit: 1.0 });
        let area = ico.total_area();
        monotone &= area > last_area && area < 4.0 * PI;
        last_area = area;
        if level >= 1 {
            let split = generate_builtin(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })?;
            let rep = validate_mesh(&split);
            r.measure(format!("split_ball:{level}.valid"), rep.all_passed() as u8 as f64, Check::AtLeast { limit: 1.0 });
            r.measure(format!("split_ball:{level}.area_partition_error"), rep.area_partition_error, Check::AtMost { limit: 1e-12 });
        }
    }
    r.measure("icosphere.area_monotone_below_4pi", monotone as u8 as f64, Check::AtLeast { limit: 1.0 });
    r.measure("icosphere.area_gap", 4.0 * PI - last_area, Check::Info);
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JumpParams {
    pub levels: Vec<u32>,
    pub s: C64,
    pub samples: usize,
    /// Surface points (triangle centroids) per level.
    pub points: usize,
    /// Probe offset as a fraction of the mesh size.
    pub offset: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for JumpParams {
    fn default() -> Self {
        Self { levels: vec![3, 4], s: C64::new(1.0, 2.0), samples: 10, points: 60, offset: 0.1, tolerance: 0.05, seed: super::DEFAULT_SEED }
    }
}

/// Random cubic polynomial in the coordinates with complex normal coefficients.
fn smooth_density<R: Rng>(rng: &mut R, at: &[Point]) -> Vec<C64> {
    let mut exps = Vec::new();
    for i in 0..=3 {
        for j in 0..=3 - i {
            for k in 0..=3 - i - j {
                exps.push([i as i32, j as i32, k as i32]);
            }
        }
    }
    let coef = random_vector(rng, exps.len());
    at.iter()
        .map(|x| exps.iter().zip(&coef).map(|(e, c)| c * (x[0].powi(e[0]) * x[1].powi(e[1]) * x[2].powi(e[2]))).sum())
        .collect()
}

fn rel(num: f64, den: f64) -> f64 {
    (num / den).sqrt()
}

/// Jump relations `[Ŝφ]_D = 0`, `[Ŝφ]_N = −φ`, `[D̂ψ]_D = ψ`, `[D̂ψ]_N = 0` with
/// `[u] = u(x + εn) − u(x − εn)` at triangle centroids.
pub fn probe_jumps(p: &JumpParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("jumps");
    r.param("levels", &p.levels);
    r.param("s", p.s);
    r.param("samples", p.samples);
    r.param("points", p.points);
    r.param("offset_over_h", p.offset);
    r.param("seed", p.seed);
    if p.levels.is_empty() {
        return Err(ProbeError::Parameters("jump probe needs at least one level".into()));
    }
    let m = Medium::default();
    let mut per_level: Vec<[f64; 4]> = Vec::new();
    for &level in &p.levels {
        let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ level as u64);
        let b = generate_builtin(BuiltinKind::Icosphere { level })?.boundary(Subdomain::One);
        let eps = p.offset * b.mesh_size();
        let picks = rand::seq::index::sample(&mut rng, b.num_triangles(), p.points.min(b.num_triangles())).into_vec();
        let mut pts = Vec::with_capacity(2 * picks.len());
        for &t in &picks {
            let c = b.panels[t].centroid;
            let n = b.panels[t].normal;
            pts.push(geometry::add(&c, &geometry::scale(&n, eps)));
            pts.push(geometry::sub(&c, &geometry::scale(&n, eps)));
        }
        let centroids: Vec<Point> = b.panels.iter().map(|q| q.centroid).collect();
        let mut worst = [0.0f64; 4];
        for _ in 0..p.samples {
            let phi = smooth_density(&mut rng, &centroids);
            let psi = smooth_density(&mut rng, &b.vertices);
            let sv = eval_potential_gradient(PotentialKind::Single, p.s, &b, &m, &phi, &pts)?;
            let dv = eval_potential_gradient(PotentialKind::Double, p.s, &b, &m, &psi, &pts)?;
            let mut acc = [0.0f64; 8];
            for (i, &t) in picks.iter().enumerate() {
                let n = b.panels[t].normal;
                let cn = |g: &[C64; 3]| (g[0] * n[0] + g[1] * n[1] + g[2] * n[2]) * (m.a * m.a);
                let (sp, sm) = (&sv[2 * i], &sv[2 * i + 1]);
                let (dp, dm) = (&dv[2 * i], &dv[2 * i + 1]);
                let psi_c: C64 = b.triangles[t].iter().map(|&v| psi[v]).sum::<C64>() / 3.0;
                acc[0] += (sp.0 - sm.0).norm_sqr();
                acc[1] += 0.5 * (sp.0.norm_sqr() + sm.0.norm_sqr());
                acc[2] += (cn(&sp.1) - cn(&sm.1) + phi[t]).norm_sqr();
                acc[3] += phi[t].norm_sqr();
                acc[4] += (dp.0 - dm.0 - psi_c).norm_sqr();
                acc[5] += psi_c.norm_sqr();
                acc[6] += (cn(&dp.1) - cn(&dm.1)).norm_sqr();
                acc[7] += 0.5 * (cn(&dp.1).norm_sqr() + cn(&dm.1).norm_sqr());
            }
            for k in 0..4 {
                worst[k] = worst[k].max(rel(acc[2 * k], acc[2 * k + 1]));
            }
        }
        for (k, name) in ["single.dirichlet", "single.neumann", "double.dirichlet", "double.neumann"].iter().enumerate() {
            r.measure(format!("level{level}.{name}"), worst[k], Check::AtMost { limit: p.tolerance });
        }
        per_level.push(worst);
    }
    for w in per_level.windows(2).enumerate() {
        let (i, pair) = w;
        let ratio = (0..4).map(|k| pair[1][k] / pair[0][k]).fold(0.0, f64::max);
        r.measure(format!("refinement{}.max_error_ratio", i + 1), ratio, Check::Above { limit: 0.0 });
        r.measure(format!("refinement{}.errors_shrink", i + 1), (ratio < 1.0) as u8 as f64, Check::AtLeast { limit: 1.0 });
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewtonParams {
    pub level: u32,
    pub s: f64,
    pub tolerance: f64,
}

impl Default for NewtonParams {
    fn default() -> Self {
        Self { level: 3, s: 1e-6, tolerance: 0.02 }
    }
}

/// `⟨V 𝟙, 𝟙⟩ → 4π` (unit shell potential is 1 on the sphere) and `K 𝟙 → −½` (Gauss).
pub fn probe_newton(p: &NewtonParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("newton");
    r.param("level", p.level);
    r.param("s", p.s);
    let b = generate_builtin(BuiltinKind::Icosphere { level: p.level })?.boundary(Subdomain::One);
    let set = assemble_operators(C64::new(p.s, 0.0), &b, &Medium::default(), Wanted { v: true, k: true, w: false }, &QuadratureOrders::default())?;
    let v = set.v.expect("requested");
    let k = set.k.expect("requested");
    let total: f64 = (0..v.nrows()).map(|i| (0..v.ncols()).map(|j| v[(i, j)].re).sum::<f64>()).sum();
    let mut mean = 0.0;
    for t in 0..k.nrows() {
        mean += (0..k.ncols()).map(|j| k[(t, j)].re).sum::<f64>() / b.panels[t].area;
    }
    mean /= k.nrows() as f64;
    r.measure("v_one_one", total, Check::Info);
    r.measure("v_rel_error_vs_4pi", (total - 4.0 * PI).abs() / (4.0 * PI), Check::AtMost { limit: p.tolerance });
    r.measure("k_one_mean", mean, Check::Info);
    r.measure("k_rel_error_vs_minus_half", (mean + 0.5).abs() / 0.5, Check::AtMost { limit: p.tolerance });
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalderonParams {
    pub levels: Vec<u32>,
    pub s: C64,
    pub source: Point,
    pub tolerance: f64,
    pub max_ratio: f64,
    /// Lower bound for the residual of random traces (non-degeneracy).
    pub random_floor: f64,
    pub seed: u64,
}

impl Default for CalderonParams {
    fn default() -> Self {
        Self {
            levels: vec![3, 4],
            s: C64::new(1.0, 2.0),
            source: [0.0, 0.0, 2.0],
            tolerance: 0.05,
            max_ratio: 0.7,
            random_floor: 0.2,
            seed: super::DEFAULT_SEED,
        }
    }
}

pub fn probe_calderon_residual(p: &CalderonParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("calderon_residual");
    r.param("levels", &p.levels);
    r.param("s", p.s);
    r.param("source", p.source);
    let src = PointSource::new(p.source);
    let mut residuals = Vec::new();
    for (i, &level) in p.levels.iter().enumerate() {
        let disc = Discretization::new(generate_builtin(BuiltinKind::Icosphere { level })?, MaterialParams::default())?;
        let norms = TraceNorms::assemble(&disc.boundaries, 1.0, &disc.orders)?;
        let a = BlockCalderon::assemble(p.s, &disc.boundaries, &disc.media, &disc.orders)?;
        let traces = scale_traces(p.s, &sample_traces(&disc, &src, p.s), ScaleDirection::Forward);
        let res = calderon_residual(&a, &norms, &traces)?;
        let check = if i == 0 { Check::AtMost { limit: p.tolerance } } else { Check::Info };
        r.measure(format!("level{level}.residual"), res.value, check);
        residuals.push(res.value);
        if i == 0 {
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
            let random = MultiTraceVector::from_data(&disc.layout, random_vector(&mut rng, disc.layout.len()))?;
            let rr = calderon_residual(&a, &norms, &random)?;
            r.measure(format!("level{level}.random_trace_residual"), rr.value, Check::Above { limit: p.random_floor });
        }
    }
    for (i, w) in residuals.windows(2).enumerate() {
        r.measure(format!("refinement{}.ratio", i + 1), w[1] / w[0], Check::AtMost { limit: p.max_ratio });
    }
    Ok(r)
}
