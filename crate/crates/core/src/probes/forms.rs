use super::{loglog_slope, random_vector, Check, ProbeError, ProbeReport};
use crate::calderon::{pairing, MultiTraceVector, PairingSign};
use crate::linalg::{cholesky_lower, spectral_norm, whiten};
use crate::mesh::{generate_builtin, BuiltinKind, SurfaceMesh};
use crate::quadrature::MaterialParams;
use crate::solver::{assemble_system, check_dissipativity, DefaultImpedance, Discretization, SolverError};
use crate::traces::TraceNorms;
use crate::C64;
use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

fn split_ball(level: u32) -> Result<SurfaceMesh, ProbeError> {
    Ok(generate_builtin(BuiltinKind::SplitBall { level, theta_d: PI / 3.0, theta_n: 2.0 * PI / 3.0 })?)
}

fn standard_frequencies() -> Vec<C64> {
    vec![C64::new(1.0, 0.0), C64::new(1.0, 2.0), C64::new(1.0, -2.0), C64::new(5.0, 0.0)]
}

/// Distinct materials so that the interface is not fictitious.
fn probe_materials() -> MaterialParams {
    MaterialParams::new(1.0, 1.0, 1.5, 0.7).expect("valid materials")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoercivityParams {
    pub levels: Vec<u32>,
    pub frequencies: Vec<C64>,
    pub samples: usize,
    pub sigma0: f64,
    pub materials: MaterialParams,
    /// Accepted range of `ζ̂` between successive levels.
    pub ratio_range: (f64, f64),
    pub seed: u64,
}

impl Default for CoercivityParams {
    fn default() -> Self {
        Self {
            levels: vec![2, 3],
            frequencies: standard_frequencies(),
            samples: 100,
            sigma0: 1.0,
            materials: probe_materials(),
            ratio_range: (0.1, 10.0),
            seed: super::DEFAULT_SEED,
        }
    }
}

/// Minimum Rayleigh quotients of `Re⟨A(s)φ, φ̄⟩₊` on the multi-trace space and of
/// `Re a^mix(ξ, ξ̄)` on the single-trace space, scaled to `ζ̂ = q |s|² / (Re s ‖·‖²_X)`.
pub fn probe_coercivity(p: &CoercivityParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("coercivity");
    r.param("levels", &p.levels);
    r.param("frequencies", &p.frequencies);
    r.param("samples", p.samples);
    r.param("sigma0", p.sigma0);
    r.param("materials", p.materials);
    r.param("seed", p.seed);
    if p.levels.is_empty() {
        return Err(ProbeError::Parameters("coercivity probe needs at least one level".into()));
    }
    // zeta[level][s] for (multi, mixed)
    let mut zeta: Vec<Vec<(f64, f64)>> = Vec::new();
    for &level in &p.levels {
        let disc = Discretization::new(split_ball(level)?, p.materials)?;
        let norms = TraceNorms::assemble(&disc.boundaries, p.sigma0, &disc.orders)?;
        let mut row = Vec::new();
        for (i, &s) in p.frequencies.iter().enumerate() {
            let sys = assemble_system(s, &disc, &DefaultImpedance, p.sigma0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(1000 * level as u64 + i as u64));
            let weight = s.norm_sqr() / s.re;
            let (mut min_multi, mut min_mixed) = (f64::INFINITY, f64::INFINITY);
            let (mut zm, mut zx) = (f64::INFINITY, f64::INFINITY);
            for _ in 0..p.samples {
                let phi = MultiTraceVector::from_data(&disc.layout, random_vector(&mut rng, disc.layout.len()))?;
                let q = sys.calderon.quadratic_form(&phi)?;
                min_multi = min_multi.min(q);
                zm = zm.min(q * weight / norms.multi(&phi).powi(2));
                let xi = random_vector(&mut rng, disc.map.num_dofs());
                let q = sys.mixed_form(&xi).re;
                min_mixed = min_mixed.min(q);
                zx = zx.min(q * weight / norms.multi(&disc.map.apply(&xi)).powi(2));
            }
            let tag = format!("level{level}.s{i}");
            r.measure(format!("{tag}.multi.min_form"), min_multi, Check::Above { limit: 0.0 });
            r.measure(format!("{tag}.mixed.min_form"), min_mixed, Check::Above { limit: 0.0 });
            r.measure(format!("{tag}.multi.zeta"), zm, Check::Above { limit: 0.0 });
            r.measure(format!("{tag}.mixed.zeta"), zx, Check::Above { limit: 0.0 });
            row.push((zm, zx));
        }
        zeta.push(row);
    }
    let (lo, hi) = p.ratio_range;
    for k in 1..zeta.len() {
        for i in 0..p.frequencies.len() {
            let tag = format!("refinement{k}.s{i}");
            r.measure(format!("{tag}.multi.zeta_ratio"), zeta[k][i].0 / zeta[k - 1][i].0, Check::Within { lo, hi });
            r.measure(format!("{tag}.mixed.zeta_ratio"), zeta[k][i].1 / zeta[k - 1][i].1, Check::Within { lo, hi });
        }
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityParams {
    pub level: u32,
    pub frequencies: Vec<C64>,
    pub sigma0: f64,
    pub slack: f64,
    pub materials: MaterialParams,
}

impl Default for ContinuityParams {
    fn default() -> Self {
        Self {
            level: 3,
            frequencies: [1.0, 2.0, 4.0, 8.0].iter().map(|&x| C64::new(x, 0.0)).collect(),
            sigma0: 1.0,
            slack: 0.3,
            materials: probe_materials(),
        }
    }
}

fn scaled(m: &Mat<C64>, f: C64) -> Mat<C64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * f)
}

/// Norms of the operators between the discrete trace spaces and their fitted growth in `|s|`.
pub fn probe_continuity(p: &ContinuityParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("continuity");
    r.param("level", p.level);
    r.param("frequencies", &p.frequencies);
    r.param("sigma0", p.sigma0);
    r.param("slack", p.slack);
    if p.frequencies.len() < 4 {
        return Err(ProbeError::Parameters(format!("continuity probe needs >= 4 frequencies, got {}", p.frequencies.len())));
    }
    let disc = Discretization::new(split_ball(p.level)?, p.materials)?;
    let norms = TraceNorms::assemble(&disc.boundaries, p.sigma0, &disc.orders)?;
    let lx = norms.multi_factor();
    // Gram matrix of ‖E ξ‖_X and its factor.
    let e = disc.map.to_csr().to_dense();
    let b = lx.transpose() * &e;
    let ls = cholesky_lower(&(b.adjoint() * &b))?;
    let (lv, lw) = (norms.l_minus_half(0), norms.l_half(0));
    let names = ["sV", "K", "K'", "W/s", "A", "a_mix"];
    let powers = [1.0, 1.5, 1.5, 1.0, 2.0, 2.0];
    let mut values = vec![Vec::new(); names.len()];
    for (i, &s) in p.frequencies.iter().enumerate() {
        let sys = assemble_system(s, &disc, &DefaultImpedance, p.sigma0)?;
        let blk = &sys.calderon.blocks[0];
        let kt = blk.k.transpose().to_owned();
        let ops = [
            spectral_norm(&whiten(&scaled(&blk.v, s), lv, lv)),
            spectral_norm(&whiten(&blk.k, lv, lw)),
            spectral_norm(&whiten(&kt, lw, lv)),
            spectral_norm(&whiten(&scaled(&blk.w, 1.0 / s), lw, lw)),
            spectral_norm(&whiten(&sys.calderon.matrix(0.0), &lx, &lx)),
            spectral_norm(&whiten(&sys.matrix, &ls, &ls)),
        ];
        for (k, v) in ops.into_iter().enumerate() {
            r.measure(format!("s{i}.{}", names[k]), v, Check::Info);
            values[k].push(v);
        }
    }
    let abs: Vec<f64> = p.frequencies.iter().map(|s| s.norm()).collect();
    for k in 0..names.len() {
        r.measure(format!("exponent.{}", names[k]), loglog_slope(&abs, &values[k]), Check::AtMost { limit: powers[k] + p.slack });
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityParams {
    pub level: u32,
    pub frequencies: Vec<C64>,
    pub samples: usize,
    pub tolerance: f64,
    pub materials: MaterialParams,
    pub seed: u64,
}

impl Default for DissipativityParams {
    fn default() -> Self {
        Self {
            level: 2,
            frequencies: standard_frequencies(),
            samples: 100,
            tolerance: 1e-12,
            materials: MaterialParams::new(1.5, 0.8, 0.7, 1.3).expect("valid materials"),
            seed: super::DEFAULT_SEED,
        }
    }
}

pub fn probe_dissipativity(p: &DissipativityParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("dissipativity");
    r.param("level", p.level);
    r.param("frequencies", &p.frequencies);
    r.param("samples", p.samples);
    r.param("materials", p.materials);
    r.param("seed", p.seed);
    let disc = Discretization::new(split_ball(p.level)?, p.materials)?;
    match check_dissipativity(&DefaultImpedance, &disc, &p.frequencies, p.samples, p.seed, p.tolerance) {
        Ok(rep) => {
            r.measure("max_re_over_l2", rep.max_real_part, Check::AtMost { limit: p.tolerance });
            r.measure("max_deviation_from_minus_ap", rep.max_default_deviation, Check::AtMost { limit: p.tolerance });
            r.measure("conjugation_error", rep.conjugation_error, Check::AtMost { limit: p.tolerance });
        }
        Err(SolverError::NotDissipative { s, value }) => {
            r.note(format!("positive real part {value:.3e} at s = {s}"));
            r.measure("max_re_over_l2", value, Check::AtMost { limit: p.tolerance });
        }
        Err(e) => return Err(e.into()),
    }
    Ok(r)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairingParams {
    pub level: u32,
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for PairingParams {
    fn default() -> Self {
        Self { level: 2, samples: 50, tolerance: 1e-10, seed: super::DEFAULT_SEED }
    }
}

/// `⟨Eξ, Eη⟩₊` over the skeleton against the same pairing restricted to `Γ_I`.
pub fn probe_pairing(p: &PairingParams) -> Result<ProbeReport, ProbeError> {
    let mut r = ProbeReport::new("pairing");
    r.param("level", p.level);
    r.param("samples", p.samples);
    r.param("seed", p.seed);
    let disc = Discretization::new(split_ball(p.level)?, MaterialParams::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..p.samples {
        let phi = disc.map.apply(&random_vector(&mut rng, disc.map.num_dofs()));
        let psi = disc.map.apply(&random_vector(&mut rng, disc.map.num_dofs()));
        let full = pairing(PairingSign::Plus, &phi, &psi, &disc.masses)?;
        let imp = pairing(PairingSign::Plus, &phi, &psi, &disc.impedance_masses)?;
        worst = worst.max((full - imp).norm() / imp.norm());
    }
    r.measure("max_relative_difference", worst, Check::AtMost { limit: p.tolerance });
    Ok(r)
}
