use super::{Discretization, SolverError};
use crate::linalg;
use crate::mesh::Part;
use crate::C64;
use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Transfer operator `T̂(s)` on `Γ_I`, supplied as its Galerkin form `⟨T̂(s) φ, ψ⟩_{Γ_I}` on
/// the P1 space of each boundary.
pub trait TransferOperator: Send + Sync {
    fn form(&self, s: C64, disc: &Discretization, j: usize) -> Mat<C64>;
    fn name(&self) -> String;
}

/// `T̂(s) = −a p Id`, the impedance closure.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultImpedance;

impl TransferOperator for DefaultImpedance {
    fn form(&self, _s: C64, disc: &Discretization, j: usize) -> Mat<C64> {
        impedance_default(disc, j)
    }

    fn name(&self) -> String {
        "default-impedance".into()
    }
}

/// `−a_j p_j` times the P1 mass matrix restricted to `Γ_I ∩ Γ_j`.
pub fn impedance_default(disc: &Discretization, j: usize) -> Mat<C64> {
    let n = disc.boundaries[j].num_vertices();
    let m = disc.media[j];
    let mut out = Mat::<C64>::zeros(n, n);
    for (r, c, v) in disc.impedance_p1[j].triplets() {
        out[(r, c)] = C64::new(-m.a * m.p * v, 0.0);
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativityReport {
    pub frequencies: Vec<C64>,
    pub samples: usize,
    /// Largest `Re⟨T̂φ, φ̄⟩ / ‖φ‖²_{L²(Γ_I)}` over all probes.
    pub max_real_part: f64,
    /// Largest relative deviation from `−a p ‖φ‖²` (meaningful for the default operator).
    pub max_default_deviation: f64,
    /// Largest entrywise `|T̂(s̄) − conj T̂(s)|` relative to `max |T̂(s)|`.
    pub conjugation_error: f64,
    pub passed: bool,
}

/// Local P1 indices of boundary `j` that carry `H̃^{1/2}_D(Γ_I)` functions: vertices of
/// impedance triangles not touching `Γ_D`.
fn impedance_vertices(disc: &Discretization, j: usize) -> Vec<usize> {
    let b = &disc.boundaries[j];
    let mut keep = vec![false; b.num_vertices()];
    for (l, tri) in b.triangles.iter().enumerate() {
        if b.parts[l] == Part::Impedance {
            for &v in tri {
                keep[v] = !disc.class.vertex_constrained(b.global_vertex[v]);
            }
        }
    }
    (0..b.num_vertices()).filter(|&v| keep[v]).collect()
}

/// Checks `Re⟨T̂(s)φ, φ̄⟩ ≤ 0` for random `φ` supported on `Γ_I` at each frequency.
pub fn check_dissipativity(
    op: &dyn TransferOperator,
    disc: &Discretization,
    frequencies: &[C64],
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<DissipativityReport, SolverError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_re = f64::NEG_INFINITY;
    let mut max_dev: f64 = 0.0;
    let mut conj_err: f64 = 0.0;
    for &s in frequencies {
        for j in 0..disc.boundaries.len() {
            let support = impedance_vertices(disc, j);
            if support.is_empty() {
                continue;
            }
            let t = op.form(s, disc, j);
            let tc = op.form(s.conj(), disc, j);
            let scale = (0..t.nrows()).flat_map(|r| (0..t.ncols()).map(move |c| (r, c))).map(|(r, c)| t[(r, c)].norm()).fold(0.0, f64::max);
            for r in 0..t.nrows() {
                for c in 0..t.ncols() {
                    conj_err = conj_err.max((tc[(r, c)] - t[(r, c)].conj()).norm() / scale.max(f64::MIN_POSITIVE));
                }
            }
            let mass = disc.impedance_p1[j].to_dense();
            let m = disc.media[j];
            for _ in 0..samples {
                let mut phi = vec![C64::default(); t.nrows()];
                for &v in &support {
                    phi[v] = C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
                }
                let q = linalg::dotc(&phi, &linalg::matvec(&t, &phi));
                let l2 = linalg::dotc(&phi, &linalg::matvec(&mass, &phi)).re;
                let rel = q.re / l2;
                if rel > tol {
                    return Err(SolverError::NotDissipative { s, value: q.re });
                }
                max_re = max_re.max(rel);
                max_dev = max_dev.max((q - C64::new(-m.a * m.p * l2, 0.0)).norm() / (m.a * m.p * l2));
            }
        }
    }
    if max_re == f64::NEG_INFINITY {
        max_re = 0.0;
    }
    Ok(DissipativityReport {
        frequencies: frequencies.to_vec(),
        samples,
        max_real_part: max_re,
        max_default_deviation: max_dev,
        conjugation_error: conj_err,
        passed: max_re <= tol,
    })
}
