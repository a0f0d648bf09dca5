use super::{assemble_system, reconstruct_field, solve_frequency, Discretization, FrequencyData, SolverError, TransferOperator};
use crate::calderon::TraceLayout;
use crate::geometry::Point;
use crate::signals::{BoundaryData, Eval};
use crate::C64;
use rayon::prelude::*;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CqError {
    #[error("contour radius {0} is not in (0, 1)")]
    BadRadius(f64),
    #[error("time step {0} is not positive")]
    BadStep(f64),
    #[error("CQ frequency {index} has Re s = {re} <= 0")]
    NonPositiveFrequency { index: usize, re: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CqScheme {
    Bdf1,
    Bdf2,
}

impl CqScheme {
    /// Generating function `δ(ζ)`.
    pub fn delta(self, z: C64) -> C64 {
        match self {
            CqScheme::Bdf1 => 1.0 - z,
            CqScheme::Bdf2 => 1.5 - 2.0 * z + 0.5 * z * z,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bdf1" => Some(CqScheme::Bdf1),
            "bdf2" => Some(CqScheme::Bdf2),
            _ => None,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            CqScheme::Bdf1 => "bdf1",
            CqScheme::Bdf2 => "bdf2",
        }
    }
}

/// `ε^{1/(2N+2)}`: balances aliasing (`λ^{N+1}`) against rounding amplification (`λ^{−N}`).
pub fn default_lambda(steps: usize) -> f64 {
    f64::EPSILON.powf(1.0 / (2 * steps + 2) as f64)
}

/// Uniform CQ grid `t_n = n Δt`, `n = 0..=N`, with contour radius `λ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CqGrid {
    pub scheme: CqScheme,
    pub dt: f64,
    pub steps: usize,
    pub lambda: f64,
}

impl CqGrid {
    pub fn new(scheme: CqScheme, dt: f64, steps: usize) -> Result<Self, CqError> {
        Self::with_lambda(scheme, dt, steps, default_lambda(steps))
    }

    pub fn with_lambda(scheme: CqScheme, dt: f64, steps: usize, lambda: f64) -> Result<Self, CqError> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(CqError::BadRadius(lambda));
        }
        if !(dt > 0.0) {
            return Err(CqError::BadStep(dt));
        }
        Ok(Self { scheme, dt, steps, lambda })
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|n| n as f64 * self.dt).collect()
    }

    fn root(&self, l: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * PI * l as f64 / self.len() as f64)
    }

    /// `s_ℓ = δ(λ ζ_ℓ)/Δt` with `ζ_ℓ = e^{2πiℓ/(N+1)}`.
    pub fn frequencies(&self) -> Result<Vec<C64>, CqError> {
        (0..self.len())
            .map(|l| {
                let s = self.scheme.delta(self.root(l) * self.lambda) / self.dt;
                if s.re > 0.0 {
                    Ok(s)
                } else {
                    Err(CqError::NonPositiveFrequency { index: l, re: s.re })
                }
            })
            .collect()
    }

    /// `x̂_ℓ = Σ_n λ^n x_n ζ_ℓ^n`.
    pub fn forward(&self, series: &[C64]) -> Vec<C64> {
        assert_eq!(series.len(), self.len());
        let mut buf: Vec<C64> = series.iter().enumerate().map(|(n, x)| x * self.lambda.powi(n as i32)).collect();
        FftPlanner::new().plan_fft(buf.len(), FftDirection::Inverse).process(&mut buf);
        buf
    }

    /// `x_n = λ^{−n}/(N+1) Σ_ℓ x̂_ℓ ζ_ℓ^{−n}`.
    pub fn inverse(&self, spectrum: &[C64]) -> Vec<C64> {
        assert_eq!(spectrum.len(), self.len());
        let mut buf = spectrum.to_vec();
        FftPlanner::new().plan_fft(buf.len(), FftDirection::Forward).process(&mut buf);
        let n1 = self.len() as f64;
        buf.iter().enumerate().map(|(n, x)| x / (n1 * self.lambda.powi(n as i32))).collect()
    }

    /// Componentwise transform of `series[n][k]`.
    pub fn forward_many(&self, series: &[Vec<C64>]) -> Vec<Vec<C64>> {
        self.transform_many(series, true)
    }

    pub fn inverse_many(&self, spectra: &[Vec<C64>]) -> Vec<Vec<C64>> {
        self.transform_many(spectra, false)
    }

    fn transform_many(&self, rows: &[Vec<C64>], forward: bool) -> Vec<Vec<C64>> {
        let width = rows.first().map_or(0, |r| r.len());
        let mut out = vec![vec![C64::default(); width]; rows.len()];
        let mut column = vec![C64::default(); rows.len()];
        for k in 0..width {
            for (n, r) in rows.iter().enumerate() {
                column[n] = r[k];
            }
            let t = if forward { self.forward(&column) } else { self.inverse(&column) };
            for (n, v) in t.into_iter().enumerate() {
                out[n][k] = v;
            }
        }
        out
    }
}

/// CQ weights `w_0..w_N` of a scalar symbol.
pub fn cq_weights(scheme: CqScheme, f: &dyn Fn(C64) -> C64, dt: f64, steps: usize, lambda: f64) -> Result<Vec<C64>, CqError> {
    let grid = CqGrid::with_lambda(scheme, dt, steps, lambda)?;
    let samples: Vec<C64> = grid.frequencies()?.into_iter().map(f).collect();
    Ok(grid.inverse(&samples))
}

/// CQ weights of a vector- or matrix-valued symbol (flattened); `out[n]` is `w_n`.
pub fn cq_weights_vec(
    scheme: CqScheme,
    f: &dyn Fn(C64) -> Vec<C64>,
    dt: f64,
    steps: usize,
    lambda: f64,
) -> Result<Vec<Vec<C64>>, CqError> {
    let grid = CqGrid::with_lambda(scheme, dt, steps, lambda)?;
    let samples: Vec<Vec<C64>> = grid.frequencies()?.into_iter().map(f).collect();
    Ok(grid.inverse_many(&samples))
}

/// Time-domain transmission problem on a fixed CQ grid.
pub struct TransmissionProblem<'a> {
    pub disc: &'a Discretization,
    pub data: &'a dyn BoundaryData,
    pub transfer: &'a dyn TransferOperator,
    pub sigma0: f64,
    pub grid: CqGrid,
    /// Field probe points, each inside one subdomain.
    pub probes: Vec<Point>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TimeMarchResult {
    pub grid: CqGrid,
    pub times: Vec<f64>,
    pub layout: TraceLayout,
    /// Unscaled total traces per step.
    pub traces: Vec<Vec<f64>>,
    pub probes: Vec<Point>,
    /// Field values per step and probe.
    pub fields: Vec<Vec<f64>>,
    /// `Σ_n Δt e^{−2σ₀ t_n} (⟨A φ_n, φ_n⟩ − ⟨T φ_{D,n}, φ_{D,n}⟩)` for the scaled single trace.
    pub coercivity: f64,
    /// Largest imaginary part left after the inverse transform, relative to the largest real part.
    pub imaginary_residue: f64,
    /// Largest relative algebraic residual over the frequency solves.
    pub max_residual: f64,
    pub solves: usize,
}

impl TimeMarchResult {
    /// Euclidean norm of the coefficient vector at each step.
    pub fn trace_norms(&self) -> Vec<f64> {
        self.traces.iter().map(|t| t.iter().map(|v| v * v).sum::<f64>().sqrt()).collect()
    }
}

struct Solved {
    traces: Vec<C64>,
    fields: Vec<C64>,
    phi: Vec<C64>,
    aphi: Vec<C64>,
    tphi: Vec<C64>,
    residual: f64,
}

/// All-steps-at-once CQ: transform the sampled data, solve at `s_ℓ` for `ℓ ≤ (N+1)/2`,
/// fill the rest by conjugation, transform back.
pub fn cq_march(problem: &TransmissionProblem) -> Result<TimeMarchResult, SolverError> {
    let disc = problem.disc;
    let grid = problem.grid;
    let freqs = grid.frequencies()?;
    let times = grid.times();
    let series: Vec<Vec<C64>> = times.iter().map(|&t| FrequencyData::sample(disc, problem.data, Eval::Time(t)).flatten()).collect();
    let spectra = grid.forward_many(&series);
    drop(series);

    let n1 = grid.len();
    let half = n1 / 2;
    // Frequencies are independent; each worker assembles, factors and solves one s_ℓ.
    let solved: Vec<Solved> = (0..=half)
        .into_par_iter()
        .map(|l| {
            let s = freqs[l];
            let wrap = |e: SolverError| SolverError::Frequency { index: l, s, source: Box::new(e) };
            let sys = assemble_system(s, disc, problem.transfer, problem.sigma0).map_err(wrap)?;
            let data = FrequencyData::unflatten(disc, &spectra[l]);
            let res = solve_frequency(&sys, disc, &data).map_err(wrap)?;
            let fields = if problem.probes.is_empty() {
                Vec::new()
            } else {
                reconstruct_field(disc, s, &res.traces, &problem.probes).map_err(wrap)?
            };
            let aphi = sys.calderon.apply(&res.scaled, 0.0).map_err(|e| wrap(e.into()))?.data;
            let tphi = sys.transfer_apply(&res.scaled).data;
            log::debug!("cq frequency {l}/{half}: s = {s:.4}, residual {:.2e}, rcond {:.2e}", res.residual, res.rcond);
            Ok(Solved { traces: res.traces.data, fields, phi: res.scaled.data, aphi, tphi, residual: res.residual })
        })
        .collect::<Result<_, SolverError>>()?;
    let mut traces = vec![Vec::new(); n1];
    let mut fields = vec![Vec::new(); n1];
    let mut phi = vec![Vec::new(); n1];
    let mut aphi = vec![Vec::new(); n1];
    let mut tphi = vec![Vec::new(); n1];
    let mut max_residual: f64 = 0.0;
    for (l, r) in solved.into_iter().enumerate() {
        max_residual = max_residual.max(r.residual);
        traces[l] = r.traces;
        fields[l] = r.fields;
        phi[l] = r.phi;
        aphi[l] = r.aphi;
        tphi[l] = r.tphi;
    }
    for l in half + 1..n1 {
        let m = n1 - l;
        for v in [&mut traces, &mut fields, &mut phi, &mut aphi, &mut tphi] {
            v[l] = v[m].iter().map(|x| x.conj()).collect();
        }
    }

    let mut residue: f64 = 0.0;
    let mut peak: f64 = 0.0;
    let mut real = |rows: Vec<Vec<C64>>| -> Vec<Vec<f64>> {
        rows.into_iter()
            .map(|r| {
                r.into_iter()
                    .map(|x| {
                        residue = residue.max(x.im.abs());
                        peak = peak.max(x.re.abs());
                        x.re
                    })
                    .collect()
            })
            .collect()
    };
    let traces_t = real(grid.inverse_many(&traces));
    let fields_t = real(grid.inverse_many(&fields));
    let phi_t = grid.inverse_many(&phi);
    let aphi_t = grid.inverse_many(&aphi);
    let tphi_t = grid.inverse_many(&tphi);
    let mut coercivity = 0.0;
    for n in 0..n1 {
        let w = grid.dt * (-2.0 * problem.sigma0 * times[n]).exp();
        let q: f64 = phi_t[n].iter().zip(&aphi_t[n]).zip(&tphi_t[n]).map(|((p, a), t)| p.re * (a.re - t.re)).sum();
        coercivity += w * q;
    }
    Ok(TimeMarchResult {
        grid,
        times,
        layout: disc.layout.clone(),
        traces: traces_t,
        probes: problem.probes.clone(),
        fields: fields_t,
        coercivity,
        imaginary_residue: if peak > 0.0 { residue / peak } else { residue },
        max_residual,
        solves: half + 1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiation_symbol_gives_backward_difference() {
        let dt = 0.05;
        let w = cq_weights(CqScheme::Bdf1, &|s| s, dt, 32, 0.9).unwrap();
        assert!((w[0] - 1.0 / dt).norm() * dt < 1e-10);
        assert!((w[1] + 1.0 / dt).norm() * dt < 1e-10);
        assert!(w[2..].iter().all(|x| x.norm() * dt < 1e-10));
        let w2 = cq_weights(CqScheme::Bdf2, &|s| s, dt, 32, 0.9).unwrap();
        for (n, expect) in [1.5, -2.0, 0.5].iter().enumerate() {
            assert!((w2[n] * dt - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn integration_symbol_is_rectangle_rule() {
        let dt = 0.1;
        let n = 40;
        let w = cq_weights(CqScheme::Bdf1, &|s| 1.0 / s, dt, n, default_lambda(n)).unwrap();
        let f: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).sin().powi(2)).collect();
        for m in 0..=n {
            let cq: f64 = (0..=m).map(|k| w[k].re * f[m - k]).sum();
            let rect: f64 = (0..=m).map(|k| dt * f[k]).sum();
            assert!((cq - rect).abs() < 1e-7, "{m}: {cq} vs {rect}");
        }
    }

    #[test]
    fn transform_round_trip_and_conjugate_symmetry() {
        let g = CqGrid::new(CqScheme::Bdf2, 0.1, 15).unwrap();
        let x: Vec<C64> = (0..16).map(|n| C64::new((n as f64).cos(), 0.0)).collect();
        let xh = g.forward(&x);
        for l in 1..16 {
            assert!((xh[l] - xh[16 - l].conj()).norm() < 1e-12);
        }
        let back = g.inverse(&xh);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).norm() < 1e-8);
        }
        let f = g.frequencies().unwrap();
        assert!((f[3] - f[13].conj()).norm() < 1e-12);
        assert!(CqGrid::with_lambda(CqScheme::Bdf1, 0.1, 4, 1.0).is_err());
    }
}
