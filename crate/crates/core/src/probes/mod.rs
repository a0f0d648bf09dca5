//! Verification probes: each turns one analytic property of the formulation into a
//! measured quantity with a pass threshold.

mod forms;
mod operators;
mod solves;
mod time;

pub use forms::{probe_coercivity, probe_continuity, probe_dissipativity, probe_pairing, CoercivityParams, ContinuityParams, DissipativityParams, PairingParams};
pub use operators::{probe_calderon_residual, probe_jumps, probe_mesh_validation, probe_newton, CalderonParams, JumpParams, NewtonParams};
pub use solves::{convergence_study, relative_trace_errors, probe_fictitious_interface, probe_manufactured, FictitiousParams, ManufacturedParams, StudyKind};
pub use time::{probe_cq, CqParams, TimeStudyParams};

use crate::calderon::CalderonError;
use crate::linalg::LinalgError;
use crate::mesh::MeshError;
use crate::operators::{OperatorError, PotentialError};
use crate::solver::{CqError, SolverError};
use crate::traces::TraceError;
use crate::C64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const REPORT_SCHEMA: &str = "wavebem.probe/1";

#[derive(Debug, Error)]
pub enum ProbeError {
    /// Invalid probe parameters (maps to the configuration exit code).
    #[error("{0}")]
    Parameters(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Calderon(#[from] CalderonError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cq(#[from] CqError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    AtMost { limit: f64 },
    AtLeast { limit: f64 },
    Above { limit: f64 },
    Within { lo: f64, hi: f64 },
    /// Reported only.
    Info,
}

impl Check {
    fn holds(self, v: f64) -> bool {
        match self {
            Check::AtMost { limit } => v <= limit,
            Check::AtLeast { limit } => v >= limit,
            Check::Above { limit } => v > limit,
            Check::Within { lo, hi } => v >= lo && v <= hi,
            Check::Info => true,
        }
    }

    fn describe(self) -> String {
        match self {
            Check::AtMost { limit } => format!("<= {limit:.3e}"),
            Check::AtLeast { limit } => format!(">= {limit:.3e}"),
            Check::Above { limit } => format!("> {limit:.3e}"),
            Check::Within { lo, hi } => format!("in [{lo}, {hi}]"),
            Check::Info => "-".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub name: String,
    pub value: f64,
    pub check: Check,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub schema: String,
    pub probe: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub measurements: Vec<Measurement>,
    pub notes: Vec<String>,
    pub passed: bool,
}

impl ProbeReport {
    pub fn new(probe: &str) -> Self {
        Self {
            schema: REPORT_SCHEMA.into(),
            probe: probe.into(),
            parameters: BTreeMap::new(),
            measurements: Vec::new(),
            notes: Vec::new(),
            passed: true,
        }
    }

    pub fn param<T: Serialize>(&mut self, key: &str, value: T) {
        self.parameters.insert(key.into(), serde_json::to_value(value).unwrap_or(serde_json::Value::Null));
    }

    /// Records a measurement; NaN never passes a threshold.
    pub fn measure(&mut self, name: impl Into<String>, value: f64, check: Check) -> bool {
        let passed = matches!(check, Check::Info) || (!value.is_nan() && check.holds(value));
        self.passed &= passed;
        self.measurements.push(Measurement { name: name.into(), value, check, passed });
        passed
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn get(&self, name: &str) -> Option<&Measurement> {
        self.measurements.iter().find(|m| m.name == name)
    }

    /// Pass flag over the measurements whose names start with `prefix`.
    pub fn passed_with_prefix(&self, prefix: &str) -> bool {
        self.measurements.iter().filter(|m| m.name.starts_with(prefix)).all(|m| m.passed)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "probe {} [{}]", self.probe, if self.passed { "PASS" } else { "FAIL" });
        let width = self.measurements.iter().map(|m| m.name.len()).max().unwrap_or(4).max(4);
        for m in &self.measurements {
            let flag = if matches!(m.check, Check::Info) { "" } else if m.passed { "ok" } else { "FAIL" };
            let _ = writeln!(out, "  {:<width$}  {:>12.5e}  {:<16} {}", m.name, m.value, m.check.describe(), flag);
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}

/// One entry per property exercised by `verify --suite all`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeKind {
    MeshValidation,
    Jumps,
    Newton,
    CalderonResidual,
    Pairing,
    Coercivity,
    Continuity,
    Dissipativity,
    FictitiousInterface,
    Manufactured,
    Cq,
}

impl ProbeKind {
    pub const ALL: [ProbeKind; 11] = [
        ProbeKind::MeshValidation,
        ProbeKind::Jumps,
        ProbeKind::Newton,
        ProbeKind::CalderonResidual,
        ProbeKind::Pairing,
        ProbeKind::Coercivity,
        ProbeKind::Continuity,
        ProbeKind::Dissipativity,
        ProbeKind::FictitiousInterface,
        ProbeKind::Manufactured,
        ProbeKind::Cq,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProbeKind::MeshValidation => "mesh_validation",
            ProbeKind::Jumps => "jumps",
            ProbeKind::Newton => "newton",
            ProbeKind::CalderonResidual => "calderon_residual",
            ProbeKind::Pairing => "pairing",
            ProbeKind::Coercivity => "coercivity",
            ProbeKind::Continuity => "continuity",
            ProbeKind::Dissipativity => "dissipativity",
            ProbeKind::FictitiousInterface => "fictitious_interface",
            ProbeKind::Manufactured => "manufactured",
            ProbeKind::Cq => "cq",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn property(self) -> &'static str {
        match self {
            ProbeKind::MeshValidation => "builtin meshes are watertight, outward oriented and consistently tagged",
            ProbeKind::Jumps => "single and double layer potentials jump by -phi and psi across the surface",
            ProbeKind::Newton => "static limits of V and K on the unit sphere",
            ProbeKind::CalderonResidual => "Cauchy data of a homogeneous solution lie in the kernel of A - Id/2",
            ProbeKind::Pairing => "the skeleton pairing of single traces reduces to the impedance part",
            ProbeKind::Coercivity => "Re <A phi, conj phi> and Re a_mix are positive with refinement-stable constant",
            ProbeKind::Continuity => "operator norms grow at most like the stated powers of |s|",
            ProbeKind::Dissipativity => "the impedance transfer operator has nonpositive real part",
            ProbeKind::FictitiousInterface => "an interface between equal materials is invisible",
            ProbeKind::Manufactured => "point-source data are recovered by the mixed solve",
            ProbeKind::Cq => "CQ weights, causality, BDF2 order and time-domain coercivity",
        }
    }

    /// Acceptance criteria this probe decides.
    pub fn criteria(self) -> &'static [u8] {
        match self {
            ProbeKind::MeshValidation => &[],
            ProbeKind::Jumps => &[1],
            ProbeKind::Newton => &[2],
            ProbeKind::CalderonResidual => &[3],
            ProbeKind::Coercivity => &[4],
            ProbeKind::Continuity => &[5],
            ProbeKind::Dissipativity => &[6],
            ProbeKind::Pairing => &[7],
            ProbeKind::FictitiousInterface => &[8],
            ProbeKind::Manufactured => &[9],
            ProbeKind::Cq => &[10, 11],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub property: String,
    pub criteria: Vec<u8>,
}

pub fn suite_manifest() -> Vec<ManifestEntry> {
    ProbeKind::ALL
        .iter()
        .map(|k| ManifestEntry { name: k.name().into(), property: k.property().into(), criteria: k.criteria().to_vec() })
        .collect()
}

/// Overrides shared by every probe.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    /// Base mesh level (probes that refine use `level + 1` as the second level).
    pub level: Option<u32>,
    pub seed: Option<u64>,
}

pub const DEFAULT_SEED: u64 = 20240611;

pub fn run_probe(kind: ProbeKind, opts: &ProbeOptions) -> Result<ProbeReport, ProbeError> {
    let seed = opts.seed.unwrap_or(DEFAULT_SEED);
    let two = |d: u32| opts.level.map_or(vec![d, d + 1], |l| vec![l, l + 1]);
    match kind {
        ProbeKind::MeshValidation => probe_mesh_validation(opts.level.unwrap_or(3)),
        ProbeKind::Jumps => probe_jumps(&JumpParams { levels: two(3), seed, ..Default::default() }),
        ProbeKind::Newton => probe_newton(&NewtonParams { level: opts.level.unwrap_or(3), ..Default::default() }),
        ProbeKind::CalderonResidual => probe_calderon_residual(&CalderonParams { levels: two(3), seed, ..Default::default() }),
        ProbeKind::Pairing => probe_pairing(&PairingParams { level: opts.level.unwrap_or(2), seed, ..Default::default() }),
        ProbeKind::Coercivity => probe_coercivity(&CoercivityParams { levels: two(2), seed, ..Default::default() }),
        ProbeKind::Continuity => probe_continuity(&ContinuityParams { level: opts.level.unwrap_or(3), ..Default::default() }),
        ProbeKind::Dissipativity => probe_dissipativity(&DissipativityParams { level: opts.level.unwrap_or(2), seed, ..Default::default() }),
        ProbeKind::FictitiousInterface => probe_fictitious_interface(&FictitiousParams { level: opts.level.unwrap_or(3), ..Default::default() }),
        ProbeKind::Manufactured => probe_manufactured(&ManufacturedParams { split_levels: two(2), ..Default::default() }),
        ProbeKind::Cq => probe_cq(&CqParams { level: opts.level.unwrap_or(2), ..Default::default() }),
    }
}

/// Independent standard normal real and imaginary parts.
pub(crate) fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<C64> {
    (0..n).map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))).collect()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_bookkeeping() {
        let mut r = ProbeReport::new("demo");
        r.param("levels", [2, 3]);
        assert!(r.measure("a", 0.01, Check::AtMost { limit: 0.05 }));
        assert!(!r.measure("b", f64::NAN, Check::AtLeast { limit: 0.0 }));
        r.measure("c", 7.0, Check::Info);
        assert!(!r.passed);
        assert!(r.passed_with_prefix("a"));
        let v: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["schema"], REPORT_SCHEMA);
        assert_eq!(v["measurements"][1]["value"], serde_json::Value::Null);
        assert!(r.table().contains("FAIL"));
    }

    #[test]
    fn manifest_is_one_to_one() {
        let m = suite_manifest();
        assert_eq!(m.len(), ProbeKind::ALL.len());
        let mut crit: Vec<u8> = m.iter().flat_map(|e| e.criteria.clone()).collect();
        crit.sort();
        assert_eq!(crit, (1..=11).collect::<Vec<u8>>());
        for k in ProbeKind::ALL {
            assert_eq!(ProbeKind::parse(k.name()), Some(k));
        }
    }

    #[test]
    fn slope_of_power_law() {
        let x = [1.0, 2.0, 4.0, 8.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}
