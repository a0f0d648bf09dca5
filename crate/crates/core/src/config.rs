//! Run configuration: one TOML file, every table optional, unknown keys rejected.
//!
//! ```toml
//! seed = 7
//! sigma0 = 1.0
//! probes = [[0.0, 0.0, 0.3]]
//!
//! [geometry]
//! builtin = "split_ball:2"        # or: file = "ball.msh"
//!
//! [materials]
//! a1 = 1.0
//! p1 = 1.0
//! a2 = 1.5
//! p2 = 0.7
//!
//! [data]
//! kind = "point_source"           # point_source | cap_bump | zero
//! source = [0.0, 0.0, 2.0]
//! pulse = { width = 2.0, onset = 0.0 }
//!
//! [frequency]
//! s = ["1+2i", "2"]
//!
//! [time]
//! scheme = "bdf2"
//! dt = 0.05
//! steps = 80
//!
//! [output]
//! dir = "out"
//! stem = "run"
//! ```

use crate::geometry::Point;
use crate::mesh::{generate_builtin, load_mesh, BuiltinKind, MeshError, MeshFormat, SurfaceMesh};
use crate::quadrature::MaterialParams;
use crate::signals::{BoundaryData, CapBump, PointSource, Pulse, ZeroData};
use crate::solver::CqScheme;
use crate::C64;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid value for {field}: {message}")]
    Value { field: String, message: String },
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

fn value_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { field: field.into(), message: message.into() }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub geometry: GeometryConfig,
    #[serde(default)]
    pub materials: Option<MaterialParams>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub transfer: TransferConfig,
    #[serde(default)]
    pub frequency: FrequencyConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub probes: Vec<Point>,
    #[serde(default)]
    pub output: OutputConfig,
    pub seed: Option<u64>,
    /// Defaults to 1.
    pub sigma0: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    /// `icosphere:L` or `split_ball:L[:θ_D:θ_N]`.
    pub builtin: Option<String>,
    pub file: Option<PathBuf>,
    /// `off` or `msh`; inferred from the extension when absent.
    pub format: Option<String>,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self { builtin: Some("split_ball:2".into()), file: None, format: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataKind {
    PointSource,
    CapBump,
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    pub source: Point,
    pub amplitude: f64,
    pub theta_cap: f64,
    pub pulse: Option<Pulse>,
}

impl Default for DataConfig {
    fn default() -> Self {
        Self { kind: DataKind::PointSource, source: [0.0, 0.0, 2.0], amplitude: 1.0, theta_cap: 1.0, pulse: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferConfig {
    /// Only `default` (`T̂ = −a p` times the identity on `Γ_I`) is built in.
    pub kind: String,
}

impl Default for TransferConfig {
    fn default() -> Self {
        Self { kind: "default".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyConfig {
    pub s: Vec<String>,
}

impl Default for FrequencyConfig {
    fn default() -> Self {
        Self { s: vec!["1+2i".into()] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub scheme: String,
    pub dt: f64,
    pub steps: usize,
    /// Contour radius; `ε^{1/(2N+2)}` when absent.
    pub lambda: Option<f64>,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { scheme: "bdf2".into(), dt: 0.1, steps: 64, lambda: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub stem: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("."), stem: "wavebem".into() }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse { path: origin.into(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn mesh(&self) -> Result<SurfaceMesh, ConfigError> {
        match (&self.geometry.builtin, &self.geometry.file) {
            (_, Some(file)) => {
                let format = match self.geometry.format.as_deref() {
                    None => None,
                    Some("off") => Some(MeshFormat::Off),
                    Some("msh") | Some("msh2") => Some(MeshFormat::Msh2),
                    Some(other) => return Err(value_error("geometry.format", format!("unknown mesh format '{other}'"))),
                };
                Ok(load_mesh(file, format)?)
            }
            (Some(spec), None) => Ok(generate_builtin(BuiltinKind::parse(spec)?)?),
            (None, None) => Err(value_error("geometry", "set either 'builtin' or 'file'")),
        }
    }

    pub fn materials(&self) -> Result<MaterialParams, ConfigError> {
        match self.materials {
            None => Ok(MaterialParams::default()),
            Some(m) => MaterialParams::new(m.a1, m.p1, m.a2, m.p2).map_err(|e| value_error("materials", e.to_string())),
        }
    }

    pub fn boundary_data(&self) -> Result<Box<dyn BoundaryData>, ConfigError> {
        let d = &self.data;
        if let Some(p) = d.pulse {
            if !(p.width > 0.0 && p.width.is_finite() && p.onset.is_finite()) {
                return Err(value_error("data.pulse", "width must be positive and onset finite"));
            }
        }
        Ok(match d.kind {
            DataKind::PointSource => Box::new(PointSource { source: d.source, amplitude: d.amplitude, pulse: d.pulse }),
            DataKind::CapBump => {
                let pulse = d.pulse.ok_or_else(|| value_error("data.pulse", "cap_bump needs a pulse"))?;
                if !(d.theta_cap > 0.0 && d.theta_cap <= std::f64::consts::PI) {
                    return Err(value_error("data.theta_cap", "must lie in (0, pi]"));
                }
                Box::new(CapBump { theta_cap: d.theta_cap, amplitude: d.amplitude, pulse })
            }
            DataKind::Zero => Box::new(ZeroData),
        })
    }

    pub fn frequencies(&self) -> Result<Vec<C64>, ConfigError> {
        if self.frequency.s.is_empty() {
            return Err(value_error("frequency.s", "empty list"));
        }
        self.frequency.s.iter().map(|s| parse_complex(s).ok_or_else(|| value_error("frequency.s", format!("cannot parse '{s}'")))).collect()
    }

    pub fn scheme(&self) -> Result<CqScheme, ConfigError> {
        CqScheme::parse(&self.time.scheme).ok_or_else(|| value_error("time.scheme", format!("unknown scheme '{}'", self.time.scheme)))
    }

    pub fn sigma0(&self) -> Result<f64, ConfigError> {
        let s = self.sigma0.unwrap_or(1.0);
        if s > 0.0 && s.is_finite() {
            Ok(s)
        } else {
            Err(value_error("sigma0", "must be positive"))
        }
    }

    pub fn check_transfer(&self) -> Result<(), ConfigError> {
        if self.transfer.kind == "default" {
            Ok(())
        } else {
            Err(value_error("transfer.kind", format!("unknown transfer operator '{}'", self.transfer.kind)))
        }
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`, spaces ignored).
pub fn parse_complex(text: &str) -> Option<C64> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect::<String>().replace('j', "i");
    if t.is_empty() {
        return None;
    }
    if !t.ends_with('i') {
        return t.parse().ok().map(|re| C64::new(re, 0.0));
    }
    let body = &t[..t.len() - 1];
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len()).rev().find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let imag = |s: &str| -> Option<f64> {
        match s {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            _ => s.parse().ok(),
        }
    };
    match split {
        Some(k) => Some(C64::new(body[..k].parse().ok()?, imag(&body[k..])?)),
        None => Some(C64::new(0.0, imag(body)?)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_literals() {
        assert_eq!(parse_complex("2+1i"), Some(C64::new(2.0, 1.0)));
        assert_eq!(parse_complex("1-2i"), Some(C64::new(1.0, -2.0)));
        assert_eq!(parse_complex(" 3 "), Some(C64::new(3.0, 0.0)));
        assert_eq!(parse_complex("-i"), Some(C64::new(0.0, -1.0)));
        assert_eq!(parse_complex("1e-1+2e+0j"), Some(C64::new(0.1, 2.0)));
        assert_eq!(parse_complex("abc"), None);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml("[geometry]\nbuiltin = \"icosphere:1\"\ncolour = 3\n", "x.toml").unwrap_err();
        assert!(err.to_string().contains("colour"), "{err}");
    }

    #[test]
    fn partial_tables_keep_defaults() {
        let c = RunConfig::from_toml("[data]\npulse = { width = 2.0, onset = 0.5 }\n[time]\nsteps = 16\n", "x").unwrap();
        assert_eq!(c.data.source, [0.0, 0.0, 2.0]);
        assert_eq!((c.time.steps, c.time.dt), (16, 0.1));
        assert!(RunConfig::from_toml("[materials]\na1 = 1.0\n", "x").is_err());
    }

    #[test]
    fn defaults_parse() {
        let c = RunConfig::from_toml("", "empty").unwrap();
        assert_eq!(c.frequencies().unwrap(), vec![C64::new(1.0, 2.0)]);
        assert_eq!(c.scheme().unwrap(), CqScheme::Bdf2);
        assert!(c.mesh().is_ok());
    }
}
