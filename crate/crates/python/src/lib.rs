//! Python module `wavebem_py`: meshes, frequency and time-domain solves, CQ weights and the
//! verification probes.

use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use wavebem::config::parse_complex;
use wavebem::mesh::{generate_builtin, load_mesh, write_msh2, write_off, BuiltinKind, SurfaceMesh};
use wavebem::probes::{relative_trace_errors, run_probe, suite_manifest, ProbeKind, ProbeOptions};
use wavebem::quadrature::{kernel_eval, MaterialParams, Medium};
use wavebem::signals::{Eval, PointSource, Pulse};
use wavebem::solver::{
    assemble_system, cq_march, cq_weights, default_lambda, reconstruct_field, sample_traces, solve_frequency, CqGrid, CqScheme,
    DefaultImpedance, Discretization, FrequencyData, TransmissionProblem,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn scheme(name: &str) -> PyResult<CqScheme> {
    CqScheme::parse(name).ok_or_else(|| value_err(format!("unknown scheme '{name}'")))
}

/// Triangulated surface with subdomain and part tags.
#[pyclass(name = "Mesh", module = "wavebem_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyMesh {
    inner: SurfaceMesh,
}

#[pymethods]
impl PyMesh {
    /// `icosphere:L` or `split_ball:L[:theta_d:theta_n]`.
    #[staticmethod]
    fn builtin(spec: &str) -> PyResult<Self> {
        let kind = BuiltinKind::parse(spec).map_err(value_err)?;
        Ok(Self { inner: generate_builtin(kind).map_err(value_err)? })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(Self { inner: load_mesh(std::path::Path::new(path), None).map_err(value_err)? })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_triangles(&self) -> usize {
        self.inner.num_triangles()
    }

    fn refine(&self) -> Self {
        Self { inner: self.inner.refine() }
    }

    fn stats<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let s = self.inner.stats();
        let d = PyDict::new(py);
        d.set_item("vertices", s.vertices)?;
        d.set_item("triangles", s.triangles)?;
        d.set_item("dirichlet_triangles", s.dirichlet_triangles)?;
        d.set_item("neumann_triangles", s.neumann_triangles)?;
        d.set_item("impedance_triangles", s.impedance_triangles)?;
        d.set_item("jump_triangles", s.jump_triangles)?;
        d.set_item("max_edge_length", s.max_edge_length)?;
        d.set_item("total_area", s.total_area)?;
        Ok(d)
    }

    fn to_off(&self) -> String {
        write_off(&self.inner)
    }

    fn to_msh(&self) -> String {
        write_msh2(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!("Mesh(vertices={}, triangles={})", self.inner.num_vertices(), self.inner.num_triangles())
    }
}

/// Discretized transmission problem with the default impedance operator.
#[pyclass(name = "Transmission", module = "wavebem_py")]
pub struct PyTransmission {
    disc: Discretization,
    sigma0: f64,
}

#[pymethods]
impl PyTransmission {
    #[new]
    #[pyo3(signature = (mesh, a1=1.0, p1=1.0, a2=1.0, p2=1.0, sigma0=1.0))]
    fn new(mesh: &PyMesh, a1: f64, p1: f64, a2: f64, p2: f64, sigma0: f64) -> PyResult<Self> {
        let materials = MaterialParams::new(a1, p1, a2, p2).map_err(value_err)?;
        let disc = Discretization::new(mesh.inner.clone(), materials).map_err(value_err)?;
        Ok(Self { disc, sigma0 })
    }

    #[getter]
    fn num_dofs(&self) -> usize {
        self.disc.map.num_dofs()
    }

    /// Solves with point-source data at `s` and compares with the exact traces.
    #[pyo3(signature = (s, source=(0.0, 0.0, 2.0), points=Vec::new()))]
    fn solve_point_source<'py>(&self, py: Python<'py>, s: Complex64, source: (f64, f64, f64), points: Vec<(f64, f64, f64)>) -> PyResult<Bound<'py, PyDict>> {
        let src = PointSource::new([source.0, source.1, source.2]);
        let sys = assemble_system(s, &self.disc, &DefaultImpedance, self.sigma0).map_err(runtime_err)?;
        let res = solve_frequency(&sys, &self.disc, &FrequencyData::sample(&self.disc, &src, Eval::Laplace(s))).map_err(runtime_err)?;
        let (ed, en) = relative_trace_errors(&self.disc, &res.traces, &sample_traces(&self.disc, &src, s));
        let pts: Vec<[f64; 3]> = points.iter().map(|p| [p.0, p.1, p.2]).collect();
        let field = if pts.is_empty() { Vec::new() } else { reconstruct_field(&self.disc, s, &res.traces, &pts).map_err(runtime_err)? };
        let d = PyDict::new(py);
        d.set_item("residual", res.residual)?;
        d.set_item("rcond", res.rcond)?;
        d.set_item("dirichlet_error", ed)?;
        d.set_item("neumann_error", en)?;
        d.set_item("traces", res.traces.data)?;
        d.set_item("field", field)?;
        Ok(d)
    }

    /// CQ march for a retarded point-source pulse.
    #[pyo3(signature = (dt, steps, width, onset, source=(0.0, 0.0, 2.0), scheme_name="bdf2", lam=None, points=Vec::new()))]
    #[allow(clippy::too_many_arguments)]
    fn march<'py>(
        &self,
        py: Python<'py>,
        dt: f64,
        steps: usize,
        width: f64,
        onset: f64,
        source: (f64, f64, f64),
        scheme_name: &str,
        lam: Option<f64>,
        points: Vec<(f64, f64, f64)>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let grid = CqGrid::with_lambda(scheme(scheme_name)?, dt, steps, lam.unwrap_or_else(|| default_lambda(steps))).map_err(value_err)?;
        let src = PointSource::new([source.0, source.1, source.2]).with_pulse(Pulse { width, onset });
        let probes = points.iter().map(|p| [p.0, p.1, p.2]).collect();
        let problem = TransmissionProblem { disc: &self.disc, data: &src, transfer: &DefaultImpedance, sigma0: self.sigma0, grid, probes };
        let res = py.detach(|| cq_march(&problem)).map_err(runtime_err)?;
        let d = PyDict::new(py);
        d.set_item("times", res.times.clone())?;
        d.set_item("trace_norms", res.trace_norms())?;
        d.set_item("fields", res.fields.clone())?;
        d.set_item("coercivity", res.coercivity)?;
        d.set_item("imaginary_residue", res.imaginary_residue)?;
        Ok(d)
    }
}

/// `k̂(s, r) = e^{−s p r / a} / (4π a² r)`.
#[pyfunction]
#[pyo3(signature = (s, r, a=1.0, p=1.0))]
fn kernel(s: Complex64, r: f64, a: f64, p: f64) -> PyResult<Complex64> {
    let m = Medium::new(a, p).map_err(value_err)?;
    kernel_eval(s, &[r, 0.0, 0.0], &m).map_err(value_err)
}

/// CQ weights of a Python callable `f(s) -> complex`.
#[pyfunction]
#[pyo3(signature = (f, dt, steps, scheme_name="bdf2", lam=None))]
fn weights(f: &Bound<'_, PyAny>, dt: f64, steps: usize, scheme_name: &str, lam: Option<f64>) -> PyResult<Vec<Complex64>> {
    let mut failure: Option<PyErr> = None;
    let cell = std::cell::RefCell::new(&mut failure);
    let call = |s: Complex64| -> Complex64 {
        match f.call1((s,)).and_then(|v| v.extract::<Complex64>()) {
            Ok(v) => v,
            Err(e) => {
                cell.borrow_mut().get_or_insert(e);
                Complex64::new(f64::NAN, f64::NAN)
            }
        }
    };
    let w = cq_weights(scheme(scheme_name)?, &call, dt, steps, lam.unwrap_or_else(|| default_lambda(steps))).map_err(value_err)?;
    match failure {
        Some(e) => Err(e),
        None => Ok(w),
    }
}

#[pyfunction]
fn parse_frequency(text: &str) -> PyResult<Complex64> {
    parse_complex(text).ok_or_else(|| value_err(format!("cannot parse '{text}'")))
}

/// Runs one verification probe and returns its JSON report.
#[pyfunction]
#[pyo3(signature = (name, level=None, seed=None))]
fn verify(py: Python<'_>, name: &str, level: Option<u32>, seed: Option<u64>) -> PyResult<String> {
    let kind = ProbeKind::parse(name).ok_or_else(|| value_err(format!("unknown probe '{name}'")))?;
    let report = py.detach(|| run_probe(kind, &ProbeOptions { level, seed })).map_err(runtime_err)?;
    Ok(report.to_json())
}

#[pyfunction]
fn manifest() -> String {
    serde_json::to_string(&suite_manifest()).expect("manifest serializes")
}

#[pymodule]
fn wavebem_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyMesh>()?;
    m.add_class::<PyTransmission>()?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(weights, m)?)?;
    m.add_function(wrap_pyfunction!(parse_frequency, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(manifest, m)?)?;
    Ok(())
}
