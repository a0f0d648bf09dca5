//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a verification probe failed, 2 configuration or input error,
//! 3 numerical or runtime failure.

use crate::calderon::MultiTraceVector;
use crate::config::{parse_complex, ConfigError, DataKind, RunConfig};
use crate::mesh::{save_mesh, validate_mesh, MeshFormat, Subdomain, SurfaceMesh};
use crate::operators::{assemble_operators, write_matrix_dump, Wanted};
use crate::probes::{run_probe, suite_manifest, ProbeError, ProbeKind, ProbeOptions, ProbeReport};
use crate::quadrature::OperatorKind;
use crate::signals::Eval;
use crate::solver::{
    assemble_system, check_dissipativity, cq_march, default_lambda, reconstruct_field, sample_traces, solve_frequency, CqGrid,
    DefaultImpedance, Discretization, FrequencyData, SolverError, TransmissionProblem,
};
use crate::C64;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const RUN_SCHEMA: &str = "wavebem.run/1";

#[derive(Debug, Error)]
pub enum AppError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("{0} probe(s) failed")]
    ProbeFailed(usize),
}

impl AppError {
    pub fn exit_code(&self) -> u8 {
        match self {
            AppError::ProbeFailed(_) => 1,
            AppError::Config(_) => 2,
            AppError::Numerical(_) => 3,
        }
    }
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Config(e.to_string())
    }
}

impl From<SolverError> for AppError {
    fn from(e: SolverError) -> Self {
        AppError::Numerical(e.to_string())
    }
}

impl From<ProbeError> for AppError {
    fn from(e: ProbeError) -> Self {
        match e {
            ProbeError::Parameters(m) => AppError::Config(m),
            other => AppError::Numerical(other.to_string()),
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Numerical(format!("writing {}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(name = "wavebem", version, about = "Boundary element solver for acoustic wave transmission problems")]
pub struct Cli {
    /// Log level filter (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log: String,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve at one or more Laplace frequencies.
    SolveFrequency(FrequencyArgs),
    /// March in time with convolution quadrature.
    SolveTime(TimeArgs),
    /// Run verification probes.
    Verify(VerifyArgs),
    /// Print mesh statistics and validation checks.
    MeshInfo(MeshArgs),
    /// Write a mesh, the single-trace constraint map or an operator matrix.
    Export(ExportArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Builtin geometry, e.g. icosphere:3 or split_ball:2.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Mesh file (.off or .msh).
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Output file stem.
    #[arg(long)]
    pub stem: Option<String>,
}

impl Common {
    fn config(&self) -> Result<RunConfig, AppError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(b) = &self.builtin {
            c.geometry.builtin = Some(b.clone());
            c.geometry.file = None;
        }
        if let Some(m) = &self.mesh {
            c.geometry.file = Some(m.clone());
        }
        if let Some(d) = &self.out_dir {
            c.output.dir = d.clone();
        }
        if let Some(s) = &self.stem {
            c.output.stem = s.clone();
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct FrequencyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Laplace frequency such as 2+1i (repeatable).
    #[arg(long = "s", allow_hyphen_values = true)]
    pub s: Vec<String>,
    /// Compare with an exact solution.
    #[arg(long, value_enum)]
    pub manufactured: Option<Manufactured>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Manufactured {
    PointSource,
}

#[derive(Debug, Args)]
pub struct TimeArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// bdf1 or bdf2.
    #[arg(long)]
    pub scheme: Option<String>,
    #[arg(long)]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Probe name or `all`.
    #[arg(long, default_value = "all")]
    pub suite: String,
    /// Base mesh level.
    #[arg(long)]
    pub level: Option<u32>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the reports as a JSON array.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// Print the suite manifest and exit.
    #[arg(long)]
    pub manifest: bool,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    #[command(flatten)]
    pub common: Common,
    /// Print JSON instead of a table.
    #[arg(long)]
    pub json: bool,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ExportFormat {
    Off,
    Msh,
    Coo,
    Dump,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum DumpOperator {
    V,
    K,
    Kp,
    W,
    /// Assembled mixed system matrix.
    System,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum)]
    pub format: ExportFormat,
    #[arg(long)]
    pub out: PathBuf,
    /// Operator for `dump`.
    #[arg(long, value_enum, default_value = "v")]
    pub operator: DumpOperator,
    /// Frequency for `dump`.
    #[arg(long = "s", default_value = "1", allow_hyphen_values = true)]
    pub s: String,
    /// Subdomain (1 or 2) for single-operator dumps.
    #[arg(long, default_value_t = 1)]
    pub subdomain: u8,
}

pub fn run(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::SolveFrequency(a) => solve_frequency_cmd(a),
        Command::SolveTime(a) => solve_time_cmd(a),
        Command::Verify(a) => verify_cmd(a),
        Command::MeshInfo(a) => mesh_info_cmd(a),
        Command::Export(a) => export_cmd(a),
    }
}

fn discretize(cfg: &RunConfig) -> Result<Discretization, AppError> {
    cfg.check_transfer()?;
    build_disc(cfg.mesh()?, cfg)
}

fn build_disc(mesh: SurfaceMesh, cfg: &RunConfig) -> Result<Discretization, AppError> {
    Discretization::new(mesh, cfg.materials()?).map_err(|e| match e {
        SolverError::Mesh(m) => AppError::Config(m.to_string()),
        SolverError::Trace(t) => AppError::Config(t.to_string()),
        other => AppError::Numerical(other.to_string()),
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>, AppError> {
    csv::Writer::from_path(path).map_err(|e| io_error(path, e))
}

fn write_json(path: &Path, v: &serde_json::Value) -> Result<(), AppError> {
    let text = serde_json::to_string_pretty(v).expect("json serializes");
    std::fs::write(path, text + "\n").map_err(|e| io_error(path, e))
}

fn output_paths(cfg: &RunConfig, suffixes: &[&str]) -> Result<Vec<PathBuf>, AppError> {
    std::fs::create_dir_all(&cfg.output.dir).map_err(|e| io_error(&cfg.output.dir, e))?;
    Ok(suffixes.iter().map(|s| cfg.output.dir.join(format!("{}{s}", cfg.output.stem))).collect())
}

fn trace_rows(disc: &Discretization, x: &[C64]) -> Vec<(usize, &'static str, usize, C64)> {
    let mut rows = Vec::with_capacity(x.len());
    for j in 0..disc.boundaries.len() {
        for (k, i) in disc.layout.dirichlet(j).enumerate() {
            rows.push((j + 1, "dirichlet", k, x[i]));
        }
        for (k, i) in disc.layout.neumann(j).enumerate() {
            rows.push((j + 1, "neumann", k, x[i]));
        }
    }
    rows
}

fn area_errors(disc: &Discretization, got: &MultiTraceVector, exact: &MultiTraceVector) -> (f64, f64) {
    crate::probes::relative_trace_errors(disc, got, exact)
}

fn solve_frequency_cmd(a: FrequencyArgs) -> Result<(), AppError> {
    let mut cfg = a.common.config()?;
    if !a.s.is_empty() {
        cfg.frequency.s = a.s.clone();
    }
    if a.manufactured.is_some() && cfg.data.kind != DataKind::PointSource {
        cfg.data.kind = DataKind::PointSource;
    }
    let freqs = cfg.frequencies()?;
    let sigma0 = cfg.sigma0()?;
    let data = cfg.boundary_data()?;
    let disc = discretize(&cfg)?;
    check_dissipativity(&DefaultImpedance, &disc, &freqs, 10, cfg.seed.unwrap_or(1), 1e-12)?;
    let paths = output_paths(&cfg, &["_traces.csv", "_errors.csv", "_fields.csv", ".json"])?;
    let mut traces = csv_writer(&paths[0])?;
    let w = |r: csv::Result<()>, p: &Path| r.map_err(|e| io_error(p, e));
    w(traces.write_record(["s_re", "s_im", "boundary", "trace", "index", "re", "im"]), &paths[0])?;
    let mut errors = Vec::new();
    let mut fields = Vec::new();
    for &s in &freqs {
        let sys = assemble_system(s, &disc, &DefaultImpedance, sigma0)?;
        let res = solve_frequency(&sys, &disc, &FrequencyData::sample(&disc, data.as_ref(), Eval::Laplace(s)))?;
        for (b, kind, k, v) in trace_rows(&disc, &res.traces.data) {
            w(traces.serialize((s.re, s.im, b, kind, k, v.re, v.im)), &paths[0])?;
        }
        let exact = a.manufactured.map(|_| sample_traces(&disc, data.as_ref(), s));
        let (ed, en) = exact.as_ref().map_or((f64::NAN, f64::NAN), |e| area_errors(&disc, &res.traces, e));
        println!("s = {s:.4}: residual {:.2e}, rcond {:.2e}{}", res.residual, res.rcond, if exact.is_some() { format!(", trace errors D {ed:.3e} N {en:.3e}") } else { String::new() });
        errors.push((s, ed, en, res.residual, res.rcond));
        if !cfg.probes.is_empty() {
            fields.push((s, reconstruct_field(&disc, s, &res.traces, &cfg.probes)?));
        }
    }
    w(traces.flush().map_err(csv::Error::from), &paths[0])?;
    let mut ew = csv_writer(&paths[1])?;
    w(ew.write_record(["s_re", "s_im", "dirichlet_error", "neumann_error", "residual", "rcond"]), &paths[1])?;
    for (s, ed, en, r, c) in &errors {
        w(ew.serialize((s.re, s.im, ed, en, r, c)), &paths[1])?;
    }
    w(ew.flush().map_err(csv::Error::from), &paths[1])?;
    let mut files = vec![&paths[0], &paths[1]];
    if !fields.is_empty() {
        let mut fw = csv_writer(&paths[2])?;
        w(fw.write_record(["s_re", "s_im", "probe", "x", "y", "z", "re", "im"]), &paths[2])?;
        for (s, vals) in &fields {
            for (i, (x, v)) in cfg.probes.iter().zip(vals).enumerate() {
                w(fw.serialize((s.re, s.im, i, x[0], x[1], x[2], v.re, v.im)), &paths[2])?;
            }
        }
        w(fw.flush().map_err(csv::Error::from), &paths[2])?;
        files.push(&paths[2]);
    }
    let meta = json!({
        "schema": RUN_SCHEMA,
        "command": "solve-frequency",
        "mesh": disc.mesh.stats(),
        "materials": cfg.materials()?,
        "sigma0": sigma0,
        "data": data.name(),
        "frequencies": freqs,
        "manufactured": a.manufactured.is_some(),
        "errors": errors.iter().map(|(s, ed, en, r, c)| json!({"s": s, "dirichlet_error": nan_null(*ed), "neumann_error": nan_null(*en), "residual": r, "rcond": c})).collect::<Vec<_>>(),
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(&paths[3], &meta)
}

fn nan_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn solve_time_cmd(a: TimeArgs) -> Result<(), AppError> {
    let mut cfg = a.common.config()?;
    if let Some(dt) = a.dt {
        cfg.time.dt = dt;
    }
    if let Some(n) = a.steps {
        cfg.time.steps = n;
    }
    if let Some(s) = &a.scheme {
        cfg.time.scheme = s.clone();
    }
    if a.lambda.is_some() {
        cfg.time.lambda = a.lambda;
    }
    let scheme = cfg.scheme()?;
    let sigma0 = cfg.sigma0()?;
    let data = cfg.boundary_data()?;
    let lambda = cfg.time.lambda.unwrap_or_else(|| default_lambda(cfg.time.steps));
    let grid = CqGrid::with_lambda(scheme, cfg.time.dt, cfg.time.steps, lambda).map_err(|e| AppError::Config(e.to_string()))?;
    let disc = discretize(&cfg)?;
    let freqs = grid.frequencies().map_err(|e| AppError::Config(e.to_string()))?;
    check_dissipativity(&DefaultImpedance, &disc, &freqs[..freqs.len().min(4)], 10, cfg.seed.unwrap_or(1), 1e-12)?;
    let problem = TransmissionProblem { disc: &disc, data: data.as_ref(), transfer: &DefaultImpedance, sigma0, grid, probes: cfg.probes.clone() };
    let res = cq_march(&problem)?;
    let paths = output_paths(&cfg, &["_traces.csv", "_fields.csv", ".json"])?;
    let w = |r: csv::Result<()>, p: &Path| r.map_err(|e| io_error(p, e));
    let mut tw = csv_writer(&paths[0])?;
    w(tw.write_record(["step", "time", "boundary", "trace", "index", "value"]), &paths[0])?;
    for (n, row) in res.traces.iter().enumerate() {
        let c: Vec<C64> = row.iter().map(|&v| C64::new(v, 0.0)).collect();
        for (b, kind, k, v) in trace_rows(&disc, &c) {
            w(tw.serialize((n, res.times[n], b, kind, k, v.re)), &paths[0])?;
        }
    }
    w(tw.flush().map_err(csv::Error::from), &paths[0])?;
    let mut files = vec![&paths[0]];
    if !cfg.probes.is_empty() {
        let mut fw = csv_writer(&paths[1])?;
        w(fw.write_record(["step", "time", "probe", "value"]), &paths[1])?;
        for (n, row) in res.fields.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                w(fw.serialize((n, res.times[n], i, v)), &paths[1])?;
            }
        }
        w(fw.flush().map_err(csv::Error::from), &paths[1])?;
        files.push(&paths[1]);
    }
    let norms = res.trace_norms();
    let peak = norms.iter().cloned().fold(0.0, f64::max);
    println!(
        "{} steps, {} frequency solves, peak trace norm {peak:.4e}, coercivity sum {:.4e}, max residual {:.2e}",
        grid.steps, res.solves, res.coercivity, res.max_residual
    );
    let meta = json!({
        "schema": RUN_SCHEMA,
        "command": "solve-time",
        "scheme": scheme.tag(),
        "lambda": lambda,
        "dt": grid.dt,
        "steps": grid.steps,
        "sigma0": sigma0,
        "mesh": disc.mesh.stats(),
        "materials": cfg.materials()?,
        "data": data.name(),
        "probes": cfg.probes,
        "coercivity": res.coercivity,
        "imaginary_residue": res.imaginary_residue,
        "max_residual": res.max_residual,
        "solves": res.solves,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    write_json(&paths[2], &meta)
}

fn verify_cmd(a: VerifyArgs) -> Result<(), AppError> {
    if a.manifest {
        println!("{}", serde_json::to_string_pretty(&suite_manifest()).expect("manifest serializes"));
        return Ok(());
    }
    let kinds: Vec<ProbeKind> = if a.suite == "all" {
        ProbeKind::ALL.to_vec()
    } else {
        a.suite
            .split(',')
            .map(|n| ProbeKind::parse(n.trim()).ok_or_else(|| AppError::Config(format!("unknown probe '{n}'"))))
            .collect::<Result<_, _>>()?
    };
    let opts = ProbeOptions { level: a.level, seed: a.seed };
    let mut reports: Vec<ProbeReport> = Vec::new();
    for k in kinds {
        let r = run_probe(k, &opts)?;
        print!("{}", r.table());
        reports.push(r);
    }
    if let Some(p) = &a.json {
        write_json(p, &serde_json::to_value(&reports).expect("reports serialize"))?;
    }
    let failed = reports.iter().filter(|r| !r.passed).count();
    if failed > 0 {
        Err(AppError::ProbeFailed(failed))
    } else {
        Ok(())
    }
}

fn mesh_info_cmd(a: MeshArgs) -> Result<(), AppError> {
    let cfg = a.common.config()?;
    let mesh = cfg.mesh()?;
    let stats = mesh.stats();
    let report = validate_mesh(&mesh);
    if a.json {
        let v = json!({ "schema": RUN_SCHEMA, "command": "mesh-info", "stats": stats, "valid": report.all_passed(), "checks": report.lines() });
        println!("{}", serde_json::to_string_pretty(&v).expect("json serializes"));
    } else {
        println!("vertices            {}", stats.vertices);
        println!("triangles           {} (D {}, N {}, I {}, J {})", stats.triangles, stats.dirichlet_triangles, stats.neumann_triangles, stats.impedance_triangles, stats.jump_triangles);
        println!("max edge length     {:.4}", stats.max_edge_length);
        println!("total area          {:.6}", stats.total_area);
        for line in report.lines() {
            println!("{line}");
        }
    }
    if report.all_passed() {
        Ok(())
    } else {
        Err(AppError::Config("mesh failed validation".into()))
    }
}

fn export_cmd(a: ExportArgs) -> Result<(), AppError> {
    let cfg = a.common.config()?;
    let mesh = cfg.mesh()?;
    match a.format {
        ExportFormat::Off => save(&mesh, &a.out, MeshFormat::Off),
        ExportFormat::Msh => save(&mesh, &a.out, MeshFormat::Msh2),
        ExportFormat::Coo => {
            let disc = build_disc(mesh, &cfg)?;
            let mut out = BufWriter::new(File::create(&a.out).map_err(|e| io_error(&a.out, e))?);
            disc.map.export_coo(&mut out).and_then(|_| out.flush()).map_err(|e| io_error(&a.out, e))
        }
        ExportFormat::Dump => {
            let s = parse_complex(&a.s).ok_or_else(|| AppError::Config(format!("cannot parse frequency '{}'", a.s)))?;
            let disc = build_disc(mesh, &cfg)?;
            let (matrix, tag) = match a.operator {
                DumpOperator::System => (assemble_system(s, &disc, &DefaultImpedance, cfg.sigma0()?)?.matrix, 0),
                op => {
                    let sub = Subdomain::from_number(a.subdomain).ok_or_else(|| AppError::Config(format!("no subdomain {}", a.subdomain)))?;
                    let j = disc.boundaries.iter().position(|b| b.subdomain == sub).ok_or_else(|| AppError::Config(format!("mesh has no subdomain {}", a.subdomain)))?;
                    let wanted = Wanted { v: matches!(op, DumpOperator::V), k: matches!(op, DumpOperator::K | DumpOperator::Kp), w: matches!(op, DumpOperator::W) };
                    let set = assemble_operators(s, &disc.boundaries[j], &disc.media[j], wanted, &disc.orders).map_err(|e| AppError::Numerical(e.to_string()))?;
                    match op {
                        DumpOperator::V => (set.v.expect("requested"), OperatorKind::V.tag()),
                        DumpOperator::K => (set.k.expect("requested"), OperatorKind::K.tag()),
                        DumpOperator::Kp => (set.k.expect("requested").transpose().to_owned(), OperatorKind::KPrime.tag()),
                        _ => (set.w.expect("requested"), OperatorKind::W.tag()),
                    }
                }
            };
            let mut out = BufWriter::new(File::create(&a.out).map_err(|e| io_error(&a.out, e))?);
            write_matrix_dump(&mut out, &matrix, tag, s).and_then(|_| out.flush()).map_err(|e| io_error(&a.out, e))
        }
    }
}

fn save(mesh: &SurfaceMesh, path: &Path, format: MeshFormat) -> Result<(), AppError> {
    save_mesh(mesh, path, format).map_err(|e| io_error(path, e))
}

