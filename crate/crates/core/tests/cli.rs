use std::path::Path;
use std::process::{Command, Output};
use wavebem::mesh::{generate_builtin, read_msh2, read_off, BuiltinKind};
use wavebem::operators::read_matrix_dump;

fn wavebem(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wavebem")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn unknown_config_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[time]\nsteps = 8\nstep_size = 0.1\n").unwrap();
    let o = wavebem(&["solve-time", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("step_size") && err.contains("line 3"), "{err}");
}

#[test]
fn frequency_solve_writes_error_csv_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = wavebem(&["solve-frequency", "--builtin", "icosphere:2", "--s", "2+1i", "--manufactured", "point-source", "--out-dir", out, "--stem", "ico"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("ico_errors.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    let neumann: f64 = rows[0][3].parse().unwrap();
    assert!(neumann > 0.0 && neumann < 0.1, "{neumann}");
    let meta = json(&dir.path().join("ico.json"));
    assert_eq!(meta["schema"], "wavebem.run/1");
    assert_eq!(meta["mesh"]["triangles"], 320);
}

#[test]
fn time_solve_of_zero_data_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("zero.toml");
    std::fs::write(&cfg, format!("probes = [[0.0, 0.0, 0.3]]\n[geometry]\nbuiltin = \"split_ball:2\"\n[data]\nkind = \"zero\"\n[time]\ndt = 0.2\nsteps = 8\n[output]\ndir = {:?}\nstem = \"z\"\n", dir.path())).unwrap();
    let o = wavebem(&["solve-time", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("z_traces.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["step", "time", "boundary", "trace", "index", "value"]);
    for r in rdr.records() {
        assert_eq!(r.unwrap()[5].parse::<f64>().unwrap(), 0.0);
    }
    let meta = json(&dir.path().join("z.json"));
    assert_eq!(meta["scheme"], "bdf2");
    assert_eq!(meta["steps"], 8);
    assert!(meta["lambda"].as_f64().unwrap() < 1.0);
}

#[test]
fn verify_reports_schema_and_rejects_unknown_suite() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pairing.json");
    let o = wavebem(&["verify", "--suite", "pairing,dissipativity", "--json", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let reports = json(&path);
    assert_eq!(reports.as_array().unwrap().len(), 2);
    assert_eq!(reports[0]["schema"], "wavebem.probe/1");
    assert_eq!(reports[0]["passed"], true);
    assert_eq!(code(&wavebem(&["verify", "--suite", "everything"])), 2);
    let manifest = wavebem(&["verify", "--manifest"]);
    let m: serde_json::Value = serde_json::from_slice(&manifest.stdout).unwrap();
    assert_eq!(m.as_array().unwrap().len(), 11);
}

#[test]
fn probe_failure_exits_1() {
    // The interface probe's 1e-6 trace threshold is not met by the discretization.
    let o = wavebem(&["verify", "--suite", "fictitious_interface", "--level", "2"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn guard_violation_exits_3() {
    let o = wavebem(&["solve-frequency", "--builtin", "icosphere:1", "--s", "0.01+1i"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn exports_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    let mesh = generate_builtin(BuiltinKind::SplitBall { level: 2, theta_d: std::f64::consts::PI / 3.0, theta_n: 2.0 * std::f64::consts::PI / 3.0 }).unwrap();
    for (fmt, name) in [("off", "m.off"), ("msh", "m.msh"), ("coo", "map.coo"), ("dump", "v.bin")] {
        let o = wavebem(&["export", "--builtin", "split_ball:2", "--format", fmt, "--out", p(name).to_str().unwrap(), "--s", "1+2i"]);
        assert_eq!(code(&o), 0, "{fmt}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert!(read_off(&std::fs::read_to_string(p("m.off")).unwrap()).unwrap().same_as(&mesh));
    let msh = std::fs::read_to_string(p("m.msh")).unwrap();
    assert!(msh.starts_with("$MeshFormat\n2.2 0 8"));
    assert!(read_msh2(&msh).unwrap().same_as(&mesh));
    let coo = std::fs::read_to_string(p("map.coo")).unwrap();
    let header: Vec<usize> = coo.lines().next().unwrap().split_whitespace().map(|x| x.parse().unwrap()).collect();
    assert_eq!(coo.lines().count(), header[2] + 1);
    let bytes = std::fs::read(p("v.bin")).unwrap();
    let (h, m) = read_matrix_dump(&mut bytes.as_slice()).unwrap();
    assert_eq!(bytes.len(), 32 + 16 * (h.rows * h.cols) as usize);
    assert_eq!((h.tag, m.nrows()), (1, h.rows as usize));
    assert_eq!((h.s.re, h.s.im), (1.0, 2.0));
}

#[test]
fn mesh_info_json() {
    let o = wavebem(&["mesh-info", "--builtin", "icosphere:1", "--json"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["stats"]["triangles"], 80);
    assert_eq!(v["valid"], true);
}
