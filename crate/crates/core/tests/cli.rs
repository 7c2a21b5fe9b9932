use std::process::Command;

use intflux::cli::run;
use serde_json::Value;

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("intflux").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path_str(p: &std::path::Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn binary_flux_of_monopole() {
    let out = Command::new(env!("CARGO_BIN_EXE_intflux"))
        .args(["flux", "--builtin", "monopole", "--center", "0,0,0", "--radius", "0.5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-12, "{v}");
}

#[test]
fn scaled_monopole_report_fails_with_exit_two() {
    let (code, out, _) = call(&[
        "report", "--builtin", "monopole", "--scale", "0.37", "--center", "0,0,0", "--radii", "0.25,0.5,1", "--tau", "1e-3",
    ]);
    assert_eq!(code, 2);
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["command"], "report");

    let (code, _, _) = call(&["report", "--builtin", "monopole", "--center", "0,0,0", "--radii", "0.25,0.5,1", "--tau", "1e-3"]);
    assert_eq!(code, 0);
}

#[test]
fn counterexample_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("out.json");
    let (code, _, err) = call(&["counterexample", "--k", "2", "--report", path_str(&report)]);
    assert_eq!(code, 0, "{err}");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["segment_count"], 27);
    assert_eq!(v["mass_Ik"], "27/64");
}

#[test]
fn seeded_output_is_reproducible() {
    let args = ["metric", "--seed", "7", "--h1", "random:1", "--h2", "random:1"];
    let (c1, a, _) = call(&args);
    let (c2, b, _) = call(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (_, c, _) = call(&["metric", "--seed", "8", "--h1", "random:1", "--h2", "random:1"]);
    assert_ne!(a, c);
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(call(&["flux", "--builtin", "monopole"]).0, 64);
    assert_eq!(call(&["nonsense"]).0, 64);
    assert_eq!(call(&["flux", "--builtin", "monopole", "--center", "1,2", "--radius", "1"]).0, 64);
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["--version"]).0, 0);
}

#[test]
fn runtime_errors_exit_one() {
    let (code, _, err) = call(&["flux", "--field", "/nonexistent/x.fld", "--center", "0,0,0", "--radius", "1"]);
    assert_eq!(code, 1);
    assert!(!err.is_empty());
}

#[test]
fn minimize_writes_trace_and_field() {
    let dir = tempfile::tempdir().unwrap();
    let atoms = dir.path().join("atoms.json");
    std::fs::write(&atoms, r#"[{"point":[0.25,0.5,0.5],"charge":1},{"point":[0.75,0.5,0.5],"charge":-1}]"#).unwrap();
    let fld_path = dir.path().join("x.fld");
    let (code, out, err) =
        call(&["minimize", "--atoms", path_str(&atoms), "--grid", "7", "--out", path_str(&fld_path)]);
    assert_eq!(code, 0, "{err}");
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("iter,objective,div_residual"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert!(rows.len() >= 2);
    assert!(rows.last().unwrap()[2] <= 1e-8);
    let field = intflux::fld::load(&fld_path).unwrap();
    assert_eq!(field.spec.dims, [7, 7, 7]);
}

#[test]
fn maximal_reads_scan_csv() {
    let dir = tempfile::tempdir().unwrap();
    let scan = dir.path().join("scan.csv");
    let (code, _, err) = call(&[
        "scan", "--builtin", "monopole", "--center", "0,0,0", "--r-min", "0.2", "--r-max", "1",
        "--radii", "24", "--out", path_str(&scan),
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, out, err) = call(&["maximal", "--scan", path_str(&scan), "--builtin", "monopole", "--center", "0,0,0"]);
    assert_eq!(code, 0, "{err}{out}");
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["pass"], true);
    assert!(v["worst_slack_i"].as_f64().unwrap() >= -1e-12);
    assert!(v["weak_bound_ratio"].as_f64().unwrap() <= 3.0);
}

#[test]
fn growth_csv() {
    let (code, out, _) = call(&["growth", "--p", "1.2", "--k", "1,2", "--format", "csv"]);
    assert_eq!(code, 0);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "p,k,norm,energy,energy_per_mass,bounded");
    assert_eq!(lines.len(), 3);
}
