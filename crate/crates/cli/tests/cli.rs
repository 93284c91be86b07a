use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn equilib(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_equilib")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

fn s(p: &Path) -> String {
    p.to_str().unwrap().to_owned()
}

const QUBIT: &str = r#"{"energies":[0,1],"multiplicities":[1,1]}"#;
const PLUS: &str = r#"{"type":"pure","re":[0.7071067811865476,0.7071067811865476],"im":[0,0]}"#;
const SIGMA_X: &str = r#"{"rows":2,"cols":2,"re":[0,1,1,0],"im":[0,0,0,0]}"#;

/// Inputs generated for a model, in `dir/inputs`.
fn generated(dir: &Path, model: &str) -> PathBuf {
    let spec = write(dir, "model.json", model);
    let inputs = dir.join("inputs");
    let o = equilib(&["--out", &s(&inputs), "generate-model", "--model", &spec, "--seed", "4"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    inputs
}

#[test]
fn analyze_spectrum_writes_gap_tables() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", r#"{"energies":[0,1,3],"multiplicities":[1,2,1]}"#);
    let out = dir.path().join("out");
    let o = equilib(&["--out", &s(&out), "analyze-spectrum", "--hamiltonian", &h]);
    assert_eq!(code(&o), 0);
    let gaps = read(&out, "gaps.csv");
    let mut lines = gaps.lines();
    assert_eq!(lines.next(), Some("alpha_i,alpha_j,gap"));
    assert_eq!(lines.count(), 6);
    assert!(read(&out, "gap_density.csv").starts_with("eps,N_eps\n"));
    let report: serde_json::Value = serde_json::from_str(&read(&out, "spectrum_report.json")).unwrap();
    assert_eq!(report["d"], 4);
    assert_eq!(report["d_E"], 3);
    assert_eq!(report["D_G"], 1);
    assert_eq!(report["eps_min"], 1.0);
}

#[test]
fn single_energy_spectrum_has_no_gaps_and_zero_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", r#"{"energies":[1.5],"multiplicities":[2]}"#);
    let st = write(dir.path(), "s.json", r#"{"type":"pure","re":[1,0],"im":[0,0]}"#);
    let out = dir.path().join("out");
    let o = equilib(&["--out", &s(&out), "analyze-spectrum", "--hamiltonian", &h]);
    assert_eq!(code(&o), 0);
    assert_eq!(read(&out, "gaps.csv"), "alpha_i,alpha_j,gap\n");
    let o =
        equilib(&["--out", &s(&out), "verify-bounds", "--hamiltonian", &h, "--state", &st, "--T-grid", "1:10:3:log"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(&out, "certification.csv");
    assert_eq!(csv.lines().count(), 4);
    for row in csv.lines().skip(1) {
        let cells: Vec<&str> = row.split(',').collect();
        assert_eq!(cells[4].parse::<f64>().unwrap(), 0.0);
        assert_eq!(cells[6], "true");
    }
}

#[test]
fn one_point_time_grid() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", QUBIT);
    let st = write(dir.path(), "s.json", PLUS);
    let a = write(dir.path(), "a.json", SIGMA_X);
    let out = dir.path().join("out");
    let o = equilib(&[
        "--out",
        &s(&out),
        "sweep-T",
        "--hamiltonian",
        &h,
        "--state",
        &st,
        "--observable",
        &a,
        "--T-grid",
        "1:1:1:log",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = read(&out, "sweep.csv");
    let rows: Vec<&str> = sweep.lines().collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("T,deviation,deviation_bound,"));
    let deviation: f64 = rows[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((deviation - (0.5 + 2f64.sin() / 4.0)).abs() < 1e-10);
}

#[test]
fn sweep_reports_subsystem_and_measurement_columns() {
    let dir = tempfile::tempdir().unwrap();
    let model = r#"{"family":"composite_noninteracting","a":{"family":"equally_spaced","levels":2},"b":{"family":"equally_spaced","levels":2,"spacing":1.7}}"#;
    let inputs = generated(dir.path(), model);
    let out = dir.path().join("out");
    let o = equilib(&[
        "--out",
        &s(&out),
        "sweep-T",
        "--hamiltonian",
        &s(&inputs.join("hamiltonian.json")),
        "--state",
        &s(&inputs.join("state.json")),
        "--measurements",
        &s(&inputs.join("measurements.json")),
        "--subsystem-dims",
        "2,2",
        "--T-grid",
        "0.5:50:4:log",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = read(&out, "sweep.csv");
    let header: Vec<&str> = sweep.lines().next().unwrap().split(',').collect();
    assert!(header.iter().any(|c| c.starts_with("set_")));
    assert!(header.iter().any(|c| c.starts_with("subsystem_")));
    for row in sweep.lines().skip(1) {
        assert_eq!(row.split(',').count(), header.len());
    }
}

#[test]
fn violations_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", QUBIT);
    let st = write(dir.path(), "s.json", PLUS);
    let a = write(dir.path(), "a.json", SIGMA_X);
    let out = s(&dir.path().join("out"));
    let base = ["--out", &out, "verify-bounds", "--hamiltonian", &h, "--state", &st, "--observable", &a];
    assert_eq!(code(&equilib(&base)), 0);
    let mut scaled = base.to_vec();
    scaled.extend(["--bound-scale", "0.1"]);
    let o = equilib(&scaled);
    assert_eq!(code(&o), 1);
    assert!(read(Path::new(&out), "certification.csv").contains(",false,"));
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let st = write(dir.path(), "s.json", PLUS);
    let out = s(&dir.path().join("out"));
    let cases = [
        ("{\"energies\": [0, 1],", "line 1"),
        (r#"{"energies":[0,1],"multiplicities":[1,1],"foo":1}"#, "unknown field `foo`"),
        (r#"{"energies":[0,1],"multiplicities":[1,0]}"#, ""),
        (r#"{"energies":[0,1,2],"multiplicities":[1,1,1]}"#, ""),
    ];
    for (text, needle) in cases {
        let h = write(dir.path(), "h.json", text);
        let o = equilib(&["--out", &out, "verify-bounds", "--hamiltonian", &h, "--state", &st]);
        let stderr = String::from_utf8_lossy(&o.stderr);
        assert_eq!(code(&o), 2, "{text}: {stderr}");
        assert!(stderr.contains(needle), "{text}: {stderr}");
    }
    let h = write(dir.path(), "h.json", QUBIT);
    for args in [
        vec!["verify-bounds", "--hamiltonian", &h, "--state", "/nonexistent/state.json"],
        vec!["verify-bounds", "--hamiltonian", &h, "--state", &st, "--T-grid", "10:1:3:log"],
        vec!["verify-bounds", "--hamiltonian", &h, "--state", &st, "--subsystem-dims", "3,1"],
        vec!["no-such-command"],
    ] {
        let mut full = vec!["--out", out.as_str()];
        full.extend(args.iter().copied());
        assert_eq!(code(&equilib(&full)), 2, "{args:?}");
    }
}

#[test]
fn coarse_pitch_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = generated(dir.path(), r#"{"family":"equally_spaced","levels":3}"#);
    let o = equilib(&[
        "--out",
        &s(&dir.path().join("out")),
        "verify-bounds",
        "--hamiltonian",
        &s(&inputs.join("hamiltonian.json")),
        "--state",
        &s(&inputs.join("state.json")),
        "--measurements",
        &s(&inputs.join("measurements.json")),
        "--pitch",
        "5",
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn tolerance_overrides_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", QUBIT);
    let out = s(&dir.path().join("out"));
    let run = |env: &str| {
        Command::new(env!("CARGO_BIN_EXE_equilib"))
            .env("EQUILIB_TOL_OVERRIDES", env)
            .args(["--out", &out, "analyze-spectrum", "--hamiltonian", &h])
            .output()
            .unwrap()
    };
    assert_eq!(code(&run(r#"{"bound_slack":1e-8}"#)), 0);
    assert_eq!(code(&run(r#"{"no_such_tolerance":1}"#)), 2);
}

#[test]
fn distinguishability_of_a_state_from_itself_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let h = write(dir.path(), "h.json", QUBIT);
    let st = write(dir.path(), "s.json", PLUS);
    let out = dir.path().join("out");
    let o = equilib(&["--out", &s(&out), "distinguishability", "--hamiltonian", &h, "--state", &st, "--sigma", &st]);
    assert_eq!(code(&o), 0);
    let report: serde_json::Value = serde_json::from_str(&read(&out, "distinguishability.json")).unwrap();
    assert_eq!(report["trace_distance"], 0.0);
    assert_eq!(report["helstrom_success_probability"], 0.5);
}
