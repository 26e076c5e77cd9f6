use std::process::{Command, Output};

use qmi::information::{InformationReport, System};
use qmi::{Configuration, Model, QuadratureScheme, Space, SymmetryClass};

fn qmi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qmi")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn report_json_round_trips_exactly() {
    let out = qmi(&["report", "--model", "box", "--L", "1", "--n", "1,2,3", "--sym", "a", "--space", "position", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let parsed: InformationReport = serde_json::from_value(value["reports"][0].clone()).unwrap();

    let config = Configuration::new(Model::Box { length: 1.0 }, vec![1, 2, 3], SymmetryClass::Antisymmetric, Space::Position).unwrap();
    let direct = System::from_configuration(&config, QuadratureScheme::finite_default()).unwrap().report().unwrap();
    assert_eq!(parsed, direct);

    let again: serde_json::Value = serde_json::from_str(&serde_json::to_string(&parsed).unwrap()).unwrap();
    assert_eq!(again, value["reports"][0]);
    assert!((parsed.entropies.s2 - -0.4709).abs() <= 2e-3);
    assert!((parsed.i_pair - 0.2321).abs() <= 2e-3);
}

#[test]
fn oscillator_report_matches_reference() {
    let out = qmi(&["report", "--model", "ho", "--omega", "1", "--n", "0,1,2", "--sym", "s", "--space", "position", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let s3 = value["reports"][0]["entropies"]["s3"].as_f64().unwrap();
    assert!((s3 - 4.1972).abs() <= 2e-3, "{s3}");
}

#[test]
fn invalid_state_is_a_usage_error() {
    let out = qmi(&["report", "--model", "box", "--n", "1,1,2", "--sym", "a"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("antisymmetric state requires distinct quantum numbers"));
}

#[test]
fn bad_flags_are_usage_errors() {
    for args in [
        vec!["report", "--format", "xml"],
        vec!["report", "--panels", "1"],
        vec!["report", "--model", "well"],
        vec!["report", "--n", "1,x"],
        vec!["frobnicate"],
        vec!["scan-superposition", "--c1sq-grid", "0,0.5"],
    ] {
        let out = qmi(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.conf");
    std::fs::write(&config, "# two-particle box\nmodel = box\nn = 1,2\nsym = a\nformat = json\n").unwrap();
    let config = config.to_str().unwrap();

    let out = qmi(&["report", "--config", config]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["reports"][0]["system"]["symmetry"], "antisymmetric");

    let out = qmi(&["report", "--config", config, "--sym", "s"]);
    let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(value["reports"][0]["system"]["symmetry"], "symmetric");

    std::fs::write(dir.path().join("bad.conf"), "colour = red\n").unwrap();
    let out = qmi(&["report", "--config", dir.path().join("bad.conf").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn output_is_deterministic_and_written_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let args = ["report", "--n", "1,2,4", "--sym", "s", "--format", "csv", "--panels", "12"];
    let first = qmi(&args);
    let out = qmi(&[&args[..], &["--out", path.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let written = std::fs::read(&path).unwrap();
    assert_eq!(written, first.stdout);
    let text = String::from_utf8(written).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "space,s1,s2,s3,I,I3,I_rho_gamma,I_gamma_gamma,I^3,err(s1),err(s2),err(s3),converged"
    );
    assert!(lines.next().unwrap().starts_with("position,"));
}

#[test]
fn coarse_tables_fail_with_offenders() {
    let out = qmi(&["tables", "1", "--panels", "2", "--nodes", "8"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("cells outside tolerance"), "{err}");
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn superposition_scan_endpoints_match_pure_states() {
    let scan = qmi(&["scan-superposition", "--sym", "s", "--c1sq-grid", "0,0.5,1", "--panels", "8", "--tol", "1e-2"]);
    assert_eq!(scan.status.code(), Some(0), "{}", stderr(&scan));
    let text = stdout(&scan);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(text.starts_with("c1sq,s1,s2,s3,I_pair,I3,I_rho_gamma,I_gamma_gamma,I_higher\n"));

    for (row, ns) in [(&rows[2], "1,2,3"), (&rows[0], "4,5,6")] {
        let pure = qmi(&["report", "--sym", "s", "--n", ns, "--panels", "8", "--tol", "1e-2", "--format", "json"]);
        let value: serde_json::Value = serde_json::from_str(&stdout(&pure)).unwrap();
        let s3 = value["reports"][0]["entropies"]["s3"].as_f64().unwrap();
        assert!((row[3] - s3).abs() <= 1e-6, "{ns}: {} vs {s3}", row[3]);
    }
}

#[test]
fn momentum_pair_information_grows_with_n3() {
    let out = qmi(&["scan-n3", "--space", "momentum", "--pair-only", "--n3", "3:6", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    for sym in ["antisymmetric", "symmetric"] {
        let series: Vec<f64> = rows
            .as_array()
            .unwrap()
            .iter()
            .filter(|r| r["symmetry"] == sym)
            .map(|r| r["i_pair"].as_f64().unwrap())
            .collect();
        assert_eq!(series.len(), 4);
        assert!(series.windows(2).all(|w| w[1] > w[0]), "{sym}: {series:?}");
    }
}

#[test]
fn density_grid_export() {
    let out = qmi(&["density-grid", "--n", "1,2,3", "--sym", "a", "--x1", "0:1:11", "--x2", "0:1:11"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "x1,x2,value");
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 121);
    for r in rows.iter().filter(|r| (r[0] - r[1]).abs() < 1e-12) {
        assert!(r[2].abs() < 1e-12, "Fermi hole at {r:?}");
    }

    let out = qmi(&["density-grid", "--x1", "0:1"]);
    assert_eq!(out.status.code(), Some(2));
}
