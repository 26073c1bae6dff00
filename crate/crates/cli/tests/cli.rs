use std::fs;
use std::process::{Command, Output};

fn friable(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_friable")).args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let idx = r.headers().unwrap().iter().position(|h| h == name).expect("column present");
    r.records().map(|rec| rec.unwrap()[idx].to_string()).collect()
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[test]
fn rho_grid_values() {
    let out = friable(&["rho", "--u", "0.5,1,2,3", "--format", "csv"]);
    assert!(out.status.success());
    let rho: Vec<f64> = csv_column(&stdout(&out), "rho").iter().map(|s| s.parse().unwrap()).collect();
    let want = [1.0, 1.0, 0.306853, 0.048608];
    assert_eq!(rho.len(), 4);
    for (got, want) in rho.iter().zip(want) {
        assert!((got - want).abs() < 1e-6, "{got} vs {want}");
    }
}

#[test]
fn psi_grid_value() {
    let out = friable(&["psi", "--x", "100", "--y", "5", "--format", "csv"]);
    assert!(out.status.success());
    assert_eq!(csv_column(&stdout(&out), "psi"), vec!["34"]);
}

#[test]
fn alpha_grid_value() {
    let out = friable(&["alpha", "--x", "4", "--y", "2"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let alpha = v[0]["alpha"].as_f64().unwrap();
    assert!((alpha - 0.584963).abs() < 1e-6);
}

#[test]
fn golden_search_members_satisfy_bound() {
    let out = friable(&["search", "--alpha", "golden", "--theta", "1/4", "--qmax", "100", "--Y", "inf"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let qs: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["q"].as_u64().unwrap()).collect();
    assert_eq!(qs, vec![2, 3, 5, 8, 13, 21, 34, 55, 89]);
    for r in v.as_array().unwrap() {
        let q = r["q"].as_u64().unwrap();
        let members = r["members"].as_array().unwrap();
        assert!(!members.is_empty(), "q = {q}");
        for m in members {
            assert_eq!(m["within_bound"], true);
            let n = m["n"].as_u64().unwrap();
            assert_eq!(gcd(n, q), 1);
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let runs: [&[&str]; 3] = [
        &["search", "--alpha", "sqrt2", "--theta", "0.3", "--qmax", "500", "--format", "csv"],
        &["dispersion", "--q", "13", "--a", "8", "--theta", "1/4", "--N", "4,6", "--Y", "5", "--kind", "type2"],
        &["kloosterman", "--M", "50,80", "--x", "200", "--a", "3", "--q", "7", "--Y", "20"],
    ];
    for args in runs {
        let a = friable(args);
        let b = friable(args);
        assert!(a.status.success(), "{args:?}");
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn exit_codes() {
    let empty = friable(&["search", "--alpha", "golden", "--theta", "1/4", "--qmin", "50", "--qmax", "40"]);
    assert_eq!(empty.status.code(), Some(2));
    let budget = friable(&["psi", "--x", "1e9", "--y", "5", "--budget", "10"]);
    assert_eq!(budget.status.code(), Some(3));
    let bad = friable(&["psi", "--x", "abc", "--y", "5"]);
    assert_eq!(bad.status.code(), Some(4));
    let unknown = friable(&["--bogus"]);
    assert_eq!(unknown.status.code(), Some(4));
    let no_command = friable(&[]);
    assert_eq!(no_command.status.code(), Some(4));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out.csv");
    fs::write(&cfg, format!("# psi run\ncommand = psi\nx = 100\ny = 3\nformat = csv\nout = {}\n", out.display()))
        .unwrap();
    let run = friable(&["--config", cfg.to_str().unwrap(), "--y", "5"]);
    assert!(run.status.success());
    assert!(run.stdout.is_empty());
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(csv_column(&text, "psi"), vec!["34"]);

    fs::write(&cfg, "command = psi\ncolour = red\n").unwrap();
    let run = friable(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(4));
}
