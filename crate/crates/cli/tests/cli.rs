use std::fs;
use std::process::{Command, Output};

use phisub::SimulationReport;

fn phisub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phisub")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value in `column` of the first data row of an aligned table.
fn first_row_value(text: &str, column: &str) -> String {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let row: Vec<&str> = lines.next().unwrap().split_whitespace().collect();
    let j = header.iter().position(|h| *h == column).unwrap_or_else(|| panic!("no column {column}"));
    row[j].to_string()
}

#[test]
fn conjugate_example() {
    let o = phisub(&["conjugate", "--p", "3", "--y", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(first_row_value(&s, "phi_q"), "1.718951");
    assert_eq!(first_row_value(&s, "legendre"), "1.718951");
}

#[test]
fn norm_example() {
    let o = phisub(&["norm", "--model", "gaussian", "--sigma", "3", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert_eq!(first_row_value(&s, "tau"), "3");
    assert_eq!(first_row_value(&s, "method"), "Exact");
}

#[test]
fn slln_check_example() {
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("norms.csv");
    fs::write(&table, "n,tau\n1,1\n4,2\n16,4\n64,8\n").unwrap();
    for args in [
        vec!["slln-check", "--pairs", "1:1,4:2,16:4,64:8"],
        vec!["slln-check", "--table", table.to_str().unwrap()],
    ] {
        let o = phisub(&args);
        assert_eq!(o.status.code(), Some(0));
        let s = stdout(&o);
        assert_eq!(first_row_value(&s, "c"), "1");
        assert_eq!(first_row_value(&s, "alpha"), "0.5");
        assert_eq!(first_row_value(&s, "series_finite"), "true");
    }
}

#[test]
fn exit_code_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.txt");
    fs::write(&samples, "# draws\n1\n-1\n1\n-1\n").unwrap();
    let samples = samples.to_str().unwrap();
    let bad_out = dir.path().join("out.txt");
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["conjugate", "--p", "2", "--y", "-3"], 0),
        (vec!["conjugate", "--p", "1.5", "--points", "5"], 0),
        (vec!["norm", "--model", "rademacher"], 0),
        (vec!["norm", "--model", "uniform", "--h", "2"], 0),
        (vec!["norm", "--model", "empirical", "--samples", samples], 0),
        (vec!["tailbound", "--kind", "single", "--c", "1"], 0),
        (vec!["tailbound", "--kind", "mz", "--s", "1.2"], 0),
        (vec!["simulate", "--reps", "50", "--n-grid", "10,100"], 0),
        (vec!["--help"], 0),
        // usage and validation errors
        (vec![], 1),
        (vec!["frobnicate"], 1),
        (vec!["conjugate"], 1),
        (vec!["conjugate", "--p", "3", "--bogus", "1"], 1),
        (vec!["conjugate", "--p", "0.5", "--y", "1"], 1),
        (vec!["conjugate", "--p", "3", "--y", "1", "--precision", "16"], 1),
        (vec!["norm", "--model", "gaussian", "--sigma", "-1"], 1),
        (vec!["norm", "--model", "empirical"], 1),
        (vec!["norm", "--model", "empirical", "--samples", "/nonexistent/x.txt"], 1),
        (vec!["tailbound", "--kind", "single", "--p", "1"], 1),
        (vec!["tailbound", "--kind", "mz", "--s", "2.5"], 1),
        (vec!["tailbound", "--alpha", "0"], 1),
        (vec!["slln-check"], 1),
        (vec!["simulate", "--dist", "cauchy"], 1),
        (vec!["simulate", "--n-grid", "100,10"], 1),
        (vec!["norm", "--model", "rademacher", "--out", bad_out.to_str().unwrap()], 1),
        (vec!["conjugate", "--p", "2", "--config", "/nonexistent/run.cfg"], 1),
        // numeric failure: the Gaussian is not φ_p-subgaussian for p < 2
        (vec!["norm", "--model", "gaussian", "--p", "1.5"], 2),
    ];
    for (args, code) in cases {
        let o = phisub(&args);
        assert_eq!(o.status.code(), Some(code), "phisub {args:?}\nstderr: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn simulate_csv_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.csv");
    let args = ["simulate", "--dist", "martingale:d=1", "--reps", "300", "--n-grid", "10,100,1000", "--seed", "42"];
    for path in [&a, &b] {
        let mut argv = args.to_vec();
        argv.extend(["--out", path.to_str().unwrap()]);
        assert_eq!(phisub(&argv).status.code(), Some(0));
    }
    let mut argv = args.to_vec();
    argv[args.len() - 1] = "43";
    argv.extend(["--out", c.to_str().unwrap()]);
    assert_eq!(phisub(&argv).status.code(), Some(0));
    let (a, b, c) = (fs::read(a).unwrap(), fs::read(b).unwrap(), fs::read(c).unwrap());
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(String::from_utf8(a).unwrap().starts_with("n,epsilon,normalization,frequency"));
}

#[test]
fn simulate_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let o = phisub(&["simulate", "--reps", "200", "--n-grid", "10,100,1000", "--seed", "7", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let report = SimulationReport::from_json(&text).unwrap();
    assert_eq!(report.n_grid, vec![10, 100, 1000]);
    assert_eq!(report.replications, 200);
    assert_eq!(report.seeds.seed_base, 7);
    // The in-memory report for the same flags equals the re-loaded one.
    let spec = phisub::SequenceSpec::new(phisub::Distribution::Rademacher, 1000, 7).unwrap();
    let direct = phisub::convergence_report(&spec, 1.5, &[10, 100, 1000], &[0.1, 0.3, 0.5], 200, 7).unwrap();
    assert_eq!(report, direct);
    assert_eq!(SimulationReport::from_json(&report.to_json().unwrap()).unwrap(), report);
}

#[test]
fn table_json_and_csv_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("t.json");
    let csv = dir.path().join("t.csv");
    for path in [&json, &csv] {
        let o = phisub(&["tailbound", "--n", "1000", "--eps", "0.3", "--out", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let row = &v[0];
    assert_eq!(row["kind"], "partial-sum");
    assert_eq!(row["n"], 1000);
    assert_eq!(row["valid"], true);
    let csv = fs::read_to_string(&csv).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "kind,n,epsilon,bound,valid");
    let fields: Vec<&str> = lines.next().unwrap().split(',').collect();
    let bound: f64 = fields[3].parse().unwrap();
    assert_eq!(bound, row["bound"].as_f64().unwrap());
}

#[test]
fn config_file_defaults_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "# experiment\np = 3\ny = 1\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&phisub(&["conjugate", "--config", cfg]));
    assert_eq!(first_row_value(&from_file, "y"), "1");
    let overridden = stdout(&phisub(&["conjugate", "--config", cfg, "--y", "2"]));
    assert_eq!(first_row_value(&overridden, "y"), "2");
    assert_eq!(first_row_value(&overridden, "phi_q"), "1.718951");
}

#[test]
fn precision_flag() {
    let s = stdout(&phisub(&["--precision", "12", "conjugate", "--p", "3", "--y", "2"]));
    assert_eq!(first_row_value(&s, "phi_q"), "1.718951416497");
}
