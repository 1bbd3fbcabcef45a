use std::fs;
use std::path::Path;

use disindy::dynamics::SolverConfig;
use disindy::harness::{read_runs_csv, render_report, run_experiment, run_experiment_on, ExperimentConfig, InvariantConfig, Method};
use disindy::system::SystemId;

fn small(method: Method) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(SystemId::Kdv, method);
    cfg.runs = 3;
    cfg.seed = 42;
    cfg.long_term_steps = 10;
    cfg.solver = Some(SolverConfig { nt: 120, ..SolverConfig::default_for(SystemId::Kdv) });
    cfg
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

#[test]
fn identical_configs_give_identical_reports() {
    let cfg = small(Method::DiSindy);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_experiment(&cfg).unwrap().write(a.path()).unwrap();
    let reparsed = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
    run_experiment(&reparsed).unwrap().write(b.path()).unwrap();
    for f in ["runs.csv", "summary.csv", "long_term.csv", "provenance.toml", "models/run_000.toml"] {
        assert_eq!(read(a.path(), f), read(b.path(), f), "{f} differs");
    }
}

#[test]
fn summary_is_recomputable_from_runs() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&small(Method::Sindy)).unwrap();
    report.write(dir.path()).unwrap();
    let before = read(dir.path(), "summary.csv");
    let table = render_report(dir.path()).unwrap();
    assert_eq!(read(dir.path(), "summary.csv"), before);
    assert!(table.contains("success rate") && table.contains("RMSE successful") && table.contains("RMSE all"));

    let header = String::from_utf8(before).unwrap();
    let cols: Vec<&str> = header.lines().next().unwrap().split(',').collect();
    for c in ["method", "success_rate", "rmse_successful", "rmse_all"] {
        assert!(cols.contains(&c), "missing {c}");
    }
    let rows = read_runs_csv(&dir.path().join("runs.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert!(fs::read_to_string(dir.path().join("long_term.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn empty_successes_render_as_not_available() {
    let mut cfg = small(Method::Sindy);
    cfg.threshold = Some(50.0);
    cfg.long_term_steps = 0;
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.aggregates.successes, 0);
    report.write(dir.path()).unwrap();
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.lines().nth(1).unwrap().contains("N/A"), "{summary}");
}

#[test]
fn user_invariant_sets_are_verified() {
    let mut cfg = small(Method::DiSindy);
    cfg.invariants = Some(InvariantConfig {
        etas: ["u_t", "u_x", "u_xx", "u_xxx", "u_xxxx"].map(String::from).to_vec(),
        lhs: None,
        allow_numeric: false,
    });
    let err = run_experiment(&cfg).unwrap_err().to_string();
    assert!(err.contains("verification"), "{err}");

    cfg.invariants = Some(InvariantConfig {
        etas: ["u_t + u*u_x", "u_x", "u_xx", "u_xxx", "u_xxxx"].map(String::from).to_vec(),
        lhs: None,
        allow_numeric: false,
    });
    cfg.runs = 1;
    let report = run_experiment(&cfg).unwrap();
    assert!(report.runs[0].success);
}

#[test]
fn runs_are_independent_of_worker_count() {
    let cfg = small(Method::DiSindy);
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
    let one = run_experiment_on(&cfg, &pool(1)).unwrap();
    let three = run_experiment_on(&cfg, &pool(3)).unwrap();
    for (a, b) in one.runs.iter().zip(&three.runs) {
        assert_eq!(a.model, b.model);
    }
}
