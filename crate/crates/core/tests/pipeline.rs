mod common;

use std::fs;
use std::path::Path;

use common::*;
use regen_lasso::config::{validate_config, RunConfig, Severity};
use regen_lasso::diagnostics::fmt_sci;
use regen_lasso::pipeline::{eb, run_pipeline, tune};
use regen_lasso::Error;

fn write_one_predictor_csv(dir: &Path) -> std::path::PathBuf {
    let ds = synthetic(80, &[1.2], 1.0, 90);
    let mut text = String::from("x,y\n");
    for i in 0..ds.n() {
        text.push_str(&format!("{},{}\n", ds.x[(i, 0)], ds.y[i]));
    }
    let path = dir.join("one.csv");
    fs::write(&path, text).unwrap();
    path
}

fn one_predictor_config(dir: &Path) -> RunConfig {
    let mut cfg = RunConfig {
        data: write_one_predictor_csv(dir),
        ..Default::default()
    };
    cfg.apply_override("hyper=fixed").unwrap();
    cfg.apply_override("lambda=1.0").unwrap();
    cfg.apply_override("sigma2=1.0").unwrap();
    cfg.apply_override("t=3000").unwrap();
    cfg.apply_override("bootstrap_resamples=200").unwrap();
    cfg.out_dir = dir.join("out");
    cfg
}

#[test]
fn one_predictor_pipeline_completes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_predictor_config(dir.path());
    let out = run_pipeline(&cfg).unwrap();
    for name in [
        "report.md",
        "report.csv",
        "summary.csv",
        "alpha_profile.csv",
        "bounds_curve.csv",
        "trace.csv",
        "resolved.conf",
    ] {
        assert!(cfg.out_dir.join(name).is_file(), "{name} missing");
    }
    assert_eq!(out.report.t, 3000);
    assert_eq!(out.report.tours, out.trace.regenerations());
    assert!(out.report.tours >= 2);
    assert!(out.report.rows[0].std_err >= 0.0);
    assert!(out.trace.psi.iter().all(|p| (0.0..=1.0).contains(p)));
    let resolved = RunConfig::from_file(cfg.out_dir.join("resolved.conf")).unwrap();
    assert_eq!(resolved, cfg);

    let curve = fs::read_to_string(cfg.out_dir.join("bounds_curve.csv")).unwrap();
    let mut lines = curve.lines();
    assert_eq!(lines.next(), Some("t,regenerative_bound,hellinger,kl"));
    assert!(lines.count() as u64 > out.report.burnin.min(200));
}

#[test]
fn same_seed_gives_identical_report() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = one_predictor_config(dir.path());
    run_pipeline(&cfg).unwrap();
    let first = fs::read(cfg.out_dir.join("report.csv")).unwrap();
    cfg.out_dir = dir.path().join("again");
    run_pipeline(&cfg).unwrap();
    assert_eq!(first, fs::read(cfg.out_dir.join("report.csv")).unwrap());
    cfg.seed += 1;
    cfg.out_dir = dir.path().join("other");
    run_pipeline(&cfg).unwrap();
    assert_ne!(first, fs::read(cfg.out_dir.join("report.csv")).unwrap());
}

#[test]
fn relative_error_columns_recompute_from_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = one_predictor_config(dir.path());
    run_pipeline(&cfg).unwrap();
    let md = fs::read_to_string(cfg.out_dir.join("report.md")).unwrap();
    let rows: Vec<Vec<&str>> = md
        .lines()
        .skip(2)
        .take_while(|l| l.starts_with('|'))
        .map(|l| l.trim_matches('|').split('|').map(str::trim).collect())
        .collect();
    assert!(!rows.is_empty());
    for r in rows {
        let num = |i: usize| r[i].parse::<f64>().unwrap();
        assert_eq!(r[4], fmt_sci(num(2) / num(1).abs()));
        if !r[3].is_empty() {
            assert_eq!(r[5], fmt_sci(num(3) / num(1).abs()));
        }
    }
}

#[test]
fn tune_and_eb_verbs() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = one_predictor_config(dir.path());
    let t = tune(&cfg).unwrap();
    assert_eq!(t.tuned.profile.values.len(), 30);
    assert!(cfg.out_dir.join("alpha_profile.csv").is_file());
    assert!(!cfg.out_dir.join("trace.csv").exists());

    cfg.apply_override("hyper=empirical-bayes").unwrap();
    cfg.apply_override("eb_samples=300").unwrap();
    cfg.apply_override("eb_iterations=5").unwrap();
    let e = eb(&cfg).unwrap();
    assert!(e.result.hyper.lambda > 0.0 && e.result.hyper.sigma2 > 0.0);
    assert!(cfg.out_dir.join("eb_history.csv").is_file());
}

#[test]
fn validation_examples() {
    let cfg = RunConfig::from_file(config_path("diabetes.conf")).unwrap();
    assert_eq!(validate_config(&cfg), vec![]);
    let cfg = RunConfig::from_file(config_path("boston.conf")).unwrap();
    assert_eq!(validate_config(&cfg), vec![]);

    let mut bad = cfg.clone();
    bad.epsilon = 0.0;
    let f = validate_config(&bad);
    assert!(f.iter().any(|f| f.key == "epsilon" && f.severity == Severity::Error));

    let mut short = cfg.clone();
    short.t = 50;
    assert!(validate_config(&short)
        .iter()
        .any(|f| f.key == "t" && f.severity == Severity::Error));

    let mut missing = cfg;
    missing.data = "/no/such/file.csv".into();
    assert!(matches!(run_pipeline(&missing), Err(Error::Config(_))));
}

#[test]
fn errors_name_their_stage() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = one_predictor_config(dir.path());
    cfg.response = "nope".into();
    match run_pipeline(&cfg) {
        Err(Error::Stage { stage, source }) => {
            assert_eq!(stage, "load");
            assert!(matches!(*source, Error::MissingColumn(_)));
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn too_few_tours_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_file(config_path("diabetes.conf")).unwrap();
    cfg.t = 100;
    cfg.out_dir = dir.path().to_path_buf();
    let err = run_pipeline(&cfg).unwrap_err();
    assert!(matches!(err.root(), Error::InsufficientTours { .. }), "{err}");
    assert!(matches!(
        err,
        Error::Stage {
            stage: "diagnostics",
            ..
        }
    ));
    assert!(err.to_string().contains("at least two regenerations"));
}
