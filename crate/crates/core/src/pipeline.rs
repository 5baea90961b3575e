//! End-to-end orchestration: data, hyperparameters, anchor, pilot, tuning,
//! main run, diagnostics and the files written for each.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::config::{expected_regenerations_finding, has_errors, validate_config, HyperSource, RunConfig};
use crate::diagnostics::{build_report, DiagnosticsReport, ReportSettings};
use crate::error::{Error, Result};
use crate::lasso::{default_eb_init, empirical_bayes, fit_lasso_with, EbResult, LassoFit, DEFAULT_MAX_SWEEPS};
use crate::model::{load_csv, standardize, Dataset, Hyperparams};
use crate::regeneration::{run_regenerative_chain_with, ChainTrace, RegenRule};
use crate::rng::RngStream;
use crate::samplers::GibbsKernel;
use crate::tuning::{grid_search_alpha, run_pilot, TauMarginals, Tuned};

/// Stream ids carved out of the run seed, one per stochastic stage.
pub mod streams {
    pub const EMPIRICAL_BAYES: u64 = 0;
    pub const PILOT: u64 = 1;
    pub const MAIN: u64 = 2;
    pub const BOOTSTRAP: u64 = 3;
}

pub const RESOLVED_CONFIG: &str = "resolved.conf";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn check(cfg: &RunConfig) -> Result<()> {
    let findings = validate_config(cfg);
    for f in &findings {
        warn!("{f}");
    }
    if has_errors(&findings) {
        let msgs: Vec<String> = findings.iter().map(|f| f.to_string()).collect();
        return Err(Error::Config(msgs.join("; ")));
    }
    Ok(())
}

pub fn load_dataset(cfg: &RunConfig) -> Result<Dataset> {
    let raw = load_csv(&cfg.data, &cfg.response).map_err(Error::at("load"))?;
    match cfg.standardize {
        Some(mode) => standardize(&raw, mode).map_err(Error::at("standardize")),
        None => Ok(raw),
    }
}

fn prepare_out_dir(cfg: &RunConfig) -> Result<()> {
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let path = cfg.out_dir.join(RESOLVED_CONFIG);
    fs::write(&path, cfg.to_text()).map_err(io_err(&path))
}

fn write_with<F>(dir: &Path, name: &str, f: F) -> Result<PathBuf>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    f(&mut w)
        .and_then(|_| std::io::Write::flush(&mut w))
        .map_err(io_err(&path))?;
    Ok(path)
}

fn run_eb(cfg: &RunConfig, ds: &Dataset) -> Result<EbResult> {
    let init = default_eb_init(ds)?;
    info!("empirical Bayes from λ = {:e}, σ² = {:e}", init.lambda, init.sigma2);
    let mut rng = RngStream::new(cfg.seed, streams::EMPIRICAL_BAYES);
    let res = empirical_bayes(ds, init, cfg.eb, &mut rng)?;
    if !res.converged {
        warn!(
            "empirical Bayes stopped after {} iterations without meeting the tolerance",
            res.history.len()
        );
    }
    Ok(res)
}

fn hyperparameters(cfg: &RunConfig, ds: &Dataset) -> Result<(Hyperparams, Option<EbResult>)> {
    match cfg.hyper {
        HyperSource::Fixed { lambda, sigma2 } => Ok((Hyperparams::new(lambda, sigma2)?, None)),
        HyperSource::EmpiricalBayes => {
            let res = run_eb(cfg, ds)?;
            Ok((res.hyper, Some(res)))
        }
    }
}

/// Output of [`eb`].
#[derive(Clone, Debug)]
pub struct EbOutput {
    pub result: EbResult,
    pub files: Vec<PathBuf>,
}

/// Empirical Bayes only; writes the iterate history.
pub fn eb(cfg: &RunConfig) -> Result<EbOutput> {
    check(cfg)?;
    prepare_out_dir(cfg)?;
    let ds = load_dataset(cfg)?;
    let result = run_eb(cfg, &ds).map_err(Error::at("empirical Bayes"))?;
    info!("λ = {:e}, σ = {:e}", result.hyper.lambda, result.hyper.sigma());
    let path = write_with(&cfg.out_dir, "eb_history.csv", |w| {
        use std::io::Write;
        writeln!(w, "iteration,lambda,sigma2")?;
        for (i, h) in result.history.iter().enumerate() {
            writeln!(w, "{},{:e},{:e}", i + 1, h.lambda, h.sigma2)?;
        }
        writeln!(w, "estimate,{:e},{:e}", result.hyper.lambda, result.hyper.sigma2)
    })?;
    Ok(EbOutput {
        result,
        files: vec![path],
    })
}

/// Output of [`tune`].
#[derive(Clone, Debug)]
pub struct TuneOutput {
    pub hyper: Hyperparams,
    pub lasso: LassoFit,
    pub tuned: Tuned,
    pub files: Vec<PathBuf>,
}

fn anchor(cfg: &RunConfig, ds: &Dataset, hyper: Hyperparams) -> Result<LassoFit> {
    let lambda = cfg.lasso_lambda.unwrap_or(hyper.lambda);
    let order: Vec<usize> = (0..ds.p()).collect();
    fit_lasso_with(ds, lambda, cfg.lasso_tol, &order, DEFAULT_MAX_SWEEPS)
}

struct Prepared {
    ds: Dataset,
    hyper: Hyperparams,
    kernel: GibbsKernel,
    lasso: LassoFit,
    tuned: Option<Tuned>,
    window: crate::regeneration::RegenWindow,
}

fn prepare(cfg: &RunConfig, profile_needed: bool) -> Result<Prepared> {
    let ds = load_dataset(cfg)?;
    let (hyper, _) = hyperparameters(cfg, &ds).map_err(Error::at("empirical Bayes"))?;
    info!(
        "λ = {:e}, σ² = {:e} (σ = {:e})",
        hyper.lambda,
        hyper.sigma2,
        hyper.sigma()
    );
    let lasso = anchor(cfg, &ds, hyper).map_err(Error::at("lasso"))?;
    info!(
        "lasso anchor at penalty {:e}: {} sweeps",
        lasso.lambda, lasso.iterations
    );
    let kernel = GibbsKernel::new(&ds, hyper);

    let mut rng = RngStream::new(cfg.seed, streams::PILOT);
    let pilot = run_pilot(&kernel, &lasso.beta_hat, cfg.pilot_discard, cfg.pilot_length, &mut rng)
        .map_err(Error::at("pilot"))?;
    let (tuned, window) = match cfg.alpha {
        Some(alpha) if !profile_needed => {
            let window = TauMarginals::new(&pilot)
                .and_then(|m| m.window(alpha, &lasso.beta_hat))
                .map_err(Error::at("tuning"))?;
            (None, window)
        }
        fixed => {
            let grid = cfg.alpha_grid.values();
            let tuned = grid_search_alpha(&pilot, &grid, &lasso.beta_hat).map_err(Error::at("tuning"))?;
            info!(
                "tuned α = {:.4e}, pilot mean ψ = {:.4e}",
                tuned.alpha,
                tuned.best_mean_psi()
            );
            let window = match fixed {
                Some(alpha) => TauMarginals::new(&pilot)
                    .and_then(|m| m.window(alpha, &lasso.beta_hat))
                    .map_err(Error::at("tuning"))?,
                None => tuned.window.clone(),
            };
            (Some(tuned), window)
        }
    };
    Ok(Prepared {
        ds,
        hyper,
        kernel,
        lasso,
        tuned,
        window,
    })
}

/// Stops after the α profile.
pub fn tune(cfg: &RunConfig) -> Result<TuneOutput> {
    check(cfg)?;
    prepare_out_dir(cfg)?;
    let prep = prepare(cfg, true)?;
    let tuned = prep.tuned.expect("profile requested");
    let path = write_with(&cfg.out_dir, "alpha_profile.csv", |w| tuned.profile.write_csv(w))?;
    Ok(TuneOutput {
        hyper: prep.hyper,
        lasso: prep.lasso,
        tuned,
        files: vec![path],
    })
}

/// Output of [`run_pipeline`].
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub hyper: Hyperparams,
    pub lasso: LassoFit,
    pub tuned: Option<Tuned>,
    pub trace: ChainTrace,
    pub report: DiagnosticsReport,
    pub files: Vec<PathBuf>,
}

/// Runs every stage and writes `report.md`, `report.csv`, `summary.csv`,
/// `alpha_profile.csv`, `bounds_curve.csv`, `trace.csv` and the resolved
/// config into `cfg.out_dir`.
pub fn run_pipeline(cfg: &RunConfig) -> Result<PipelineOutput> {
    check(cfg)?;
    info!("seed {}; resolved config:\n{}", cfg.seed, cfg.to_text());
    prepare_out_dir(cfg)?;
    let mut files = vec![cfg.out_dir.join(RESOLVED_CONFIG)];

    let prep = prepare(cfg, false)?;
    if let Some(tuned) = &prep.tuned {
        files.push(write_with(&cfg.out_dir, "alpha_profile.csv", |w| {
            tuned.profile.write_csv(w)
        })?);
        if let Some(f) = expected_regenerations_finding(cfg.t, tuned.best_mean_psi()) {
            warn!("{f}");
        }
    }

    let mut rng = RngStream::new(cfg.seed, streams::MAIN);
    let trace = run_regenerative_chain_with(
        &prep.kernel,
        &prep.window,
        cfg.t,
        &mut rng,
        RegenRule::Minorization,
        cfg.nu_max_attempts,
    )
    .map_err(Error::at("main run"))?;
    info!(
        "{} regenerations in {} steps, mean ψ = {:.4e}, {} ν rejections",
        trace.regenerations(),
        cfg.t,
        trace.mean_psi(),
        trace.nu_rejections
    );
    if cfg.write_trace {
        files.push(write_with(&cfg.out_dir, "trace.csv", |w| trace.write_csv(w))?);
    }

    let settings = ReportSettings {
        epsilon: cfg.epsilon,
        bootstrap_resamples: cfg.bootstrap_resamples,
        ar1_max_t: cfg.ar1_max_t,
    };
    let mut rng = RngStream::new(cfg.seed, streams::BOOTSTRAP);
    let report = build_report(&trace, &prep.ds.column_names, &settings, &mut rng).map_err(Error::at("diagnostics"))?;
    files.push(write_with(&cfg.out_dir, "report.md", |w| report.write_markdown(w))?);
    files.push(write_with(&cfg.out_dir, "report.csv", |w| report.write_csv(w))?);
    files.push(write_with(&cfg.out_dir, "summary.csv", |w| {
        report.write_summary_csv(w)
    })?);
    let curve = report.default_curve_length();
    files.push(write_with(&cfg.out_dir, "bounds_curve.csv", |w| {
        report.write_bounds_csv(w, curve)
    })?);

    Ok(PipelineOutput {
        hyper: prep.hyper,
        lasso: prep.lasso,
        tuned: prep.tuned,
        trace,
        report,
        files,
    })
}
