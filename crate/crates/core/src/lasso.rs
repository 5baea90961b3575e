//! Frequentist Lasso (the anchor `β̂` of the minorization) and Monte Carlo EM
//! for the hyperparameters.

use log::debug;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{Dataset, Hyperparams};
use crate::samplers::GibbsKernel;

/// Default cap on coordinate-descent sweeps.
pub const DEFAULT_MAX_SWEEPS: usize = 100_000;

/// Solution of `argmin_β ‖y - Xβ‖² + λ‖β‖₁`.
#[derive(Clone, Debug)]
pub struct LassoFit {
    pub beta_hat: DVector<f64>,
    pub lambda: f64,
    /// Objective at `beta_hat`.
    pub objective: f64,
    pub iterations: usize,
    /// Objective after every completed sweep.
    pub history: Vec<f64>,
}

pub fn lasso_objective(ds: &Dataset, beta: &DVector<f64>, lambda: f64) -> f64 {
    let r = &ds.y - &ds.x * beta;
    r.norm_squared() + lambda * beta.abs().sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// Cyclic coordinate descent with the natural column order.
pub fn fit_lasso(ds: &Dataset, lambda: f64, tol: f64) -> Result<LassoFit> {
    let order: Vec<usize> = (0..ds.p()).collect();
    fit_lasso_with(ds, lambda, tol, &order, DEFAULT_MAX_SWEEPS)
}

/// Cyclic coordinate descent visiting coordinates in `order`; stops once the
/// largest coordinate change in a sweep is below `tol`.
///
/// The objective has no ½ in front of the squared loss, so each coordinate
/// update soft-thresholds at `λ/2`.
pub fn fit_lasso_with(ds: &Dataset, lambda: f64, tol: f64, order: &[usize], max_sweeps: usize) -> Result<LassoFit> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ must be non-negative, got {lambda}")));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let p = ds.p();
    let gram: DMatrix<f64> = ds.x.tr_mul(&ds.x);
    let xty: DVector<f64> = ds.x.tr_mul(&ds.y);
    let mut beta = DVector::zeros(p);
    let mut history = Vec::new();

    for sweep in 1..=max_sweeps {
        let mut max_change = 0.0f64;
        for &j in order {
            let gjj = gram[(j, j)];
            let new = if gjj > 0.0 {
                let partial = xty[j] - gram.column(j).dot(&beta) + gjj * beta[j];
                soft_threshold(partial, lambda / 2.0) / gjj
            } else {
                0.0
            };
            max_change = max_change.max((new - beta[j]).abs());
            beta[j] = new;
        }
        history.push(lasso_objective(ds, &beta, lambda));
        if max_change < tol {
            debug!("lasso converged after {sweep} sweeps");
            return Ok(LassoFit {
                objective: *history.last().unwrap(),
                beta_hat: beta,
                lambda,
                iterations: sweep,
                history,
            });
        }
    }
    Err(Error::LassoNotConverged { sweeps: max_sweeps })
}

/// Largest KKT violation, in units of the gradient:
/// `max_j dist(2X_jᵀ(Xβ - y), -λ·∂|β_j|)`.
pub fn kkt_residual(ds: &Dataset, beta: &DVector<f64>, lambda: f64) -> f64 {
    let grad = (ds.x.tr_mul(&(&ds.x * beta - &ds.y))) * 2.0;
    grad.iter()
        .zip(beta.iter())
        .map(|(&g, &b)| {
            if b > 0.0 {
                (g + lambda).abs()
            } else if b < 0.0 {
                (g - lambda).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo EM settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EbSettings {
    /// Gibbs draws kept per EM iteration.
    pub samples: usize,
    /// Gibbs draws discarded at the start of every iteration.
    pub discard: usize,
    /// Maximum number of EM iterations.
    pub iterations: usize,
    /// The estimate averages this many final iterates.
    pub average_last: usize,
    /// Early stop once the last `average_last` iterates of both λ and σ²
    /// lie within this relative distance of their mean.
    pub rel_tol: f64,
}

impl Default for EbSettings {
    fn default() -> Self {
        Self {
            samples: 2000,
            discard: 200,
            iterations: 30,
            average_last: 5,
            rel_tol: 0.01,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EbResult {
    pub hyper: Hyperparams,
    /// `(λ, σ²)` after each M-step.
    pub history: Vec<Hyperparams>,
    pub converged: bool,
}

/// M-step for λ: `λ² = 2p / Σ_j E[1/τ_j]`.
pub fn lambda_update(mean_inv_tau: &[f64]) -> f64 {
    let total: f64 = mean_inv_tau.iter().sum();
    (2.0 * mean_inv_tau.len() as f64 / total).sqrt()
}

/// M-step for σ²: `E‖y - Xβ‖² / n`.
pub fn sigma2_update(mean_rss: f64, n: usize) -> f64 {
    mean_rss / n as f64
}

/// Starting point: `λ = p / Σ|β_ols|` and the unbiased OLS residual variance.
pub fn default_eb_init(ds: &Dataset) -> Result<Hyperparams> {
    let (n, p) = (ds.n(), ds.p());
    let fit = fit_lasso(ds, 0.0, 1e-10)?;
    let rss = (&ds.y - &ds.x * &fit.beta_hat).norm_squared();
    let dof = if n > p { (n - p) as f64 } else { n as f64 };
    Hyperparams::new(p as f64 / fit.beta_hat.abs().sum().max(1e-12), (rss / dof).max(1e-12))
}

fn within(values: impl Iterator<Item = f64> + Clone, rel_tol: f64) -> bool {
    let (sum, count) = values.clone().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    let mean = sum / count as f64;
    values.into_iter().all(|v| ((v - mean) / mean).abs() <= rel_tol)
}

/// Empirical Bayes by Monte Carlo EM.
///
/// Each iteration runs the Gibbs sampler at the current `(λ, σ²)`, keeps
/// `samples` draws after `discard`, and applies [`lambda_update`] and
/// [`sigma2_update`] to the sample averages. The chain is warm-started from
/// the previous iteration's last state.
pub fn empirical_bayes<R: Rng + ?Sized>(
    ds: &Dataset,
    init: Hyperparams,
    settings: EbSettings,
    rng: &mut R,
) -> Result<EbResult> {
    if settings.samples == 0 || settings.iterations == 0 || settings.average_last == 0 {
        return Err(Error::InvalidParameter(
            "empirical Bayes needs positive sample, iteration and averaging counts".into(),
        ));
    }
    let (n, p) = (ds.n(), ds.p());
    let mut hyper = init;
    let mut beta = fit_lasso(ds, hyper.lambda, 1e-8)?.beta_hat;
    let mut history = Vec::with_capacity(settings.iterations);
    let mut converged = false;

    for iteration in 1..=settings.iterations {
        let kernel = GibbsKernel::new(ds, hyper);
        let mut inv_tau = vec![0.0; p];
        let mut rss = 0.0;
        for draw in 0..settings.discard + settings.samples {
            let tau = kernel.sample_tau(&beta, rng);
            beta = kernel.sample_beta(&tau, rng)?;
            if draw >= settings.discard {
                for (acc, t) in inv_tau.iter_mut().zip(tau.iter()) {
                    *acc += 1.0 / t;
                }
                rss += (&ds.y - &ds.x * &beta).norm_squared();
            }
        }
        let m = settings.samples as f64;
        inv_tau.iter_mut().for_each(|v| *v /= m);
        let lambda = lambda_update(&inv_tau);
        let sigma2 = sigma2_update(rss / m, n);
        let ok = |v: f64| (1e-10..=1e10).contains(&v);
        if !(ok(lambda) && ok(sigma2)) {
            return Err(Error::EbDiverged {
                iteration,
                lambda,
                sigma2,
            });
        }
        hyper = Hyperparams { lambda, sigma2 };
        debug!("EM iteration {iteration}: λ = {lambda:.6e}, σ² = {sigma2:.6e}");
        history.push(hyper);

        if history.len() >= settings.average_last {
            let tail = &history[history.len() - settings.average_last..];
            if within(tail.iter().map(|h| h.lambda), settings.rel_tol)
                && within(tail.iter().map(|h| h.sigma2), settings.rel_tol)
            {
                converged = true;
                break;
            }
        }
    }

    let k = settings.average_last.min(history.len());
    let tail = &history[history.len() - k..];
    let lambda = tail.iter().map(|h| h.lambda).sum::<f64>() / k as f64;
    let sigma2 = tail.iter().map(|h| h.sigma2).sum::<f64>() / k as f64;
    Ok(EbResult {
        hyper: Hyperparams::new(lambda, sigma2)?,
        history,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> Dataset {
        Dataset::new(
            DMatrix::from_row_slice(5, 2, &[1.0, 0.2, -0.5, 1.1, 0.3, -0.7, 2.0, 0.4, -1.2, 0.9]),
            DVector::from_vec(vec![1.3, 0.1, -0.4, 2.2, -0.8]),
            vec!["a".into(), "b".into()],
        )
        .unwrap()
    }

    #[test]
    fn m_step_arithmetic() {
        assert!((lambda_update(&[1.0, 3.0]) - 1.0).abs() < 1e-15);
        assert!((sigma2_update(10.0, 5) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn zero_lambda_is_least_squares() {
        let ds = toy();
        let fit = fit_lasso(&ds, 0.0, 1e-13).unwrap();
        let ols = (ds.x.tr_mul(&ds.x)).lu().solve(&ds.x.tr_mul(&ds.y)).unwrap();
        assert!((fit.beta_hat - ols).amax() < 1e-8);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let ds = toy();
        let bound = 2.0 * ds.x.tr_mul(&ds.y).amax();
        let fit = fit_lasso(&ds, bound, 1e-12).unwrap();
        assert!(fit.beta_hat.iter().all(|&b| b == 0.0));
        let fit = fit_lasso(&ds, 0.99 * bound, 1e-12).unwrap();
        assert!(fit.beta_hat.iter().any(|&b| b != 0.0));
    }

    #[test]
    fn kkt_and_monotone_objective() {
        let ds = toy();
        let lambda = 0.7;
        let fit = fit_lasso(&ds, lambda, 1e-12).unwrap();
        assert!(kkt_residual(&ds, &fit.beta_hat, lambda) <= 1e-9 * lambda.max(1.0));
        assert!(fit.objective <= lasso_objective(&ds, &DVector::zeros(2), lambda));
        for w in fit.history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn sweep_budget_is_enforced() {
        let ds = toy();
        assert!(matches!(
            fit_lasso_with(&ds, 0.0, 1e-300, &[0, 1], 3),
            Err(Error::LassoNotConverged { sweeps: 3 })
        ));
        assert!(fit_lasso(&ds, -1.0, 1e-8).is_err());
    }
}
