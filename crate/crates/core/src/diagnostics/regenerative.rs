//! Estimators built on the iid tour decomposition.

use log::warn;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::TourStats;
use crate::regeneration::ChainTrace;
use crate::tuning::quantile_sorted;

/// `(1/(t+1)) Σ_{k=0}^{t} β_j(X_k)` over every state of the trace.
pub fn ergodic_mean(trace: &ChainTrace, coordinate: usize) -> f64 {
    mean(trace.states.iter().map(|s| s.beta[coordinate]))
}

fn mean(values: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = values.len();
    values.sum::<f64>() / n as f64
}

fn require_tours(tours: &[TourStats]) -> Result<()> {
    if tours.len() < 2 {
        return Err(Error::InsufficientTours { found: tours.len() });
    }
    Ok(())
}

/// Ratio estimator of the time-average variance constant for monitored
/// function `coordinate`: `Σ_r (H_r - q̂ M_r)² / t`.
pub fn tavc_estimate(tours: &[TourStats], coordinate: usize, q_hat: f64, t: usize) -> Result<f64> {
    require_tours(tours)?;
    let covered: usize = tours.iter().map(|r| r.length).sum();
    if t < covered {
        return Err(Error::InvalidParameter(format!(
            "t = {t} is shorter than the {covered} steps covered by complete tours"
        )));
    }
    let ss: f64 = tours
        .iter()
        .map(|r| {
            let d = r.sums[coordinate] - q_hat * r.length as f64;
            d * d
        })
        .sum();
    Ok(ss / t as f64)
}

/// Standard error `sqrt(γ̂²/t)` of the ergodic mean.
pub fn tavc_std_err(tavc: f64, t: usize) -> f64 {
    (tavc / t as f64).sqrt()
}

/// Batch means: variance of the means of `n_batches` contiguous batches,
/// `(1/(n-1)) Σ_k (X̃_k - X̄)²`. A trailing remainder that does not fill a
/// batch is dropped with a warning. The standard error of the overall mean
/// is `sqrt(result / n_batches)`.
pub fn batch_means(values: &[f64], n_batches: usize) -> Result<f64> {
    if n_batches < 2 {
        return Err(Error::InvalidParameter("batch means needs at least two batches".into()));
    }
    let m = values.len() / n_batches;
    if m == 0 {
        return Err(Error::InvalidParameter(format!(
            "{} values cannot fill {n_batches} batches",
            values.len()
        )));
    }
    let used = m * n_batches;
    if used < values.len() {
        warn!("batch means: dropping {} trailing values", values.len() - used);
    }
    let grand = values[..used].iter().sum::<f64>() / used as f64;
    let ss: f64 = values[..used]
        .chunks_exact(m)
        .map(|b| {
            let d = b.iter().sum::<f64>() / m as f64 - grand;
            d * d
        })
        .sum();
    Ok(ss / (n_batches - 1) as f64)
}

/// Plug-in `η̂ = (ΣM² - ΣM) / (2ΣM)`.
pub fn eta_point(tours: &[TourStats]) -> Result<f64> {
    require_tours(tours)?;
    Ok(eta_of(tours.iter().map(|r| r.length)))
}

fn eta_of(lengths: impl Iterator<Item = usize>) -> f64 {
    let (s1, s2) = lengths.fold((0u128, 0u128), |(a, b), m| (a + m as u128, b + (m * m) as u128));
    (s2 - s1) as f64 / (2 * s1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EtaEstimate {
    pub eta: f64,
    /// 95% percentile-bootstrap interval over tours.
    pub ci: (f64, f64),
}

pub const DEFAULT_BOOTSTRAP_RESAMPLES: usize = 2000;

/// `η̂` with a nonparametric bootstrap interval (tours resampled with
/// replacement, percentile method).
pub fn eta_estimate<R: Rng + ?Sized>(tours: &[TourStats], resamples: usize, rng: &mut R) -> Result<EtaEstimate> {
    let eta = eta_point(tours)?;
    let n = tours.len();
    let mut boot: Vec<f64> = (0..resamples)
        .map(|_| eta_of((0..n).map(|_| tours[rng.random_range(0..n)].length)))
        .collect();
    boot.sort_by(f64::total_cmp);
    let ci = if boot.is_empty() {
        (eta, eta)
    } else {
        (quantile_sorted(&boot, 0.025), quantile_sorted(&boot, 0.975))
    };
    Ok(EtaEstimate { eta, ci })
}

/// `⌈x⌉`, treating values within a few ulps of an integer as that integer.
pub(crate) fn ceil_snapped(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 8.0 * f64::EPSILON * r.abs().max(1.0) {
        r as u64
    } else {
        x.ceil() as u64
    }
}

/// ε-burn-in estimate `⌈η̂/ε⌉`.
pub fn burnin_estimate(tours: &[TourStats], epsilon: f64) -> Result<u64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }
    Ok(ceil_snapped(eta_point(tours)? / epsilon))
}
