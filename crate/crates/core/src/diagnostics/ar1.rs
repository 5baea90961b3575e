//! Lag-1 autoregressive approximation of a chain coordinate.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ar1Fit {
    pub c: f64,
    pub rho: f64,
    pub sigma_eps: f64,
    pub y0: f64,
}

impl Ar1Fit {
    pub fn new(c: f64, rho: f64, sigma_eps: f64, y0: f64) -> Result<Self> {
        if !(sigma_eps > 0.0) || !c.is_finite() || !rho.is_finite() || !y0.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "AR(1) needs finite (c, ρ, y0) and σ_ε > 0, got ({c}, {rho}, {sigma_eps}, {y0})"
            )));
        }
        Ok(Ar1Fit { c, rho, sigma_eps, y0 })
    }

    /// `|ρ| < 1` and `σ_ε > 0`.
    pub fn is_stationary(&self) -> bool {
        self.rho.abs() < 1.0 && self.sigma_eps > 0.0
    }

    fn require_stationary(&self) -> Result<()> {
        if self.rho.abs() >= 1.0 {
            return Err(Error::NonStationary { rho: self.rho });
        }
        if !(self.sigma_eps > 0.0) {
            return Err(Error::InvalidParameter(
                "noise-free AR(1) fit has no stationary law".into(),
            ));
        }
        Ok(())
    }

    /// Stationary mean `c/(1-ρ)`.
    pub fn mean(&self) -> f64 {
        self.c / (1.0 - self.rho)
    }

    /// Stationary variance `σ_ε²/(1-ρ²)`.
    pub fn variance(&self) -> f64 {
        self.sigma_eps * self.sigma_eps / (1.0 - self.rho * self.rho)
    }

    /// Mean of `Y_t` given `Y_0 = y0`.
    pub fn mean_at(&self, t: u64) -> f64 {
        let rt = self.rho.powf(t as f64);
        self.mean() + rt * (self.y0 - self.mean())
    }

    /// Variance of `Y_t` given `Y_0 = y0`.
    pub fn variance_at(&self, t: u64) -> f64 {
        self.variance() * (1.0 - self.rho.powf(2.0 * t as f64))
    }
}

/// Least-squares regression of `Y_{k+1}` on `(1, Y_k)`. The innovation sd
/// uses `N-2` degrees of freedom. A fit with `|ρ| ≥ 1`, or a noise-free one
/// with `σ_ε = 0`, is still returned; the bound and standard-error
/// operations refuse it. `ρ̂` within `1e-12` of `±1` is taken as a unit root.
pub fn fit_ar1(series: &[f64]) -> Result<Ar1Fit> {
    if series.len() < 10 {
        return Err(Error::InvalidParameter(format!(
            "AR(1) fit needs at least 10 observations, got {}",
            series.len()
        )));
    }
    let x = &series[..series.len() - 1];
    let y = &series[1..];
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    if !(sxx > 0.0) || !series.iter().all(|v| v.is_finite()) {
        return Err(Error::ConstantSeries);
    }
    let mut rho = sxy / sxx;
    if (rho.abs() - 1.0).abs() < 1e-12 {
        rho = rho.signum();
    }
    let c = my - rho * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - c - rho * a).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sigma_eps = if rss <= 1e-24 * syy {
        0.0
    } else {
        (rss / (n - 2.0)).sqrt()
    };
    Ok(Ar1Fit {
        c,
        rho,
        sigma_eps,
        y0: series[0],
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvBounds {
    pub hellinger: f64,
    pub kl: f64,
}

impl TvBounds {
    pub fn min(&self) -> f64 {
        self.hellinger.min(self.kl)
    }
}

/// Upper bounds on the total variation distance between the law of `Y_t`
/// started at `y0` and the stationary law, via the Hellinger distance and
/// via Pinsker's inequality. Both are clamped to `[0, 1]`.
pub fn ar1_tv_bounds(fit: &Ar1Fit, t: u64) -> Result<TvBounds> {
    fit.require_stationary()?;
    if t == 0 {
        return Ok(TvBounds {
            hellinger: 1.0,
            kl: 1.0,
        });
    }
    let r = fit.rho.powf(2.0 * t as f64);
    let var = fit.variance();
    let var_t = fit.variance_at(t);
    let dev2 = r * (fit.y0 - fit.mean()).powi(2);

    // log of 2σσ_t/(σ² + σ_t²) with σ_t² = σ²(1 - r)
    let ln_ratio = 0.5 * (-r).ln_1p() - (-0.5 * r).ln_1p();
    let q = dev2 / (4.0 * (var_t + var));
    let hellinger = (2.0 * -(0.5 * ln_ratio - q).exp_m1()).max(0.0).sqrt();

    let kl = 0.5 * (dev2 / var - r - (-r).ln_1p()).max(0.0).sqrt();

    Ok(TvBounds {
        hellinger: clamp_unit(hellinger),
        kl: clamp_unit(kl),
    })
}

fn clamp_unit(v: f64) -> f64 {
    if v.is_nan() {
        1.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// Time-average variance constant of a stationary AR(1), `σ_ε²/(1-ρ)²`.
pub fn ar1_tavc(fit: &Ar1Fit) -> Result<f64> {
    fit.require_stationary()?;
    Ok((fit.sigma_eps / (1.0 - fit.rho)).powi(2))
}

/// Standard error of a `t`-step ergodic mean under the AR(1) model.
pub fn ar1_std_err(fit: &Ar1Fit, t: u64) -> Result<f64> {
    if t == 0 {
        return Err(Error::InvalidParameter("run length must be positive".into()));
    }
    Ok((ar1_tavc(fit)? / t as f64).sqrt())
}

/// Smallest `t ≤ max_t` where the tighter of the two bounds drops below `ε`.
pub fn ar1_burnin(fit: &Ar1Fit, epsilon: f64, max_t: u64) -> Result<u64> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("ε must be positive, got {epsilon}")));
    }
    fit.require_stationary()?;
    for t in 0..=max_t {
        if ar1_tv_bounds(fit, t)?.min() < epsilon {
            return Ok(t);
        }
    }
    Err(Error::BurninNotReached { max_t })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(c: f64, rho: f64, s: f64, y0: f64) -> Ar1Fit {
        Ar1Fit::new(c, rho, s, y0).unwrap()
    }

    #[test]
    fn hellinger_hand_value() {
        let b = ar1_tv_bounds(&fit(0.0, 0.5, 1.0, 2.0), 1).unwrap();
        assert!((b.hellinger - 0.4609).abs() < 1e-4, "{}", b.hellinger);
    }

    #[test]
    fn white_noise_is_stationary_after_one_step() {
        let f = fit(3.0, 0.0, 2.0, -40.0);
        for t in 1..5 {
            let b = ar1_tv_bounds(&f, t).unwrap();
            assert_eq!((b.hellinger, b.kl), (0.0, 0.0));
        }
        assert_eq!(ar1_burnin(&f, 0.01, 10).unwrap(), 1);
        assert_eq!(ar1_tv_bounds(&f, 0).unwrap().min(), 1.0);
    }

    #[test]
    fn long_horizon_bounds_vanish() {
        let b = ar1_tv_bounds(&fit(1.0, 0.9, 1.0, 50.0), 10_000).unwrap();
        assert!(b.hellinger < 1e-12 && b.kl < 1e-12);
    }

    #[test]
    fn negative_rho_is_handled() {
        let b = ar1_tv_bounds(&fit(0.0, -0.5, 1.0, 2.0), 1).unwrap();
        let p = ar1_tv_bounds(&fit(0.0, 0.5, 1.0, 2.0), 1).unwrap();
        assert!((b.hellinger - p.hellinger).abs() < 1e-14);
    }

    #[test]
    fn std_err_hand_values() {
        assert!((ar1_std_err(&fit(0.0, 0.5, 1.0, 0.0), 100).unwrap() - 0.2).abs() < 1e-14);
        assert!((ar1_std_err(&fit(0.0, 0.0, 3.0, 0.0), 9).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn refusals() {
        let f = fit(0.0, 1.0, 1.0, 0.0);
        assert!(matches!(ar1_tv_bounds(&f, 1), Err(Error::NonStationary { .. })));
        assert!(ar1_std_err(&f, 10).is_err());
        assert!(ar1_burnin(&f, 0.01, 10).is_err());
        assert!(Ar1Fit::new(0.0, 0.5, 0.0, 0.0).is_err());
        assert!(matches!(fit_ar1(&[2.0; 20]), Err(Error::ConstantSeries)));
        assert!(fit_ar1(&[1.0, 2.0]).is_err());
        assert!(matches!(
            ar1_burnin(&fit(0.0, 0.999, 1.0, 1e6), 1e-3, 3),
            Err(Error::BurninNotReached { max_t: 3 })
        ));
    }

    #[test]
    fn simulated_parameters_are_recovered() {
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = crate::rng::RngStream::new(3, 0);
        let mut y = vec![5.0];
        for k in 0..5000 {
            let e: f64 = StandardNormal.sample(&mut rng);
            y.push(1.0 + 0.4 * y[k] + 0.3 * e);
        }
        let f = fit_ar1(&y).unwrap();
        assert!((f.rho - 0.4).abs() < 0.05, "{f:?}");
        assert!((f.sigma_eps - 0.3).abs() < 0.02, "{f:?}");
        assert_eq!(f.y0, 5.0);
    }
}
