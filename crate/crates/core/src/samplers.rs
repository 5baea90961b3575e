//! Random variates and the two-block Gibbs transition.
//!
//! One transition draws `τ_{k+1} | β_k` coordinatewise from inverse-Gaussian
//! laws and then `β_{k+1} | τ_{k+1}` from a multivariate normal. The normal
//! block targets the joint density
//! `exp(-‖y - Xβ‖²/(2σ²)) ∏_j exp(-β_j² τ_j / 2) exp(-λ²/(2τ_j)) τ_j^{-3/2}`,
//! whose `β` conditional has precision `XᵀX/σ² + diag(τ)`, i.e. mean
//! `A Xᵀy` and covariance `σ² A` with `A = (XᵀX + σ² diag(τ))⁻¹`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{ChainState, Dataset, Hyperparams};

/// Smallest `|β_j|` used when forming the inverse-Gaussian mean `λ/|β_j|`.
pub const BETA_FLOOR: f64 = 1e-10;

/// Draws from the inverse-Gaussian (Wald) law with the given mean and shape
/// using the Michael–Schucany–Haas transformation with one accept/reject step.
pub fn sample_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> Result<f64> {
    if !(mean > 0.0 && mean.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse-Gaussian mean must be positive, got {mean}"
        )));
    }
    if !(shape > 0.0 && shape.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "inverse-Gaussian shape must be positive, got {shape}"
        )));
    }
    Ok(draw_inverse_gaussian(mean, shape, rng))
}

#[inline]
pub(crate) fn draw_inverse_gaussian<R: Rng + ?Sized>(mean: f64, shape: f64, rng: &mut R) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    let r = mean * z * z / (2.0 * shape);
    // smaller root of the MSH quadratic, written without cancellation
    let small = mean / (1.0 + r + (r * (r + 2.0)).sqrt());
    let u: f64 = rng.random();
    if u * (mean + small) <= mean {
        small
    } else {
        mean * mean / small
    }
}

/// Draws `τ | β`: independent inverse-Gaussian coordinates with mean
/// `λ/|β_j|` and shape `λ²`. `|β_j|` is floored at [`BETA_FLOOR`].
pub fn sample_tau_given_beta<R: Rng + ?Sized>(beta: &DVector<f64>, lambda: f64, rng: &mut R) -> Result<DVector<f64>> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("λ must be positive, got {lambda}")));
    }
    Ok(draw_tau(beta, lambda, rng))
}

fn draw_tau<R: Rng + ?Sized>(beta: &DVector<f64>, lambda: f64, rng: &mut R) -> DVector<f64> {
    let shape = lambda * lambda;
    beta.map(|b| draw_inverse_gaussian(lambda / b.abs().max(BETA_FLOOR), shape, rng))
}

/// Log of the normalized conditional density `π(τ | β, λ)`.
///
/// Each factor is the inverse-Gaussian density with mean `λ/|β_j|` and shape
/// `λ²`, which expands to
/// `λ/√(2π) · τ^{-3/2} · exp(-β²τ/2 - λ²/(2τ) + λ|β|)`; at `β_j = 0` this is
/// the Lévy limit.
pub fn log_tau_conditional(tau: &DVector<f64>, beta: &DVector<f64>, lambda: f64) -> Result<f64> {
    if tau.len() != beta.len() {
        return Err(Error::InvalidParameter("τ and β lengths differ".into()));
    }
    if tau.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter("τ must be strictly positive".into()));
    }
    let log_norm = lambda.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln();
    Ok(tau
        .iter()
        .zip(beta.iter())
        .map(|(&t, &b)| log_norm - 1.5 * t.ln() - 0.5 * b * b * t - lambda * lambda / (2.0 * t) + lambda * b.abs())
        .sum())
}

/// The two-block Gibbs transition kernel for fixed `(λ, σ²)`, with `XᵀX`
/// and `Xᵀy` cached.
#[derive(Clone, Debug)]
pub struct GibbsKernel {
    xtx: DMatrix<f64>,
    xty: DVector<f64>,
    hyper: Hyperparams,
}

impl GibbsKernel {
    pub fn new(ds: &Dataset, hyper: Hyperparams) -> Self {
        Self {
            xtx: ds.x.tr_mul(&ds.x),
            xty: ds.x.tr_mul(&ds.y),
            hyper,
        }
    }

    pub fn hyper(&self) -> Hyperparams {
        self.hyper
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    pub fn sample_tau<R: Rng + ?Sized>(&self, beta: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        draw_tau(beta, self.hyper.lambda, rng)
    }

    pub fn sample_beta<R: Rng + ?Sized>(&self, tau: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let chol = self.factor(tau)?;
        let mean = chol.solve(&self.xty);
        let z = DVector::from_fn(self.p(), |_, _| rng.sample::<f64, _>(StandardNormal));
        // L Lᵀ = A⁻¹, so Lᵀ w = z gives Cov(w) = A
        let w = chol
            .l_dirty()
            .tr_solve_lower_triangular(&z)
            .ok_or(Error::Factorization)?;
        Ok(mean + w * self.hyper.sigma())
    }

    /// Draws `τ_{k+1} | β_k`, then `β_{k+1} | τ_{k+1}`.
    pub fn step<R: Rng + ?Sized>(&self, state: &ChainState, rng: &mut R) -> Result<ChainState> {
        let tau = self.sample_tau(&state.beta, rng);
        let beta = self.sample_beta(&tau, rng)?;
        Ok(ChainState { beta, tau })
    }

    fn factor(&self, tau: &DVector<f64>) -> Result<Cholesky<f64, Dyn>> {
        let mut prec = self.xtx.clone();
        for (j, t) in tau.iter().enumerate() {
            prec[(j, j)] += self.hyper.sigma2 * t;
        }
        Cholesky::new(prec).ok_or(Error::Factorization)
    }
}

/// Draws `β | τ` from scratch (builds `XᵀX` on every call; prefer
/// [`GibbsKernel`] inside loops).
pub fn sample_beta_given_tau<R: Rng + ?Sized>(
    ds: &Dataset,
    tau: &DVector<f64>,
    sigma2: f64,
    rng: &mut R,
) -> Result<DVector<f64>> {
    if tau.len() != ds.p() || tau.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::InvalidParameter(
            "τ must be positive with one entry per predictor".into(),
        ));
    }
    // λ plays no role in the β block
    let hyper = Hyperparams::new(1.0, sigma2)?;
    GibbsKernel::new(ds, hyper).sample_beta(tau, rng)
}

/// One Gibbs transition; see [`GibbsKernel::step`].
pub fn gibbs_step<R: Rng + ?Sized>(
    state: &ChainState,
    ds: &Dataset,
    hyper: Hyperparams,
    rng: &mut R,
) -> Result<ChainState> {
    GibbsKernel::new(ds, hyper).step(state, rng)
}
