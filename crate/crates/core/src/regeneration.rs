//! Minorization-based regeneration for the Gibbs kernel.
//!
//! With `𝒟 = ℝ^p × [c, d]` and the anchor `(β̂, 1)`, the kernel satisfies
//! `κ(x' | x) ≥ s(x) ν(x')` where `ν` is `κ(· | (β̂, 1))` restricted to `𝒟`.
//! Chains are simulated from `κ` as usual and each transition `X_k → X_{k+1}`
//! is flagged as a regeneration with the retrospective probability `ψ_k`,
//! which depends on `β_k` and `τ_{k+1}` only.

use std::io::Write;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::{ChainState, Dataset, Hyperparams, TourStats};
use crate::rng::RngStream;
use crate::samplers::GibbsKernel;

/// Default cap on rejection attempts when drawing from `ν`.
pub const DEFAULT_NU_ATTEMPTS: usize = 1_000_000;

/// Anchor `β̂` and the box `[c, d]` for `τ` defining the small set.
#[derive(Clone, Debug, PartialEq)]
pub struct RegenWindow {
    pub beta_hat: DVector<f64>,
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    /// Quantile level that produced the box, when it came from tuning.
    pub alpha: Option<f64>,
}

impl RegenWindow {
    pub fn new(beta_hat: DVector<f64>, lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        let p = beta_hat.len();
        if lower.len() != p || upper.len() != p {
            return Err(Error::InvalidParameter(
                "window bounds must have one entry per predictor".into(),
            ));
        }
        if lower.iter().zip(upper.iter()).any(|(&c, &d)| !(c > 0.0 && c <= d)) {
            return Err(Error::InvalidParameter("window needs 0 < c_j ≤ d_j".into()));
        }
        Ok(Self {
            beta_hat,
            lower,
            upper,
            alpha: None,
        })
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = Some(alpha);
        self
    }

    pub fn p(&self) -> usize {
        self.beta_hat.len()
    }

    pub fn contains(&self, tau: &DVector<f64>) -> bool {
        tau.iter()
            .zip(self.lower.iter().zip(self.upper.iter()))
            .all(|(&t, (&c, &d))| c <= t && t <= d)
    }
}

/// `s(β_k, τ_k) / ε = exp(-½ dᵀ(β_k² - β̂²)₊ - ½ cᵀ(β_k² - β̂²)₋)`.
///
/// The exponent is not sign-definite, so this can exceed one; only the
/// product entering [`regen_probability`] is a probability.
pub fn s_function(state: &ChainState, window: &RegenWindow) -> f64 {
    let mut exponent = 0.0;
    for j in 0..window.p() {
        let delta = state.beta[j] * state.beta[j] - window.beta_hat[j] * window.beta_hat[j];
        exponent -= 0.5 * if delta >= 0.0 { window.upper[j] } else { window.lower[j] } * delta;
    }
    exponent.exp()
}

/// Retrospective regeneration probability for the transition whose source
/// is `state_k` and whose new `τ` is `tau_next`:
/// `exp(-½ (d - τ')ᵀ(β_k² - β̂²)₊ - ½ (c - τ')ᵀ(β_k² - β̂²)₋) · 𝕀{τ' ∈ [c, d]}`.
pub fn regen_probability(state_k: &ChainState, tau_next: &DVector<f64>, window: &RegenWindow) -> f64 {
    psi(&state_k.beta, tau_next, window)
}

pub(crate) fn psi(beta_k: &DVector<f64>, tau_next: &DVector<f64>, window: &RegenWindow) -> f64 {
    let mut exponent = 0.0;
    for j in 0..window.p() {
        let (c, d, t) = (window.lower[j], window.upper[j], tau_next[j]);
        if !(c <= t && t <= d) {
            return 0.0;
        }
        let delta = beta_k[j] * beta_k[j] - window.beta_hat[j] * window.beta_hat[j];
        // both branches are ≤ 0 inside the box
        exponent -= 0.5 * if delta >= 0.0 { d - t } else { c - t } * delta;
    }
    exponent.min(0.0).exp()
}

/// Exact draw from `ν` by rejection: draw `τ | β̂` until it lands in `[c, d]`,
/// then `β | τ`. Returns the state and the number of rejected proposals.
pub fn sample_from_nu<R: Rng + ?Sized>(
    window: &RegenWindow,
    kernel: &GibbsKernel,
    rng: &mut R,
    max_attempts: usize,
) -> Result<(ChainState, usize)> {
    for attempt in 0..max_attempts {
        let tau = kernel.sample_tau(&window.beta_hat, rng);
        if window.contains(&tau) {
            let beta = kernel.sample_beta(&tau, rng)?;
            return Ok((ChainState { beta, tau }, attempt));
        }
    }
    Err(Error::NuRejectionBudget { attempts: max_attempts })
}

/// How regeneration flags are decided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegenRule {
    /// Bernoulli(`ψ_k`) from the minorization.
    Minorization,
    /// Bernoulli with a fixed probability, for testing the bookkeeping.
    Fixed(f64),
}

/// A simulated chain with its regeneration structure.
#[derive(Clone, Debug)]
pub struct ChainTrace {
    /// `X_0, …, X_t`.
    pub states: Vec<ChainState>,
    /// `regen_flags[k]` marks a regeneration on `X_k → X_{k+1}`.
    pub regen_flags: Vec<bool>,
    /// `ψ_k` for every transition (the value used for the flag under
    /// [`RegenRule::Minorization`]).
    pub psi: Vec<f64>,
    /// `T_0 = 0 < T_1 < …`; `T_r = k + 1` for each flagged `k`.
    pub tour_boundaries: Vec<usize>,
    pub hyper: Hyperparams,
    pub window: RegenWindow,
    pub seed: u64,
    pub stream: u64,
    /// Rejections spent drawing `X_0` from `ν`.
    pub nu_rejections: usize,
}

impl ChainTrace {
    /// Number of transitions `t`.
    pub fn len(&self) -> usize {
        self.states.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `N(t)`: number of regenerations, i.e. complete tours.
    pub fn regenerations(&self) -> usize {
        self.tour_boundaries.len() - 1
    }

    pub fn mean_psi(&self) -> f64 {
        self.psi.iter().sum::<f64>() / self.psi.len() as f64
    }

    /// Writes `step, beta_1..p, tau_1..p, regen_flag`; the final state has
    /// no outgoing transition and is written with flag 0.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let p = self.window.p();
        let mut header = vec!["step".to_string()];
        header.extend((1..=p).map(|j| format!("beta_{j}")));
        header.extend((1..=p).map(|j| format!("tau_{j}")));
        header.push("regen_flag".into());
        writeln!(out, "{}", header.join(","))?;
        for (k, s) in self.states.iter().enumerate() {
            write!(out, "{k}")?;
            for v in s.beta.iter().chain(s.tau.iter()) {
                write!(out, ",{v}")?;
            }
            let flag = self.regen_flags.get(k).copied().unwrap_or(false);
            writeln!(out, ",{}", u8::from(flag))?;
        }
        Ok(())
    }
}

/// Runs `t` transitions from a fresh cycle `X_0 ~ ν` and flags regenerations.
pub fn run_regenerative_chain(
    ds: &Dataset,
    hyper: Hyperparams,
    window: &RegenWindow,
    t: usize,
    rng: &mut RngStream,
) -> Result<ChainTrace> {
    let kernel = GibbsKernel::new(ds, hyper);
    run_regenerative_chain_with(&kernel, window, t, rng, RegenRule::Minorization, DEFAULT_NU_ATTEMPTS)
}

/// [`run_regenerative_chain`] with an explicit kernel, flag rule and `ν`
/// rejection budget. The Bernoulli draw for transition `k` is taken from
/// `rng` right after `X_{k+1}` is simulated.
pub fn run_regenerative_chain_with(
    kernel: &GibbsKernel,
    window: &RegenWindow,
    t: usize,
    rng: &mut RngStream,
    rule: RegenRule,
    max_nu_attempts: usize,
) -> Result<ChainTrace> {
    if t < 2 {
        return Err(Error::InvalidParameter(format!(
            "chain length must be at least 2, got {t}"
        )));
    }
    if window.p() != kernel.p() {
        return Err(Error::InvalidParameter("window and data dimensions differ".into()));
    }
    let (x0, nu_rejections) = sample_from_nu(window, kernel, rng, max_nu_attempts)?;
    let mut states = Vec::with_capacity(t + 1);
    let mut regen_flags = Vec::with_capacity(t);
    let mut psis = Vec::with_capacity(t);
    let mut tour_boundaries = vec![0];
    states.push(x0);
    for k in 0..t {
        let next = kernel.step(&states[k], rng)?;
        let psi_k = psi(&states[k].beta, &next.tau, window);
        debug_assert!((0.0..=1.0).contains(&psi_k));
        let prob = match rule {
            RegenRule::Minorization => psi_k,
            RegenRule::Fixed(p) => p,
        };
        let u: f64 = rng.random();
        let flag = u < prob;
        if flag {
            tour_boundaries.push(k + 1);
        }
        regen_flags.push(flag);
        psis.push(psi_k);
        states.push(next);
    }
    Ok(ChainTrace {
        states,
        regen_flags,
        psi: psis,
        tour_boundaries,
        hyper: kernel.hyper(),
        window: window.clone(),
        seed: rng.seed(),
        stream: rng.stream(),
        nu_rejections,
    })
}

/// `(M_r, H_r)` for every complete tour, monitoring `β_j` for each `j` in
/// `coords`. The trailing incomplete tour is left out.
pub fn extract_tours(trace: &ChainTrace, coords: &[usize]) -> Result<Vec<TourStats>> {
    let values: Vec<Vec<f64>> = trace
        .states
        .iter()
        .map(|s| coords.iter().map(|&j| s.beta[j]).collect())
        .collect();
    tours_from_boundaries(&values, &trace.tour_boundaries)
}

/// Tour statistics of an arbitrary vector-valued sequence given boundaries
/// `T_0 = 0 < T_1 < …`.
pub fn tours_from_boundaries(values: &[Vec<f64>], boundaries: &[usize]) -> Result<Vec<TourStats>> {
    if boundaries.len() < 2 {
        return Err(Error::InsufficientTours { found: 0 });
    }
    let width = values.first().map_or(0, Vec::len);
    Ok(boundaries
        .windows(2)
        .map(|w| {
            let mut sums = vec![0.0; width];
            for row in &values[w[0]..w[1]] {
                for (acc, v) in sums.iter_mut().zip(row) {
                    *acc += v;
                }
            }
            TourStats {
                length: w[1] - w[0],
                sums,
            }
        })
        .collect())
}
