//! Grid search over the quantile level `α` that sets the regeneration box.
//!
//! For each `α` the box is `[c_(α), d_(α)]`, the empirical lower and upper
//! `α`-quantiles of every `τ_j` in a pilot run, and the objective is the
//! average `ψ_k` over consecutive pilot pairs. One pilot serves every grid
//! point, so the search consumes no randomness.

use std::io::Write;

use log::warn;
use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::ChainState;
use crate::regeneration::{psi, RegenWindow};
use crate::rng::RngStream;
use crate::samplers::GibbsKernel;

/// Linear interpolation between order statistics of sorted data
/// (position `(n - 1)·q`, 0-based).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty() && (0.0..=1.0).contains(&q));
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-coordinate sorted `τ_j` samples of a pilot.
#[derive(Clone, Debug)]
pub struct TauMarginals {
    sorted: Vec<Vec<f64>>,
}

impl TauMarginals {
    pub fn new(pilot: &[ChainState]) -> Result<Self> {
        if pilot.len() < 10 {
            return Err(Error::InvalidParameter(format!(
                "pilot needs at least 10 states, got {}",
                pilot.len()
            )));
        }
        let p = pilot[0].p();
        let sorted = (0..p)
            .map(|j| {
                let mut col: Vec<f64> = pilot.iter().map(|s| s.tau[j]).collect();
                col.sort_by(f64::total_cmp);
                col
            })
            .collect();
        Ok(Self { sorted })
    }

    pub fn window(&self, alpha: f64, beta_hat: &DVector<f64>) -> Result<RegenWindow> {
        if !(alpha > 0.0 && alpha < 0.5) {
            return Err(Error::InvalidParameter(format!("α must lie in (0, 0.5), got {alpha}")));
        }
        let lower = DVector::from_iterator(self.sorted.len(), self.sorted.iter().map(|s| quantile_sorted(s, alpha)));
        let upper = DVector::from_iterator(
            self.sorted.len(),
            self.sorted.iter().map(|s| quantile_sorted(s, 1.0 - alpha)),
        );
        Ok(RegenWindow::new(beta_hat.clone(), lower, upper)?.with_alpha(alpha))
    }
}

/// Box from the empirical `α` and `1 - α` quantiles of each pilot `τ_j`.
pub fn empirical_quantile_window(pilot: &[ChainState], alpha: f64, beta_hat: &DVector<f64>) -> Result<RegenWindow> {
    TauMarginals::new(pilot)?.window(alpha, beta_hat)
}

/// Mean `ψ_k` over the consecutive pairs `(β_k, τ_{k+1})` of a pilot.
pub fn mean_psi(pilot: &[ChainState], window: &RegenWindow) -> f64 {
    let total: f64 = pilot.windows(2).map(|w| psi(&w[0].beta, &w[1].tau, window)).sum();
    total / (pilot.len() - 1) as f64
}

/// Grid values and the estimated mean regeneration probability at each.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaGrid {
    pub values: Vec<f64>,
    pub mean_psi: Vec<f64>,
}

impl AlphaGrid {
    /// Profile as CSV with header `alpha,mean_psi`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "alpha,mean_psi")?;
        for (a, m) in self.values.iter().zip(&self.mean_psi) {
            writeln!(out, "{a},{m}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct Tuned {
    pub alpha: f64,
    pub window: RegenWindow,
    pub profile: AlphaGrid,
}

impl Tuned {
    pub fn best_mean_psi(&self) -> f64 {
        let i = self.profile.values.iter().position(|&a| a == self.alpha).unwrap_or(0);
        self.profile.mean_psi[i]
    }
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// 30 log-spaced values in `[1e-3, 0.3]`.
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(1e-3, 0.3, 30)
}

/// Evaluates every grid value on the pilot and returns the maximizer
/// (smallest `α` on ties) with its window and the full profile.
pub fn grid_search_alpha(pilot: &[ChainState], grid: &[f64], beta_hat: &DVector<f64>) -> Result<Tuned> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("α grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("α grid must be strictly increasing".into()));
    }
    if pilot.len() < 100 {
        warn!("pilot has only {} states; the α profile will be noisy", pilot.len());
    }
    let marginals = TauMarginals::new(pilot)?;
    let mut profile = Vec::with_capacity(grid.len());
    let mut best: Option<(usize, f64)> = None;
    for (i, &alpha) in grid.iter().enumerate() {
        let window = marginals.window(alpha, beta_hat)?;
        let m = mean_psi(pilot, &window);
        if best.is_none_or(|(_, b)| m > b) {
            best = Some((i, m));
        }
        profile.push(m);
    }
    let (i, m) = best.expect("grid is non-empty");
    if m <= 0.0 {
        return Err(Error::NoUsableWindow);
    }
    Ok(Tuned {
        alpha: grid[i],
        window: marginals.window(grid[i], beta_hat)?,
        profile: AlphaGrid {
            values: grid.to_vec(),
            mean_psi: profile,
        },
    })
}

/// Pilot chain: starts at `(β̂, 1)`, discards `discard` transitions and keeps
/// the next `length` states.
pub fn run_pilot(
    kernel: &GibbsKernel,
    beta_hat: &DVector<f64>,
    discard: usize,
    length: usize,
    rng: &mut RngStream,
) -> Result<Vec<ChainState>> {
    let mut state = ChainState {
        beta: beta_hat.clone(),
        tau: DVector::from_element(beta_hat.len(), 1.0),
    };
    for _ in 0..discard {
        state = kernel.step(&state, rng)?;
    }
    let mut states = Vec::with_capacity(length);
    for _ in 0..length {
        state = kernel.step(&state, rng)?;
        states.push(state.clone());
    }
    Ok(states)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pilot_from_tau(taus: &[f64]) -> Vec<ChainState> {
        taus.iter()
            .map(|&t| ChainState {
                beta: DVector::from_element(1, 0.0),
                tau: DVector::from_element(1, t),
            })
            .collect()
    }

    #[test]
    fn type7_quantiles() {
        let xs: Vec<f64> = (1..=100).map(f64::from).collect();
        assert!((quantile_sorted(&xs, 0.10) - 10.9).abs() < 1e-12);
        assert!((quantile_sorted(&xs, 0.90) - 90.1).abs() < 1e-12);
        assert_eq!(quantile_sorted(&xs, 0.0), 1.0);
        assert_eq!(quantile_sorted(&xs, 1.0), 100.0);
    }

    #[test]
    fn window_from_quantiles() {
        let pilot = pilot_from_tau(&(1..=100).map(f64::from).collect::<Vec<_>>());
        let w = empirical_quantile_window(&pilot, 0.10, &DVector::zeros(1)).unwrap();
        assert!((w.lower[0] - 10.9).abs() < 1e-12);
        assert!((w.upper[0] - 90.1).abs() < 1e-12);
        assert_eq!(w.alpha, Some(0.10));

        let near_half = empirical_quantile_window(&pilot, 0.5 - 1e-12, &DVector::zeros(1)).unwrap();
        assert!((near_half.lower[0] - 50.5).abs() < 1e-9);
        assert!((near_half.upper[0] - 50.5).abs() < 1e-9);

        let flat = pilot_from_tau(&[3.0; 20]);
        let w = empirical_quantile_window(&flat, 0.2, &DVector::zeros(1)).unwrap();
        assert_eq!((w.lower[0], w.upper[0]), (3.0, 3.0));
    }

    #[test]
    fn alpha_range_and_pilot_size() {
        let pilot = pilot_from_tau(&[1.0; 20]);
        assert!(empirical_quantile_window(&pilot, 0.5, &DVector::zeros(1)).is_err());
        assert!(empirical_quantile_window(&pilot, 0.0, &DVector::zeros(1)).is_err());
        assert!(empirical_quantile_window(&pilot[..5], 0.1, &DVector::zeros(1)).is_err());
    }

    #[test]
    fn single_point_grid_and_ties() {
        let pilot = pilot_from_tau(&(1..=50).map(f64::from).collect::<Vec<_>>());
        // β_k = β̂ = 0 makes every in-box ψ equal to one
        let tuned = grid_search_alpha(&pilot, &[0.2], &DVector::zeros(1)).unwrap();
        assert_eq!(tuned.alpha, 0.2);
        let flat = pilot_from_tau(&[2.0; 30]);
        let tuned = grid_search_alpha(&flat, &[0.05, 0.1, 0.2], &DVector::zeros(1)).unwrap();
        assert_eq!(tuned.alpha, 0.05);
        assert_eq!(tuned.profile.mean_psi, vec![1.0; 3]);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = default_alpha_grid();
        assert_eq!(g.len(), 30);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[29] - 0.3).abs() < 1e-14);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
