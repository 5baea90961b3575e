use std::io::Write;

use rand::Rng;

use super::ar1::{ar1_burnin, ar1_std_err, ar1_tv_bounds, fit_ar1, Ar1Fit, TvBounds};
use super::regenerative::{burnin_estimate, ergodic_mean, eta_estimate, tavc_estimate, tavc_std_err, EtaEstimate};
use crate::error::{Error, Result};
use crate::regeneration::{extract_tours, ChainTrace};

/// Scientific notation with five significant digits and a signed two-digit
/// exponent, e.g. `5.2416e+02`.
pub fn fmt_sci(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let s = format!("{v:.4e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

fn rounded(v: f64) -> f64 {
    fmt_sci(v).parse().expect("round trip")
}

/// `stderr/|mean|` evaluated on the printed (rounded) values, so a reader
/// can recompute the column from the table itself.
pub fn printed_rel_err(std_err: f64, mean: f64) -> f64 {
    rounded(std_err) / rounded(mean).abs()
}

#[derive(Clone, Debug)]
pub struct CoefficientRow {
    pub name: String,
    pub mean: f64,
    pub tavc: f64,
    pub std_err: f64,
    pub ar1: Ar1Fit,
    /// `None` when the AR(1) fit is not stationary.
    pub ar1_std_err: Option<f64>,
    pub ar1_burnin: Option<u64>,
}

impl CoefficientRow {
    pub fn rel_err(&self) -> f64 {
        printed_rel_err(self.std_err, self.mean)
    }

    pub fn ar1_rel_err(&self) -> Option<f64> {
        self.ar1_std_err.map(|se| printed_rel_err(se, self.mean))
    }
}

#[derive(Clone, Debug)]
pub struct DiagnosticsReport {
    pub rows: Vec<CoefficientRow>,
    /// Number of transitions; the trace holds `t + 1` states.
    pub t: usize,
    /// Complete tours `N(t)`.
    pub tours: usize,
    pub mean_psi: f64,
    pub alpha: Option<f64>,
    pub eta: EtaEstimate,
    pub epsilon: f64,
    pub burnin: u64,
    /// Largest per-coordinate AR(1) burn-in, over stationary fits only.
    pub ar1_burnin: Option<u64>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct ReportSettings {
    pub epsilon: f64,
    pub bootstrap_resamples: usize,
    pub ar1_max_t: u64,
}

impl Default for ReportSettings {
    fn default() -> Self {
        ReportSettings {
            epsilon: 0.01,
            bootstrap_resamples: super::DEFAULT_BOOTSTRAP_RESAMPLES,
            ar1_max_t: 100_000,
        }
    }
}

pub fn build_report<R: Rng + ?Sized>(
    trace: &ChainTrace,
    names: &[String],
    settings: &ReportSettings,
    rng: &mut R,
) -> Result<DiagnosticsReport> {
    let p = trace.window.p();
    if names.len() != p {
        return Err(Error::InvalidParameter(format!(
            "{} names for {p} coefficients",
            names.len()
        )));
    }
    let t = trace.len();
    let coords: Vec<usize> = (0..p).collect();
    let tours = extract_tours(trace, &coords)?;
    if tours.len() < 2 {
        return Err(Error::InsufficientTours { found: tours.len() });
    }
    let eta = eta_estimate(&tours, settings.bootstrap_resamples, rng)?;
    let burnin = burnin_estimate(&tours, settings.epsilon)?;

    let mut rows = Vec::with_capacity(p);
    for (j, name) in names.iter().enumerate() {
        let mean = ergodic_mean(trace, j);
        let tavc = tavc_estimate(&tours, j, mean, t)?;
        let series: Vec<f64> = trace.states.iter().map(|s| s.beta[j]).collect();
        let ar1 = fit_ar1(&series)?;
        let (ar1_se, ar1_tb) = if ar1.is_stationary() {
            let tb = match ar1_burnin(&ar1, settings.epsilon, settings.ar1_max_t) {
                Ok(tb) => Some(tb),
                Err(Error::BurninNotReached { .. }) => None,
                Err(e) => return Err(e),
            };
            (Some(ar1_std_err(&ar1, t as u64)?), tb)
        } else {
            log::warn!("{name}: AR(1) fit has ρ = {:.4}; AR(1) columns left blank", ar1.rho);
            (None, None)
        };
        rows.push(CoefficientRow {
            name: name.clone(),
            mean,
            tavc,
            std_err: tavc_std_err(tavc, t),
            ar1,
            ar1_std_err: ar1_se,
            ar1_burnin: ar1_tb,
        });
    }
    let ar1_burnin = rows.iter().filter_map(|r| r.ar1_burnin).max();
    Ok(DiagnosticsReport {
        rows,
        t,
        tours: tours.len(),
        mean_psi: trace.mean_psi(),
        alpha: trace.window.alpha,
        eta,
        epsilon: settings.epsilon,
        burnin,
        ar1_burnin,
        seed: trace.seed,
    })
}

/// One point of the convergence-bound curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundsPoint {
    pub t: u64,
    pub regenerative: f64,
    pub hellinger: f64,
    pub kl: f64,
}

impl DiagnosticsReport {
    /// AR(1) bounds at step `t`, maximised over stationary coordinates.
    pub fn ar1_bounds(&self, t: u64) -> Option<TvBounds> {
        self.rows
            .iter()
            .filter(|r| r.ar1.is_stationary())
            .map(|r| ar1_tv_bounds(&r.ar1, t).expect("stationary"))
            .reduce(|a, b| TvBounds {
                hellinger: a.hellinger.max(b.hellinger),
                kl: a.kl.max(b.kl),
            })
    }

    /// `η/(t+1)` next to the AR(1) bounds for `t = 0..=max_t`.
    pub fn bounds_curve(&self, max_t: u64) -> Vec<BoundsPoint> {
        (0..=max_t)
            .map(|t| {
                let b = self.ar1_bounds(t).unwrap_or(TvBounds {
                    hellinger: f64::NAN,
                    kl: f64::NAN,
                });
                BoundsPoint {
                    t,
                    regenerative: self.eta.eta / (t + 1) as f64,
                    hellinger: b.hellinger,
                    kl: b.kl,
                }
            })
            .collect()
    }

    /// Curve length used by the pipeline: long enough to show both
    /// burn-in estimates.
    pub fn default_curve_length(&self) -> u64 {
        (2 * self.burnin.max(self.ar1_burnin.unwrap_or(0))).clamp(200, 100_000)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "coefficient,mean,std_err,ar1_std_err,rel_err,ar1_rel_err")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.name,
                fmt_sci(r.mean),
                fmt_sci(r.std_err),
                opt(r.ar1_std_err),
                fmt_sci(r.rel_err()),
                opt(r.ar1_rel_err())
            )?;
        }
        Ok(())
    }

    pub fn write_summary_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "key,value")?;
        for (k, v) in self.summary() {
            writeln!(out, "{k},{v}")?;
        }
        Ok(())
    }

    fn summary(&self) -> Vec<(&'static str, String)> {
        vec![
            ("seed", self.seed.to_string()),
            ("t", self.t.to_string()),
            ("alpha", self.alpha.map_or(String::new(), fmt_sci)),
            ("mean_psi", fmt_sci(self.mean_psi)),
            ("regenerations", self.tours.to_string()),
            ("eta", fmt_sci(self.eta.eta)),
            ("eta_ci_lower", fmt_sci(self.eta.ci.0)),
            ("eta_ci_upper", fmt_sci(self.eta.ci.1)),
            ("epsilon", self.epsilon.to_string()),
            ("burnin", self.burnin.to_string()),
            ("ar1_burnin", self.ar1_burnin.map_or(String::new(), |v| v.to_string())),
        ]
    }

    pub fn write_markdown<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "| Coefficient | Mean | Standard error | AR(1) st. err. | Relative error | AR(1) rel. err. |"
        )?;
        writeln!(out, "|---|---:|---:|---:|---:|---:|")?;
        for r in &self.rows {
            writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} |",
                r.name,
                fmt_sci(r.mean),
                fmt_sci(r.std_err),
                opt(r.ar1_std_err),
                fmt_sci(r.rel_err()),
                opt(r.ar1_rel_err())
            )?;
        }
        writeln!(out)?;
        writeln!(out, "- steps t: {}", self.t)?;
        writeln!(out, "- seed: {}", self.seed)?;
        if let Some(a) = self.alpha {
            writeln!(out, "- tuned alpha: {}", fmt_sci(a))?;
        }
        writeln!(out, "- mean regeneration probability: {}", fmt_sci(self.mean_psi))?;
        writeln!(out, "- regenerations N(t): {}", self.tours)?;
        writeln!(
            out,
            "- eta: {} (95% bootstrap CI {} to {})",
            fmt_sci(self.eta.eta),
            fmt_sci(self.eta.ci.0),
            fmt_sci(self.eta.ci.1)
        )?;
        writeln!(out, "- {}-burn-in (regenerative): {}", self.epsilon, self.burnin)?;
        match self.ar1_burnin {
            Some(tb) => {
                let b = self.ar1_bounds(1).expect("some stationary fit");
                writeln!(out, "- {}-burn-in (AR(1) heuristic): {}", self.epsilon, tb)?;
                writeln!(out, "- AR(1) distance bound at t=1: {}", fmt_sci(b.min()))?;
            }
            None => writeln!(out, "- AR(1) burn-in: not available")?,
        }
        Ok(())
    }

    pub fn write_bounds_csv<W: Write>(&self, mut out: W, max_t: u64) -> std::io::Result<()> {
        writeln!(out, "t,regenerative_bound,hellinger,kl")?;
        for pt in self.bounds_curve(max_t) {
            writeln!(out, "{},{:e},{:e},{:e}", pt.t, pt.regenerative, pt.hellinger, pt.kl)?;
        }
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), fmt_sci)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sci_format() {
        assert_eq!(fmt_sci(524.16), "5.2416e+02");
        assert_eq!(fmt_sci(0.004234), "4.2340e-03");
        assert_eq!(fmt_sci(-12.0), "-1.2000e+01");
        assert_eq!(fmt_sci(0.0), "0.0000e+00");
        assert_eq!(fmt_sci(1.5e120), "1.5000e+120");
    }

    #[test]
    fn relative_error_uses_printed_values() {
        let r = printed_rel_err(0.90418, 213.53);
        assert!((r - 4.234e-3).abs() < 1e-6);
        assert_eq!(printed_rel_err(1.000004, -2.0), 0.5);
    }
}
