//! Run configuration: a flat `key = value` text file plus overrides.
//!
//! Lines starting with `#` and blank lines are ignored. Relative `data`
//! paths in a file are resolved against the file's directory. Every key has
//! a default, and [`RunConfig::to_text`] writes all of them back out so a
//! run can be repeated exactly.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::lasso::EbSettings;
use crate::model::ScaleMode;
use crate::regeneration::DEFAULT_NU_ATTEMPTS;
use crate::tuning::log_grid;

/// Smallest accepted main-run length.
pub const MIN_RUN_LENGTH: usize = 100;

#[derive(Clone, Debug, PartialEq)]
pub enum HyperSource {
    Fixed { lambda: f64, sigma2: f64 },
    EmpiricalBayes,
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlphaGridSpec {
    /// `log:lo:hi:count`
    Log {
        lo: f64,
        hi: f64,
        count: usize,
    },
    List(Vec<f64>),
}

impl AlphaGridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self {
            AlphaGridSpec::Log { lo, hi, count } => log_grid(*lo, *hi, *count),
            AlphaGridSpec::List(v) => v.clone(),
        }
    }
}

impl fmt::Display for AlphaGridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlphaGridSpec::Log { lo, hi, count } => write!(f, "log:{lo}:{hi}:{count}"),
            AlphaGridSpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|a| a.to_string()).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

impl std::str::FromStr for AlphaGridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("alpha_grid: cannot parse `{s}`"));
        if let Some(rest) = s.strip_prefix("log:") {
            let parts: Vec<&str> = rest.split(':').collect();
            if parts.len() != 3 {
                return Err(bad());
            }
            return Ok(AlphaGridSpec::Log {
                lo: parts[0].trim().parse().map_err(|_| bad())?,
                hi: parts[1].trim().parse().map_err(|_| bad())?,
                count: parts[2].trim().parse().map_err(|_| bad())?,
            });
        }
        s.split(',')
            .map(|a| a.trim().parse::<f64>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()
            .map(AlphaGridSpec::List)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: PathBuf,
    pub response: String,
    /// `None` runs on the raw columns.
    pub standardize: Option<ScaleMode>,
    pub hyper: HyperSource,
    pub eb: EbSettings,
    /// Penalty for the Lasso anchor; defaults to the chain's λ.
    pub lasso_lambda: Option<f64>,
    pub lasso_tol: f64,
    pub pilot_discard: usize,
    pub pilot_length: usize,
    pub alpha_grid: AlphaGridSpec,
    /// Skip tuning and use this α directly.
    pub alpha: Option<f64>,
    pub t: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub bootstrap_resamples: usize,
    pub nu_max_attempts: usize,
    pub ar1_max_t: u64,
    pub write_trace: bool,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            data: PathBuf::new(),
            response: "y".into(),
            standardize: Some(ScaleMode::UnitVariance),
            hyper: HyperSource::EmpiricalBayes,
            eb: EbSettings::default(),
            lasso_lambda: None,
            lasso_tol: 1e-10,
            pilot_discard: 200,
            pilot_length: 1000,
            alpha_grid: AlphaGridSpec::Log {
                lo: 1e-3,
                hi: 0.3,
                count: 30,
            },
            alpha: None,
            t: 5000,
            epsilon: 0.01,
            seed: 1,
            bootstrap_resamples: crate::diagnostics::DEFAULT_BOOTSTRAP_RESAMPLES,
            nu_max_attempts: DEFAULT_NU_ATTEMPTS,
            ar1_max_t: 100_000,
            write_trace: true,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("{key}: cannot parse `{value}`")))
}

fn parse_opt_f64(key: &str, value: &str) -> Result<Option<f64>> {
    match value {
        "" | "auto" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("auto".into(), |x| x.to_string())
}

impl RunConfig {
    /// Reads a config file on top of the defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.update_from_file(path)?;
        Ok(cfg)
    }

    /// Applies the keys of a config file to `self`.
    pub fn update_from_file(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let before = self.data.clone();
        self.update_from_text(&text)?;
        if self.data != before && self.data.is_relative() {
            if let Some(dir) = path.parent() {
                self.data = dir.join(&self.data);
            }
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.update_from_text(text)?;
        Ok(cfg)
    }

    pub fn update_from_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k.trim(), v.trim())
                .map_err(|e| Error::Config(format!("line {}: {}", i + 1, e.root_message())))?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    fn fixed_mut(&mut self) -> (&mut f64, &mut f64) {
        if !matches!(self.hyper, HyperSource::Fixed { .. }) {
            self.hyper = HyperSource::Fixed {
                lambda: f64::NAN,
                sigma2: f64::NAN,
            };
        }
        match &mut self.hyper {
            HyperSource::Fixed { lambda, sigma2 } => (lambda, sigma2),
            HyperSource::EmpiricalBayes => unreachable!(),
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "data" => self.data = PathBuf::from(value),
            "response" => self.response = value.to_string(),
            "standardize" => {
                self.standardize = match value {
                    "none" => None,
                    v => Some(
                        v.parse()
                            .map_err(|_| Error::Config(format!("standardize: unknown mode `{v}`")))?,
                    ),
                }
            }
            "hyper" => match value {
                "fixed" => {
                    self.fixed_mut();
                }
                "empirical-bayes" => self.hyper = HyperSource::EmpiricalBayes,
                v => {
                    return Err(Error::Config(format!(
                        "hyper: expected fixed or empirical-bayes, got `{v}`"
                    )))
                }
            },
            "lambda" => *self.fixed_mut().0 = parse(key, value)?,
            "sigma2" => *self.fixed_mut().1 = parse(key, value)?,
            "sigma" => {
                let s: f64 = parse(key, value)?;
                *self.fixed_mut().1 = s * s;
            }
            "eb_samples" => self.eb.samples = parse(key, value)?,
            "eb_discard" => self.eb.discard = parse(key, value)?,
            "eb_iterations" => self.eb.iterations = parse(key, value)?,
            "eb_average_last" => self.eb.average_last = parse(key, value)?,
            "eb_rel_tol" => self.eb.rel_tol = parse(key, value)?,
            "lasso_lambda" => self.lasso_lambda = parse_opt_f64(key, value)?,
            "lasso_tol" => self.lasso_tol = parse(key, value)?,
            "pilot_discard" => self.pilot_discard = parse(key, value)?,
            "pilot_length" => self.pilot_length = parse(key, value)?,
            "alpha_grid" => self.alpha_grid = value.parse()?,
            "alpha" => self.alpha = parse_opt_f64(key, value)?,
            "t" => self.t = parse(key, value)?,
            "epsilon" => self.epsilon = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "bootstrap_resamples" => self.bootstrap_resamples = parse(key, value)?,
            "nu_max_attempts" => self.nu_max_attempts = parse(key, value)?,
            "ar1_max_t" => self.ar1_max_t = parse(key, value)?,
            "write_trace" => self.write_trace = parse(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Every key with its resolved value, in a form [`RunConfig::from_text`]
    /// reads back.
    pub fn to_text(&self) -> String {
        let mut lines = vec![
            format!("data = {}", self.data.display()),
            format!("response = {}", self.response),
            format!(
                "standardize = {}",
                self.standardize.map_or("none".into(), |m| m.to_string())
            ),
        ];
        match self.hyper {
            HyperSource::Fixed { lambda, sigma2 } => {
                lines.push("hyper = fixed".into());
                lines.push(format!("lambda = {lambda}"));
                lines.push(format!("sigma2 = {sigma2}"));
            }
            HyperSource::EmpiricalBayes => lines.push("hyper = empirical-bayes".into()),
        }
        lines.extend([
            format!("eb_samples = {}", self.eb.samples),
            format!("eb_discard = {}", self.eb.discard),
            format!("eb_iterations = {}", self.eb.iterations),
            format!("eb_average_last = {}", self.eb.average_last),
            format!("eb_rel_tol = {}", self.eb.rel_tol),
            format!("lasso_lambda = {}", fmt_opt(self.lasso_lambda)),
            format!("lasso_tol = {}", self.lasso_tol),
            format!("pilot_discard = {}", self.pilot_discard),
            format!("pilot_length = {}", self.pilot_length),
            format!("alpha_grid = {}", self.alpha_grid),
            format!("alpha = {}", fmt_opt(self.alpha)),
            format!("t = {}", self.t),
            format!("epsilon = {}", self.epsilon),
            format!("seed = {}", self.seed),
            format!("bootstrap_resamples = {}", self.bootstrap_resamples),
            format!("nu_max_attempts = {}", self.nu_max_attempts),
            format!("ar1_max_t = {}", self.ar1_max_t),
            format!("write_trace = {}", self.write_trace),
            format!("out_dir = {}", self.out_dir.display()),
        ]);
        lines.join("\n") + "\n"
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    pub key: &'static str,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{tag}: {}: {}", self.key, self.message)
    }
}

pub fn has_errors(findings: &[Finding]) -> bool {
    findings.iter().any(|f| f.severity == Severity::Error)
}

/// Static checks on a config. Returns an empty list for a runnable config.
pub fn validate_config(cfg: &RunConfig) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut err = |key, message: String| {
        out.push(Finding {
            severity: Severity::Error,
            key,
            message,
        })
    };

    if cfg.data.as_os_str().is_empty() {
        err("data", "no data file given".into());
    } else if !cfg.data.is_file() {
        err("data", format!("{} is not a readable file", cfg.data.display()));
    }
    if cfg.response.is_empty() {
        err("response", "empty column name".into());
    }
    if let HyperSource::Fixed { lambda, sigma2 } = cfg.hyper {
        if !(lambda > 0.0 && lambda.is_finite()) {
            err("lambda", format!("must be positive, got {lambda}"));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            err("sigma2", format!("must be positive, got {sigma2}"));
        }
    }
    if cfg.eb.samples == 0 || cfg.eb.iterations == 0 || cfg.eb.average_last == 0 {
        err(
            "eb_samples",
            "EM sample, iteration and averaging counts must be positive".into(),
        );
    }
    if let Some(l) = cfg.lasso_lambda {
        if !(l >= 0.0) {
            err("lasso_lambda", format!("must be nonnegative, got {l}"));
        }
    }
    if !(cfg.lasso_tol > 0.0) {
        err("lasso_tol", format!("must be positive, got {}", cfg.lasso_tol));
    }
    if cfg.alpha.is_none() && cfg.pilot_length < 10 {
        err("pilot_length", format!("must be at least 10, got {}", cfg.pilot_length));
    }
    let check_alpha = |a: f64| a > 0.0 && a < 0.5;
    match cfg.alpha {
        Some(a) if !check_alpha(a) => err("alpha", format!("must lie in (0, 0.5), got {a}")),
        Some(_) => {}
        None => {
            let grid = cfg.alpha_grid.values();
            if grid.is_empty() {
                err("alpha_grid", "empty grid".into());
            } else if !grid.iter().all(|&a| check_alpha(a)) {
                err("alpha_grid", "every α must lie in (0, 0.5)".into());
            }
            if let AlphaGridSpec::Log { lo, hi, count } = cfg.alpha_grid {
                if !(lo > 0.0 && lo <= hi) || count == 0 {
                    err(
                        "alpha_grid",
                        format!("need 0 < lo <= hi and count > 0, got {lo}:{hi}:{count}"),
                    );
                }
            }
        }
    }
    if cfg.t < MIN_RUN_LENGTH {
        err("t", format!("must be at least {MIN_RUN_LENGTH}, got {}", cfg.t));
    }
    if !(cfg.epsilon > 0.0) {
        err("epsilon", format!("must be positive, got {}", cfg.epsilon));
    }
    if cfg.nu_max_attempts == 0 {
        err("nu_max_attempts", "must be positive".into());
    }
    if cfg.bootstrap_resamples == 0 {
        out.push(Finding {
            severity: Severity::Warning,
            key: "bootstrap_resamples",
            message: "0 resamples; the η interval collapses to the point estimate".into(),
        });
    }
    out
}

/// Warning issued once the tuned mean regeneration probability is known.
pub fn expected_regenerations_finding(t: usize, mean_psi: f64) -> Option<Finding> {
    let expected = t as f64 * mean_psi;
    (expected < 10.0).then(|| Finding {
        severity: Severity::Warning,
        key: "t",
        message: format!(
            "about {expected:.1} regenerations expected in {t} steps (mean ψ = {mean_psi:.3e}); \
             increase t or reduce λ"
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "data = d.csv\nhyper = fixed\nlambda = 0.00431\nsigma = 53.5\nalpha_grid = 0.01,0.02\nseed = 7\n";
        let cfg = RunConfig::from_text(text).unwrap();
        assert_eq!(
            cfg.hyper,
            HyperSource::Fixed {
                lambda: 0.00431,
                sigma2: 53.5 * 53.5
            }
        );
        assert_eq!(cfg.alpha_grid, AlphaGridSpec::List(vec![0.01, 0.02]));
        assert_eq!(RunConfig::from_text(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(
            RunConfig::from_text(&RunConfig::default().to_text()).unwrap(),
            RunConfig::default()
        );
    }

    #[test]
    fn parse_errors() {
        assert!(RunConfig::from_text("nonsense").is_err());
        assert!(RunConfig::from_text("colour = red").is_err());
        assert!(RunConfig::from_text("t = many").is_err());
        assert!(RunConfig::from_text("alpha_grid = log:1:2").is_err());
        assert!(RunConfig::from_text("standardize = cubic").is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("t=200").unwrap();
        cfg.apply_override("standardize = none").unwrap();
        assert_eq!((cfg.t, cfg.standardize), (200, None));
        assert!(cfg.apply_override("t").is_err());
    }

    #[test]
    fn lambda_without_sigma_is_flagged() {
        let cfg = RunConfig::from_text("lambda = 1").unwrap();
        assert!(validate_config(&cfg).iter().any(|f| f.key == "sigma2"));
    }

    #[test]
    fn regeneration_warning() {
        assert!(expected_regenerations_finding(5000, 1e-3).is_some());
        assert!(expected_regenerations_finding(5000, 0.01).is_none());
    }
}
