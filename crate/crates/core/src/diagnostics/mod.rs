//! Output analysis: regenerative standard errors and burn-in, batch means,
//! and the AR(1) baseline.

mod ar1;
mod regenerative;
mod report;

pub use ar1::{ar1_burnin, ar1_std_err, ar1_tavc, ar1_tv_bounds, fit_ar1, Ar1Fit, TvBounds};
pub use regenerative::{
    batch_means, burnin_estimate, ergodic_mean, eta_estimate, eta_point, tavc_estimate, tavc_std_err, EtaEstimate,
    DEFAULT_BOOTSTRAP_RESAMPLES,
};
pub use report::{
    build_report, fmt_sci, printed_rel_err, BoundsPoint, CoefficientRow, DiagnosticsReport, ReportSettings,
};
