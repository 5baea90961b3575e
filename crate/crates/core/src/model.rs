//! Shared data types and dataset ingestion.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How predictor columns are scaled after centering.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ScaleMode {
    /// Unit sample standard deviation (divisor `n - 1`).
    #[default]
    UnitVariance,
    /// Unit Euclidean norm.
    UnitL2Norm,
}

impl ScaleMode {
    fn scale_of(self, centered: &[f64]) -> f64 {
        let ss: f64 = centered.iter().map(|v| v * v).sum();
        match self {
            ScaleMode::UnitVariance => (ss / (centered.len().max(2) - 1) as f64).sqrt(),
            ScaleMode::UnitL2Norm => ss.sqrt(),
        }
    }
}

impl fmt::Display for ScaleMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScaleMode::UnitVariance => "unit-variance",
            ScaleMode::UnitL2Norm => "unit-l2-norm",
        })
    }
}

impl FromStr for ScaleMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit-variance" => Ok(ScaleMode::UnitVariance),
            "unit-l2-norm" => Ok(ScaleMode::UnitL2Norm),
            other => Err(Error::Config(format!(
                "unknown standardization {other:?} (expected unit-variance or unit-l2-norm)"
            ))),
        }
    }
}

/// The affine map from raw to standardized variables:
/// `x_std = (x - x_center) / x_scale`, `y_std = y - y_center`.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardization {
    pub mode: ScaleMode,
    pub y_center: f64,
    pub x_center: Vec<f64>,
    pub x_scale: Vec<f64>,
}

impl Standardization {
    /// Maps standardized-scale coefficients to `(intercept, raw-scale slopes)`.
    pub fn to_original(&self, beta: &[f64]) -> (f64, Vec<f64>) {
        let slopes: Vec<f64> = beta.iter().zip(&self.x_scale).map(|(b, s)| b / s).collect();
        let intercept = self.y_center - slopes.iter().zip(&self.x_center).map(|(b, c)| b * c).sum::<f64>();
        (intercept, slopes)
    }

    /// Inverse of [`Standardization::to_original`] for the slopes.
    pub fn from_original(&self, slopes: &[f64]) -> Vec<f64> {
        slopes.iter().zip(&self.x_scale).map(|(b, s)| b * s).collect()
    }

    // self applied after `prev`
    fn compose(&self, prev: &Standardization) -> Standardization {
        Standardization {
            mode: self.mode,
            y_center: prev.y_center + self.y_center,
            x_center: prev
                .x_center
                .iter()
                .zip(&prev.x_scale)
                .zip(&self.x_center)
                .map(|((c0, s0), c1)| c0 + s0 * c1)
                .collect(),
            x_scale: prev.x_scale.iter().zip(&self.x_scale).map(|(s0, s1)| s0 * s1).collect(),
        }
    }
}

/// Design matrix, response and the standardization applied to them.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub column_names: Vec<String>,
    pub standardization: Option<Standardization>,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, column_names: Vec<String>) -> Result<Self> {
        if x.nrows() == 0 || x.ncols() == 0 {
            return Err(Error::EmptyData);
        }
        if x.nrows() != y.len() || column_names.len() != x.ncols() {
            return Err(Error::InvalidParameter(format!(
                "shape mismatch: X is {}x{}, y has {} entries, {} column names",
                x.nrows(),
                x.ncols(),
                y.len(),
                column_names.len()
            )));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite value in data".into()));
        }
        Ok(Self {
            x,
            y,
            column_names,
            standardization: None,
        })
    }

    /// Number of observations.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Number of predictors.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// Reads a headed CSV; every column except `response_column` becomes a
/// predictor, in header order.
pub fn load_csv(path: impl AsRef<Path>, response_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let csv_err = |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_owned).collect();
    let response_idx = header
        .iter()
        .position(|h| h == response_column)
        .ok_or_else(|| Error::MissingColumn(response_column.to_owned()))?;

    let p = header.len() - 1;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(csv_err)?;
        // data rows are 1-based after the header line
        let row = i + 2;
        for (j, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| Error::NonNumeric {
                row,
                column: header[j].clone(),
                value: cell.to_owned(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonNumeric {
                    row,
                    column: header[j].clone(),
                    value: cell.to_owned(),
                });
            }
            if j == response_idx {
                ys.push(value);
            } else {
                xs.push(value);
            }
        }
    }
    if ys.is_empty() || p == 0 {
        return Err(Error::EmptyData);
    }
    let names = header
        .into_iter()
        .enumerate()
        .filter(|&(j, _)| j != response_idx)
        .map(|(_, h)| h)
        .collect();
    let x = DMatrix::from_row_slice(ys.len(), p, &xs);
    Dataset::new(x, DVector::from_vec(ys), names)
}

/// Centers `y` and centers and scales every column of `X`.
///
/// Re-standardizing an already standardized dataset is a no-op up to
/// rounding; the recorded transform is composed so coefficients can always
/// be mapped back to the original data scale.
pub fn standardize(ds: &Dataset, mode: ScaleMode) -> Result<Dataset> {
    let n = ds.n() as f64;
    let y_center = ds.y.mean();
    let y = ds.y.map(|v| v - y_center);

    let mut x = ds.x.clone();
    let mut x_center = Vec::with_capacity(ds.p());
    let mut x_scale = Vec::with_capacity(ds.p());
    for (j, mut col) in x.column_iter_mut().enumerate() {
        let center = col.sum() / n;
        col.add_scalar_mut(-center);
        let scale = mode.scale_of(col.as_slice());
        if !(scale > 0.0) || scale < 1e-300 {
            return Err(Error::ConstantColumn(ds.column_names[j].clone()));
        }
        col /= scale;
        x_center.push(center);
        x_scale.push(scale);
    }

    let step = Standardization {
        mode,
        y_center,
        x_center,
        x_scale,
    };
    let standardization = match &ds.standardization {
        Some(prev) => step.compose(prev),
        None => step,
    };
    Ok(Dataset {
        x,
        y,
        column_names: ds.column_names.clone(),
        standardization: Some(standardization),
    })
}

/// Lasso rate `λ` and noise variance `σ²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparams {
    pub lambda: f64,
    pub sigma2: f64,
}

impl Hyperparams {
    pub fn new(lambda: f64, sigma2: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("λ must be positive, got {lambda}")));
        }
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::InvalidParameter(format!("σ² must be positive, got {sigma2}")));
        }
        Ok(Self { lambda, sigma2 })
    }

    /// Builds from `λ` and the noise standard deviation `σ`.
    pub fn from_sigma(lambda: f64, sigma: f64) -> Result<Self> {
        Self::new(lambda, sigma * sigma)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }
}

/// One point `(β, τ)` of the augmented chain.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub beta: DVector<f64>,
    pub tau: DVector<f64>,
}

impl ChainState {
    pub fn new(beta: DVector<f64>, tau: DVector<f64>) -> Result<Self> {
        if beta.len() != tau.len() {
            return Err(Error::InvalidParameter(format!(
                "β has {} entries but τ has {}",
                beta.len(),
                tau.len()
            )));
        }
        if tau.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::InvalidParameter("τ must be strictly positive".into()));
        }
        Ok(Self { beta, tau })
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }
}

/// Length `M_r` of one tour and the sums `H_r` of each monitored function over it.
#[derive(Clone, Debug, PartialEq)]
pub struct TourStats {
    pub length: usize,
    pub sums: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn col(values: &[f64]) -> Dataset {
        Dataset::new(
            DMatrix::from_column_slice(values.len(), 1, values),
            DVector::from_element(values.len(), 1.0),
            vec!["a".into()],
        )
        .unwrap()
    }

    #[test]
    fn loads_small_csv() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b,y\n1,2,3\n4,5,6\n7,8,10").unwrap();
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!((ds.n(), ds.p()), (3, 2));
        assert_eq!(ds.column_names, vec!["a", "b"]);
        assert_eq!(ds.x[(1, 1)], 5.0);
        assert_eq!(ds.y[2], 10.0);
        assert!(ds.standardization.is_none());
    }

    #[test]
    fn response_may_sit_anywhere() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "y,a\n1,2\n3,4").unwrap();
        let ds = load_csv(f.path(), "y").unwrap();
        assert_eq!(ds.column_names, vec!["a"]);
        assert_eq!(ds.y.as_slice(), &[1.0, 3.0]);
    }

    #[test]
    fn reports_bad_cell_position() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,y\n1,2\nx,3").unwrap();
        match load_csv(f.path(), "y") {
            Err(Error::NonNumeric { row, column, .. }) => {
                assert_eq!(row, 3);
                assert_eq!(column, "a");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_response_and_file() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b\n1,2").unwrap();
        assert!(matches!(load_csv(f.path(), "y"), Err(Error::MissingColumn(_))));
        assert!(matches!(load_csv("/nonexistent/file.csv", "y"), Err(Error::Io { .. })));
    }

    #[test]
    fn unit_variance_column() {
        let ds = standardize(&col(&[1.0, 2.0, 3.0]), ScaleMode::UnitVariance).unwrap();
        let got = ds.x.column(0);
        for (g, w) in got.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!(ds.y.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn unit_l2_column() {
        let ds = standardize(&col(&[1.0, 2.0, 3.0]), ScaleMode::UnitL2Norm).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for (g, w) in ds.x.column(0).iter().zip([-r, 0.0, r]) {
            assert!((g - w).abs() < 1e-15);
        }
    }

    #[test]
    fn constant_column_rejected() {
        assert!(matches!(
            standardize(&col(&[2.0, 2.0, 2.0]), ScaleMode::UnitVariance),
            Err(Error::ConstantColumn(_))
        ));
    }

    #[test]
    fn hyperparams_validate() {
        assert!(Hyperparams::new(0.0, 1.0).is_err());
        assert!(Hyperparams::new(1.0, -1.0).is_err());
        let hp = Hyperparams::from_sigma(0.5, 3.0).unwrap();
        assert_eq!(hp.sigma2, 9.0);
    }

    #[test]
    fn chain_state_rejects_nonpositive_tau() {
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!(ChainState::new(b.clone(), DVector::from_vec(vec![1.0, 0.0])).is_err());
        assert!(ChainState::new(b, DVector::from_vec(vec![1.0])).is_err());
    }
}
