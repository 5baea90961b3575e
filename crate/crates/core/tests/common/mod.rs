//! Test-only reference implementations, independent of the crate's numerics.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use regen_lasso::{Dataset, RngStream};
use statrs::function::erf::erfc;

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn data_path(name: &str) -> PathBuf {
    repo_root().join("data").join(name)
}

pub fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

/// `ln Φ(-z)`, accurate far into the upper tail.
pub fn ln_upper_normal(z: f64) -> f64 {
    if z < 8.0 {
        (0.5 * erfc(z / std::f64::consts::SQRT_2)).ln()
    } else {
        let z2 = z * z;
        let series = 1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
        -0.5 * z2 - (2.0 * std::f64::consts::PI).sqrt().ln() - z.ln() + series.ln()
    }
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Inverse-Gaussian CDF:
/// `Φ(√(s/x)(x/μ - 1)) + exp(2s/μ) Φ(-√(s/x)(x/μ + 1))`.
pub fn ig_cdf(x: f64, mean: f64, shape: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let r = (shape / x).sqrt();
    let first = normal_cdf(r * (x / mean - 1.0));
    let second = (2.0 * shape / mean + ln_upper_normal(r * (x / mean + 1.0))).exp();
    (first + second).min(1.0)
}

/// One-sample Kolmogorov–Smirnov statistic.
pub fn ks_statistic(mut sample: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    sample.sort_by(f64::total_cmp);
    let n = sample.len() as f64;
    sample
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

pub fn normals(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `y = Xβ + σ_noise·e` with iid standard normal design.
pub fn synthetic(n: usize, beta: &[f64], noise: f64, seed: u64) -> Dataset {
    let mut rng = RngStream::new(seed, 99);
    let p = beta.len();
    let x = DMatrix::from_iterator(n, p, normals(&mut rng, n * p));
    let e = DVector::from_vec(normals(&mut rng, n));
    let y = &x * DVector::from_column_slice(beta) + e * noise;
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(x, y, names).unwrap()
}

/// Dense-inverse oracle for `(XᵀX + σ² diag τ)⁻¹`.
pub fn a_matrix(ds: &Dataset, tau: &DVector<f64>, sigma2: f64) -> DMatrix<f64> {
    let m = ds.x.transpose() * &ds.x + DMatrix::from_diagonal(&(tau * sigma2));
    m.lu().try_inverse().unwrap()
}

/// Unnormalised posterior of the one-predictor model with `τ` integrated
/// out: `exp(-(y - xβ)ᵀ(y - xβ)/(2σ²) - λ|β|)`.
pub fn one_predictor_posterior(x: &[f64], y: &[f64], sigma2: f64, lambda: f64) -> impl Fn(f64) -> f64 {
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let mode = sxy / sxx;
    move |b: f64| (-(sxx * (b - mode).powi(2)) / (2.0 * sigma2) - lambda * b.abs()).exp()
}

/// `½∫|φ₁ - φ₂|` for two normal densities.
pub fn gaussian_tv(m1: f64, s1: f64, m2: f64, s2: f64) -> f64 {
    let lo = m1.min(m2) - 12.0 * s1.max(s2);
    let hi = m1.max(m2) + 12.0 * s1.max(s2);
    let pdf = |x: f64, m: f64, s: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    0.5 * simpson(|x| (pdf(x, m1, s1) - pdf(x, m2, s2)).abs(), lo, hi, 40_000)
}
