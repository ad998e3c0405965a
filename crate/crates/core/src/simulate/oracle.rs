//! Literal triple-loop references for the kernel estimators.
//!
//! These follow the displayed sums term by term with paper-exact weights
//! `K₁((u − t/T)/h)/(Th)` and share no code with the estimators beyond the
//! scalar kernel functions. Inputs are capped at `T ≤ 50`, `n ≤ 16`.

#![allow(clippy::needless_range_loop)]

use nalgebra::DMatrix;

use crate::error::{LsftsError, Result};
use crate::grid::FunctionalSeries;
use crate::kernels::{k1_eval, k2_eval, LagWindowKernel, SmoothingKernel};
use crate::operator::LocalCovariance;

const MAX_T: usize = 50;
const MAX_N: usize = 16;

fn check_size(x: &FunctionalSeries) -> Result<()> {
    if x.len() > MAX_T || x.grid().len() > MAX_N {
        return Err(LsftsError::SizeCap {
            t: x.len(),
            n: x.grid().len(),
        });
    }
    Ok(())
}

fn kernel_weight(u: f64, t: usize, big_t: usize, h: f64, kernel: SmoothingKernel) -> f64 {
    k1_eval(kernel, (u - t as f64 / big_t as f64) / h) / (big_t as f64 * h)
}

/// `(1/Th) Σ_{t=1}^{T} K₁((u − t/T)/h) X_t(s_i)` for every `i`.
fn brute_force_mean(x: &FunctionalSeries, u: f64, h: f64, kernel: SmoothingKernel) -> Vec<f64> {
    let big_t = x.len();
    let n = x.grid().len();
    let mut mean = vec![0.0; n];
    for t in 1..=big_t {
        let w = kernel_weight(u, t, big_t, h, kernel);
        for i in 0..n {
            mean[i] += w * x.values()[(t - 1, i)];
        }
    }
    mean
}

/// Empirical local covariance, uncentered or centered by the local mean.
pub fn brute_force_local_cov(
    x: &FunctionalSeries,
    u: f64,
    h: f64,
    kernel: SmoothingKernel,
    center: bool,
) -> Result<LocalCovariance> {
    check_size(x)?;
    let big_t = x.len();
    let n = x.grid().len();
    let mean = if center {
        brute_force_mean(x, u, h, kernel)
    } else {
        vec![0.0; n]
    };
    let mut k = DMatrix::zeros(n, n);
    for t in 1..=big_t {
        let w = kernel_weight(u, t, big_t, h, kernel);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += w * (x.values()[(t - 1, i)] - mean[i]) * (x.values()[(t - 1, j)] - mean[j]);
            }
        }
    }
    LocalCovariance::new(k, x.grid().clone(), u, h)
}

/// One-sided estimator `(2/Th) Σ_{t ≤ T₁} K₁((u − t/T)/h) X_t ⊗ X_t` where
/// `x` holds the `T₁` observed curves.
pub fn brute_force_prediction_cov(
    x: &FunctionalSeries,
    total_len: usize,
    u: f64,
    h: f64,
    kernel: SmoothingKernel,
    center: bool,
) -> Result<LocalCovariance> {
    check_size(x)?;
    let t1 = x.len();
    let n = x.grid().len();
    let mut mean = vec![0.0; n];
    if center {
        for t in 1..=t1 {
            let w = 2.0 * kernel_weight(u, t, total_len, h, kernel);
            for i in 0..n {
                mean[i] += w * x.values()[(t - 1, i)];
            }
        }
    }
    let mut k = DMatrix::zeros(n, n);
    for t in 1..=t1 {
        let w = 2.0 * kernel_weight(u, t, total_len, h, kernel);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += w * (x.values()[(t - 1, i)] - mean[i]) * (x.values()[(t - 1, j)] - mean[j]);
            }
        }
    }
    LocalCovariance::new(k, x.grid().clone(), u, h)
}

/// `γ̂_lag(s_i, s_j) = (1/Th) Σ_{j'=lag+1}^{T} K₁((u − j'/T)/h) (X_{j'} − X̄)(s_i) (X_{j'−lag} − X̄)(s_j)`.
pub fn brute_force_local_autocov(
    x: &FunctionalSeries,
    u: f64,
    h: f64,
    kernel: SmoothingKernel,
    lag: usize,
) -> Result<LocalCovariance> {
    check_size(x)?;
    let big_t = x.len();
    if lag == 0 || lag >= big_t {
        return Err(LsftsError::LagOutOfRange { lag, max: big_t - 1 });
    }
    let n = x.grid().len();
    let mean = brute_force_mean(x, u, h, kernel);
    let mut k = DMatrix::zeros(n, n);
    for t in (lag + 1)..=big_t {
        let w = kernel_weight(u, t, big_t, h, kernel);
        for i in 0..n {
            for j in 0..n {
                k[(i, j)] += w * (x.values()[(t - 1, i)] - mean[i]) * (x.values()[(t - 1 - lag, j)] - mean[j]);
            }
        }
    }
    LocalCovariance::new(k, x.grid().clone(), u, h)
}

/// `γ̂₀ + Σ_{t=1}^{T−1} K₂(t/b) {γ̂_t(s₁,s₂) + γ̂_t(s₂,s₁)}` summed over every lag.
pub fn brute_force_longrun_cov(
    x: &FunctionalSeries,
    u: f64,
    h: f64,
    b: f64,
    k1: SmoothingKernel,
    k2: LagWindowKernel,
) -> Result<LocalCovariance> {
    check_size(x)?;
    let big_t = x.len();
    let n = x.grid().len();
    let mut total = brute_force_local_cov(x, u, h, k1, true)?.into_kernel();
    for lag in 1..big_t {
        let weight = k2_eval(k2, lag as f64 / b);
        let g = brute_force_local_autocov(x, u, h, k1, lag)?;
        for i in 0..n {
            for j in 0..n {
                total[(i, j)] += weight * (g.kernel()[(i, j)] + g.kernel()[(j, i)]);
            }
        }
    }
    LocalCovariance::new(total, x.grid().clone(), u, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;

    #[test]
    fn zero_series_gives_zero_kernel() {
        let grid = make_uniform_grid(6, 1).unwrap();
        let x = FunctionalSeries::new(DMatrix::zeros(10, 6), grid).unwrap();
        let k = brute_force_local_cov(&x, 0.5, 0.3, SmoothingKernel::Epanechnikov, true).unwrap();
        assert_eq!(k.kernel().amax(), 0.0);
    }

    #[test]
    fn single_curve_rank_one() {
        let grid = make_uniform_grid(4, 1).unwrap();
        let mut v = DMatrix::zeros(4, 4);
        let phi = [1.0, -2.0, 0.5, 3.0];
        for i in 0..4 {
            v[(1, i)] = phi[i];
        }
        let x = FunctionalSeries::new(v, grid).unwrap();
        // t = 2, T = 4, u = 0.5, h = 0.5 → K₁(0) / 2 = 0.375
        let k = brute_force_local_cov(&x, 0.5, 0.5, SmoothingKernel::Epanechnikov, false).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(k.kernel()[(i, j)], 0.375 * phi[i] * phi[j]);
            }
        }
    }

    #[test]
    fn size_cap() {
        let grid = make_uniform_grid(17, 1).unwrap();
        let x = FunctionalSeries::new(DMatrix::zeros(10, 17), grid).unwrap();
        assert!(matches!(
            brute_force_local_cov(&x, 0.5, 0.3, SmoothingKernel::Epanechnikov, true),
            Err(LsftsError::SizeCap { .. })
        ));
    }
}
