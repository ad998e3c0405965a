//! Local lagged autocovariance surfaces and the lag-window estimator of the
//! long-run covariance kernel
//!
//! ```text
//! ĉ(s₁,s₂) = γ̂₀(s₁,s₂) + Σ_{t≥1} K₂(t/b) { γ̂_t(s₁,s₂) + γ̂_t(s₂,s₁) }
//! γ̂_t(s₁,s₂) = Σ_{j=t+1}^{T} w_j (X_j − X̄)(s₁) (X_{j−t} − X̄)(s₂)
//! ```
//!
//! with `X̄ = X̄_T^(u)` the full-sample local mean. The lag sum stops at
//! `⌊C₂ b⌋` because `K₂` vanishes beyond its support.

use nalgebra::DMatrix;

use crate::error::{LsftsError, Result};
use crate::grid::{dot_weighted, FunctionalSeries};
use crate::kernels::{LagWindowKernel, LocalSmoother};
use crate::local_covariance::{cross_moment, symmetrize};
use crate::local_mean::weighted_mean;
use crate::operator::LocalCovariance;
use crate::par::maybe_par_iter;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `γ̂_lag^(u)`, centered by the local mean. Not symmetric in `(s₁, s₂)`.
pub fn local_autocov(series: &FunctionalSeries, u: f64, smoother: &LocalSmoother, lag: usize) -> Result<LocalCovariance> {
    let t = series.len();
    if lag == 0 || lag >= t {
        return Err(LsftsError::LagOutOfRange { lag, max: t - 1 });
    }
    let weights = smoother.weights(u, t)?;
    let mean = weighted_mean(series, &weights);
    let k = cross_moment(series.values(), &weights.values, Some(&mean), lag);
    LocalCovariance::new(k, series.grid().clone(), u, smoother.h)
}

/// Largest lag entering the estimator for bandwidth `b`.
pub fn max_lag(t: usize, b: f64, lag_window: LagWindowKernel) -> usize {
    let cutoff = (lag_window.support_radius() * b).floor();
    if cutoff < 1.0 {
        0
    } else {
        (cutoff as usize).min(t.saturating_sub(1))
    }
}

/// Lag-window estimator `ĉ^(u)` of the long-run covariance kernel.
pub fn longrun_cov(
    series: &FunctionalSeries,
    u: f64,
    smoother: &LocalSmoother,
    b: f64,
    lag_window: LagWindowKernel,
) -> Result<LocalCovariance> {
    if !(b > 0.0) || !b.is_finite() {
        return Err(LsftsError::InvalidBandwidth(format!("b must be positive, got {b}")));
    }
    let t = series.len();
    let weights = smoother.weights(u, t)?;
    let mean = weighted_mean(series, &weights);
    let x = series.values();

    let gamma0 = symmetrize(cross_moment(x, &weights.values, Some(&mean), 0));
    let lags = max_lag(t, b, lag_window);
    let terms: Vec<DMatrix<f64>> = maybe_par_iter!(1..=lags)
        .map(|lag| {
            let k2 = lag_window.eval(lag as f64 / b);
            if k2 == 0.0 {
                return None;
            }
            let g = cross_moment(x, &weights.values, Some(&mean), lag);
            Some((&g + g.transpose()) * k2)
        })
        .flatten()
        .collect();

    let mut total = gamma0;
    for term in &terms {
        total += term;
    }
    LocalCovariance::new(total, series.grid().clone(), u, smoother.h)
}

/// `⟨C d, d⟩` by product quadrature.
pub fn longrun_direction_value(c: &LocalCovariance, direction: &[f64]) -> Result<f64> {
    let applied = c.apply(direction)?;
    Ok(dot_weighted(&applied, direction, c.grid().weights()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_uniform_grid;
    use crate::local_covariance::local_cov;
    use crate::simulate::fourier_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_series(t: usize, n: usize, seed: u64) -> FunctionalSeries {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = make_uniform_grid(n, 1).unwrap();
        FunctionalSeries::new(DMatrix::from_fn(t, n, |_, _| rng.random_range(-1.0..1.0)), grid).unwrap()
    }

    #[test]
    fn three_curves_by_hand() {
        let grid = make_uniform_grid(2, 1).unwrap();
        let rows = vec![vec![1.0, 2.0], vec![0.0, -1.0], vec![3.0, 1.0]];
        let series = FunctionalSeries::from_rows(&rows, grid).unwrap();
        let sm = LocalSmoother::epanechnikov(0.9).unwrap();
        let w: Vec<f64> = (1..=3)
            .map(|t| 0.75 * (1.0 - ((0.5 - t as f64 / 3.0) / 0.9).powi(2)) / (3.0 * 0.9))
            .collect();
        let mean: Vec<f64> = (0..2).map(|i| (0..3).map(|t| w[t] * rows[t][i]).sum()).collect();
        let g = local_autocov(&series, 0.5, &sm, 1).unwrap();
        for a in 0..2 {
            for c in 0..2 {
                let expected = w[1] * (rows[1][a] - mean[a]) * (rows[0][c] - mean[c])
                    + w[2] * (rows[2][a] - mean[a]) * (rows[1][c] - mean[c]);
                assert!((g.kernel()[(a, c)] - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn largest_lag_has_one_term() {
        let series = random_series(12, 3, 4);
        let sm = LocalSmoother::epanechnikov(1.0).unwrap();
        let w = sm.weights(0.5, 12).unwrap().values;
        let mean = local_mean_of(&series, &w);
        let g = local_autocov(&series, 0.5, &sm, 11).unwrap();
        let x = series.values();
        for a in 0..3 {
            for c in 0..3 {
                let expected = w[11] * (x[(11, a)] - mean[a]) * (x[(0, c)] - mean[c]);
                assert!((g.kernel()[(a, c)] - expected).abs() < 1e-15);
            }
        }
    }

    fn local_mean_of(series: &FunctionalSeries, w: &[f64]) -> Vec<f64> {
        let x = series.values();
        (0..x.ncols()).map(|i| (0..x.nrows()).map(|t| w[t] * x[(t, i)]).sum()).collect()
    }

    #[test]
    fn lag_out_of_range() {
        let series = random_series(5, 3, 1);
        let sm = LocalSmoother::epanechnikov(0.5).unwrap();
        assert!(matches!(local_autocov(&series, 0.5, &sm, 0), Err(LsftsError::LagOutOfRange { .. })));
        assert!(matches!(local_autocov(&series, 0.5, &sm, 5), Err(LsftsError::LagOutOfRange { .. })));
    }

    #[test]
    fn small_b_reduces_to_centered_covariance() {
        let series = random_series(80, 6, 3);
        let sm = LocalSmoother::epanechnikov(0.2).unwrap();
        let lr = longrun_cov(&series, 0.5, &sm, 0.5, LagWindowKernel::Bartlett).unwrap();
        let c = local_cov(&series, 0.5, &sm, true).unwrap();
        assert!((lr.kernel() - c.kernel()).amax() < 1e-12);
        assert!(longrun_cov(&series, 0.5, &sm, 0.0, LagWindowKernel::Bartlett).is_err());
    }

    #[test]
    fn output_is_exactly_symmetric() {
        let series = random_series(200, 7, 8);
        let sm = LocalSmoother::epanechnikov(0.15).unwrap();
        let lr = longrun_cov(&series, 0.4, &sm, 6.3, LagWindowKernel::Parzen).unwrap();
        assert_eq!(lr.kernel(), &lr.kernel().transpose());
    }

    #[test]
    fn direction_values() {
        let grid = make_uniform_grid(101, 1).unwrap();
        let phi = grid.sample(|s| fourier_basis(2, s));
        let c = LocalCovariance::from_components(grid.clone(), &[(1.0, phi.clone())], 0.5, 0.1).unwrap();
        assert!((longrun_direction_value(&c, &phi).unwrap() - 1.0).abs() < 1e-12);
        let zero = LocalCovariance::zeros(grid, 0.5, 0.1);
        assert_eq!(longrun_direction_value(&zero, &phi).unwrap(), 0.0);
    }

    #[test]
    fn white_noise_autocov_is_small() {
        let mut acc = DMatrix::<f64>::zeros(5, 5);
        let reps = 20;
        let (t, h) = (4000, 0.1);
        for seed in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
            let grid = make_uniform_grid(5, 1).unwrap();
            let normal = rand_distr::StandardNormal;
            let series = FunctionalSeries::new(DMatrix::from_fn(t, 5, |_, _| rng.sample::<f64, _>(normal)), grid).unwrap();
            let sm = LocalSmoother::epanechnikov(h).unwrap();
            acc += local_autocov(&series, 0.5, &sm, 1).unwrap().kernel();
        }
        acc /= reps as f64;
        let envelope = 5.0 / (t as f64 * h).sqrt();
        assert!(acc.amax() < envelope, "{} vs {envelope}", acc.amax());
    }

    #[test]
    fn max_lag_truncation() {
        assert_eq!(max_lag(100, 0.9, LagWindowKernel::Bartlett), 0);
        assert_eq!(max_lag(100, 4.64, LagWindowKernel::Bartlett), 4);
        assert_eq!(max_lag(3, 10.0, LagWindowKernel::Truncated), 2);
    }
}
