//! Locally weighted sample mean `X̄_T^(u) = Σ_t w_t X_{t,T}` and its CLT
//! standardization.

use crate::error::{LsftsError, Result};
use crate::grid::{inner_product, FunctionalSeries};
use crate::kernels::{LocalSmoother, LocalWeights};
use crate::par::maybe_par_iter;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Kernel-weighted average of the curves at rescaled time `u`.
pub fn local_mean(series: &FunctionalSeries, u: f64, smoother: &LocalSmoother) -> Result<Vec<f64>> {
    let weights = smoother.weights(u, series.len())?;
    Ok(weighted_mean(series, &weights))
}

pub(crate) fn weighted_mean(series: &FunctionalSeries, weights: &LocalWeights) -> Vec<f64> {
    weighted_mean_rows(series, &weights.values)
}

/// `Σ_t w_t X_t` over the rows that have a weight (`w.len()` may be below `T`).
pub(crate) fn weighted_mean_rows(series: &FunctionalSeries, w: &[f64]) -> Vec<f64> {
    let x = series.values();
    let n = x.ncols();
    let mut out = vec![0.0; n];
    for (t, &wt) in w.iter().enumerate() {
        if wt == 0.0 {
            continue;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o += wt * x[(t, i)];
        }
    }
    out
}

/// Local means at each `u` in `u_list`. Failures at one `u` do not abort the others.
pub fn mean_path(series: &FunctionalSeries, u_list: &[f64], smoother: &LocalSmoother) -> Vec<Result<Vec<f64>>> {
    maybe_par_iter!(0..u_list.len())
        .map(|i| local_mean(series, u_list[i], smoother))
        .collect()
}

/// `√(Th) ⟨X̄_T^(u) − m(u,·), d⟩ / √(ℓ ∫K₁²)` where `ℓ = ⟨C_lr d, d⟩`.
///
/// `mean` is the reference curve `m(u,·)`; `None` stands for the zero function.
pub fn clt_standardize(
    series: &FunctionalSeries,
    u: f64,
    smoother: &LocalSmoother,
    direction: &[f64],
    longrun_value: f64,
    mean: Option<&[f64]>,
) -> Result<f64> {
    let grid = series.grid();
    let norm_sq = inner_product(direction, direction, grid)?;
    if (norm_sq - 1.0).abs() > 1e-6 {
        return Err(LsftsError::Config(format!(
            "direction must have unit norm, got ∫d² = {norm_sq}"
        )));
    }
    if !(longrun_value > 0.0) {
        return Err(LsftsError::DegenerateDirection(longrun_value));
    }
    let mut xbar = local_mean(series, u, smoother)?;
    if let Some(m) = mean {
        grid.check_curve(m)?;
        xbar.iter_mut().zip(m).for_each(|(x, mi)| *x -= mi);
    }
    let projection = inner_product(&xbar, direction, grid)?;
    let th = series.len() as f64 * smoother.h;
    Ok(th.sqrt() * projection / (longrun_value * smoother.kernel.squared_integral()).sqrt())
}
