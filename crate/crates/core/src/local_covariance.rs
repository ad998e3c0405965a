//! Empirical local covariance operator `Ĉ_u`, local FPCA and sign alignment.

use nalgebra::DMatrix;

use crate::error::{LsftsError, Result};
use crate::grid::{inner_product, l2_norm, FunctionalSeries, Grid};
use crate::kernels::LocalSmoother;
use crate::local_mean::weighted_mean;
use crate::operator::{operator_eigh, EigenSystem, LocalCovariance};

const NEGATIVE_EIGEN_TOL: f64 = 1e-10;

/// `Σ_j w_j (X_j − c)(X_{j−lag} − c)ᵀ` over the rows `j` with `j ≥ lag` and a
/// weight. `w` may be shorter than the series; missing weights count as zero.
pub(crate) fn cross_moment(x: &DMatrix<f64>, w: &[f64], center: Option<&[f64]>, lag: usize) -> DMatrix<f64> {
    let n = x.ncols();
    let rows = w.len().min(x.nrows());
    let first = w[..rows].iter().position(|&v| v != 0.0);
    let Some(first) = first else {
        return DMatrix::zeros(n, n);
    };
    let last = w[..rows].iter().rposition(|&v| v != 0.0).unwrap_or(first) + 1;
    let start = first.max(lag);
    if start >= last {
        return DMatrix::zeros(n, n);
    }
    let m = last - start;
    let zero = vec![0.0; n];
    let c = center.unwrap_or(&zero);
    let lead = DMatrix::from_fn(m, n, |r, i| w[start + r] * (x[(start + r, i)] - c[i]));
    let lagged = DMatrix::from_fn(m, n, |r, k| x[(start + r - lag, k)] - c[k]);
    lead.transpose() * lagged
}

pub(crate) fn symmetrize(k: DMatrix<f64>) -> DMatrix<f64> {
    (&k + k.transpose()) * 0.5
}

/// `Ĉ_u = Σ_t w_t (X_t − X̄)(X_t − X̄)ᵀ`, with `X̄ = X̄_T^(u)` when `center` is set
/// and zero otherwise.
pub fn local_cov(series: &FunctionalSeries, u: f64, smoother: &LocalSmoother, center: bool) -> Result<LocalCovariance> {
    let weights = smoother.weights(u, series.len())?;
    let mean = center.then(|| weighted_mean(series, &weights));
    let k = cross_moment(series.values(), &weights.values, mean.as_deref(), 0);
    LocalCovariance::new(symmetrize(k), series.grid().clone(), u, smoother.h)
}

/// Top-`q` eigenpairs of a local covariance operator.
///
/// Slightly negative eigenvalues (rounding) are clamped to zero; anything below
/// `-1e-10` relative to `max(1, λ₁)` is reported as [`LsftsError::NotPsd`].
pub fn local_fpca(c: &LocalCovariance, q: usize) -> Result<EigenSystem> {
    let mut eig = operator_eigh(c, q)?;
    let scale = eig.eigenvalues.first().map_or(1.0, |l| l.abs().max(1.0));
    for l in eig.eigenvalues.iter_mut() {
        if *l < 0.0 {
            if *l < -NEGATIVE_EIGEN_TOL * scale {
                return Err(LsftsError::NotPsd(*l));
            }
            log::debug!("clamping eigenvalue {l:e} to zero");
            *l = 0.0;
        }
    }
    Ok(eig)
}

/// Result of [`align_sign`].
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedCurve {
    pub curve: Vec<f64>,
    /// The inner product with the reference vanished, so the sign is arbitrary.
    pub ambiguous: bool,
}

/// Multiplies `v_hat` by `sign(⟨v_hat, v_ref⟩)`, treating sign 0 as `+1`.
pub fn align_sign(v_hat: &[f64], v_ref: &[f64], grid: &Grid) -> Result<AlignedCurve> {
    let ip = inner_product(v_hat, v_ref, grid)?;
    let scale = l2_norm(v_hat, grid)? * l2_norm(v_ref, grid)?;
    let ambiguous = ip.abs() <= 1e-12 * scale;
    let curve = if ip < 0.0 && !ambiguous {
        v_hat.iter().map(|v| -v).collect()
    } else {
        v_hat.to_vec()
    };
    Ok(AlignedCurve { curve, ambiguous })
}
