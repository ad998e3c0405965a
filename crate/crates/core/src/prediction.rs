//! k-step-ahead prediction by projecting the last observed curve onto the
//! leading eigenfunctions of a one-sided local covariance estimate.
//!
//! Only `X_1..X_{T₁}` are observed. The series is treated as the first `T₁`
//! curves of a length-`T` array with `T₁ + k < T`, and the covariance at `u`
//! is estimated as
//!
//! ```text
//! C̄_u = (2/(Th)) Σ_{t ≤ T₁} K₁((u − t/T)/h) X_t ⊗ X_t
//! ```
//!
//! The factor 2 compensates for the one-sided window; it is exact when
//! `u = T₁/T`, which is the default.

use serde::Serialize;

use crate::error::{LsftsError, Result};
use crate::grid::FunctionalSeries;
use crate::kernels::{check_time, k1_eval, LocalSmoother, WeightMode};
use crate::local_covariance::{cross_moment, local_fpca, symmetrize};
use crate::local_mean::weighted_mean_rows;
use crate::operator::{EigenSystem, LocalCovariance};
use crate::two_sample::{select_q_ratio, OrderChoice, DEFAULT_EPS0};

/// Weights of the one-sided estimator for `t = 1..T₁`.
pub fn prediction_weights(u: f64, observed: usize, total_len: usize, smoother: &LocalSmoother) -> Result<Vec<f64>> {
    check_time(u)?;
    if observed >= total_len {
        return Err(LsftsError::Horizon(format!(
            "need T1 < T, got T1={observed}, T={total_len}"
        )));
    }
    let tf = total_len as f64;
    let raw: Vec<f64> = (1..=observed)
        .map(|t| k1_eval(smoother.kernel, (u - t as f64 / tf) / smoother.h))
        .collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(LsftsError::EmptyWindow { u, h: smoother.h });
    }
    let scale = match smoother.mode {
        WeightMode::Paper => tf * smoother.h / 2.0,
        WeightMode::Normalized => total,
    };
    Ok(raw.into_iter().map(|k| k / scale).collect())
}

/// `C̄_u` from the observed curves `X_1..X_{T₁}` (`observed.len() = T₁`).
///
/// With `center`, curves are centered by `X̃ = Σ_{t≤T₁} w_t X_t` using the same weights.
pub fn prediction_cov(
    observed: &FunctionalSeries,
    total_len: usize,
    u: f64,
    smoother: &LocalSmoother,
    center: bool,
) -> Result<LocalCovariance> {
    if !(u > 0.0 && u < 1.0) {
        return Err(LsftsError::InvalidTime(u));
    }
    let w = prediction_weights(u, observed.len(), total_len, smoother)?;
    let mean = center.then(|| weighted_mean_rows(observed, &w));
    let k = cross_moment(observed.values(), &w, mean.as_deref(), 0);
    LocalCovariance::new(symmetrize(k), observed.grid().clone(), u, smoother.h)
}

/// Options for [`predict_k_step`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionConfig {
    /// Steps ahead, `k ≥ 1`.
    pub k: usize,
    pub q: OrderChoice,
    /// Length `T` of the notional series; defaults to `T₁ + k + 1`.
    pub total_len: Option<usize>,
    /// Rescaled time of the covariance estimate; defaults to `T₁/T`.
    pub u: Option<f64>,
    pub center: bool,
    /// Threshold used when `q` is selected automatically.
    pub eps0: f64,
}

impl PredictionConfig {
    pub fn new(k: usize, q: OrderChoice) -> Self {
        Self {
            k,
            q,
            total_len: None,
            u: None,
            center: false,
            eps0: DEFAULT_EPS0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub curve: Vec<f64>,
    pub q_used: usize,
    pub u: f64,
    pub total_len: usize,
    #[serde(skip)]
    pub eigen: EigenSystem,
}

/// `X̂_{T₁+k} = Σ_{j≤q} ⟨X_{T₁}, v̄_j⟩ v̄_j` with `v̄_j` the eigenfunctions of `C̄_u`.
pub fn predict_k_step(observed: &FunctionalSeries, config: &PredictionConfig, smoother: &LocalSmoother) -> Result<Prediction> {
    let t1 = observed.len();
    if config.k == 0 {
        return Err(LsftsError::Horizon("k must be at least 1".into()));
    }
    let total_len = config.total_len.unwrap_or(t1 + config.k + 1);
    if t1 + config.k >= total_len {
        return Err(LsftsError::Horizon(format!(
            "need T1 + k < T, got T1={t1}, k={}, T={total_len}",
            config.k
        )));
    }
    let u = config.u.unwrap_or(t1 as f64 / total_len as f64);
    let cov = prediction_cov(observed, total_len, u, smoother, config.center)?;
    let n = observed.grid().len();
    let needed = match config.q {
        OrderChoice::Fixed(q) => {
            if q == 0 || q > n {
                return Err(LsftsError::InvalidOrder { q, n });
            }
            q
        }
        OrderChoice::Auto => n,
    };
    let eigen = local_fpca(&cov, needed)?;
    let q_used = match config.q {
        OrderChoice::Fixed(q) => q,
        OrderChoice::Auto => select_q_ratio(&eigen.eigenvalues, 10.min(n - 1), config.eps0)?,
    };
    let curve = eigen.project(&observed.curve(t1), q_used)?;
    Ok(Prediction {
        curve,
        q_used,
        u,
        total_len,
        eigen,
    })
}
