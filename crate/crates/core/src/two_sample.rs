//! Two-sample tests of `H₀: m₁(u,·) = m₂(u,·)` at a fixed rescaled time.
//!
//! With `X̄`, `Ȳ` the local means of the two (independent) series and
//! `scale = T₁T₂h/(T₁+T₂)`:
//!
//! * `U  = scale · ‖X̄ − Ȳ‖²`, asymptotically `Σ_j η_j N_j²`;
//! * `Ū  = scale · Σ_{j≤q} ⟨X̄ − Ȳ, ν̂_j⟩²`, asymptotically `Σ_{j≤q} η_j N_j²`;
//! * `Ũ  = scale · Σ_{j≤q} ⟨X̄ − Ȳ, ν̂_j⟩² / η̂_j`, asymptotically `χ²(q)`.
//!
//! `(η̂_j, ν̂_j)` are the eigenpairs of the pooled long-run kernel
//! `φ̂ = (1 − θ̂) ĉ₁ + θ̂ ĉ₂`, `θ̂ = T₁/(T₁+T₂)`, with eigenvalues multiplied by
//! `∫K₁²` so that they describe the covariance of `√scale (X̄ − Ȳ)`.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{LsftsError, Result};
use crate::grid::{dot_weighted, FunctionalSeries};
use crate::kernels::{default_bandwidth_b, LagWindowKernel, LocalSmoother};
use crate::local_mean::local_mean;
use crate::longrun::longrun_cov;
use crate::operator::{operator_eigh, LocalCovariance};
use crate::par::maybe_par_iter;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

pub const DEFAULT_EPS0: f64 = 1e-4;
pub const DEFAULT_MC_DRAWS: usize = 100_000;
pub const DEFAULT_MC_SEED: u64 = 20_240_521;
const MC_BLOCK: usize = 4096;

/// Number of principal components: fixed, or chosen by [`select_q_ratio`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OrderChoice {
    Auto,
    Fixed(usize),
}

impl FromStr for OrderChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(Self::Auto);
        }
        match s.parse::<usize>() {
            Ok(q) if q >= 1 => Ok(Self::Fixed(q)),
            _ => Err(format!("expected `auto` or a positive integer, got `{s}`")),
        }
    }
}

impl fmt::Display for OrderChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Auto => write!(f, "auto"),
            Self::Fixed(q) => write!(f, "{q}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    Chisq,
    McWeighted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleResult {
    #[serde(rename = "statistic_U")]
    pub statistic_u: f64,
    #[serde(rename = "statistic_Ubar")]
    pub statistic_ubar: f64,
    #[serde(rename = "statistic_Utilde")]
    pub statistic_utilde: f64,
    pub q_used: usize,
    /// Upper-tail probability of `Ũ` under `χ²(q)`.
    pub p_value: f64,
    pub method: PValueMethod,
    /// Monte Carlo p-value of `Ū` under `Σ_{j≤q} η̂_j N_j²`, when draws were requested.
    pub p_value_ubar: Option<f64>,
    /// Monte Carlo p-value of `U` under `Σ_j η̂_j N_j²` over all positive `η̂_j`.
    pub p_value_u: Option<f64>,
    pub theta_hat: f64,
    /// Leading `q` eigenvalues `η̂_j` (already multiplied by `∫K₁²`).
    pub eta: Vec<f64>,
    pub u: f64,
    pub h: f64,
    pub b: f64,
}

/// Settings for [`projected_tests`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoSampleConfig {
    pub smoother: LocalSmoother,
    /// Lag-window bandwidth; `None` uses `(T h)^{1/3}` with `T = min(T₁, T₂)`.
    pub b: Option<f64>,
    pub lag_window: LagWindowKernel,
    pub q: OrderChoice,
    pub eps0: f64,
    /// Monte Carlo draws for the weighted chi-square p-values; `None` skips them.
    pub mc_draws: Option<usize>,
    pub seed: u64,
}

impl TwoSampleConfig {
    pub fn new(smoother: LocalSmoother, q: OrderChoice) -> Self {
        Self {
            smoother,
            b: None,
            lag_window: LagWindowKernel::Bartlett,
            q,
            eps0: DEFAULT_EPS0,
            mc_draws: Some(DEFAULT_MC_DRAWS),
            seed: DEFAULT_MC_SEED,
        }
    }
}

fn check_same_grid(x: &FunctionalSeries, y: &FunctionalSeries) -> Result<()> {
    if x.grid() != y.grid() {
        return Err(LsftsError::GridMismatch);
    }
    Ok(())
}

fn scale_factor(t1: usize, t2: usize, h: f64) -> f64 {
    let (a, b) = (t1 as f64, t2 as f64);
    a * b * h / (a + b)
}

/// `U = T₁T₂h/(T₁+T₂) · ‖X̄ − Ȳ‖²`.
pub fn u_statistic(x: &FunctionalSeries, y: &FunctionalSeries, u: f64, smoother: &LocalSmoother) -> Result<f64> {
    check_same_grid(x, y)?;
    let diff = mean_difference(x, y, u, smoother)?;
    let w = x.grid().weights();
    Ok(scale_factor(x.len(), y.len(), smoother.h) * dot_weighted(&diff, &diff, w))
}

fn mean_difference(x: &FunctionalSeries, y: &FunctionalSeries, u: f64, smoother: &LocalSmoother) -> Result<Vec<f64>> {
    let mx = local_mean(x, u, smoother)?;
    let my = local_mean(y, u, smoother)?;
    Ok(mx.iter().zip(&my).map(|(a, b)| a - b).collect())
}

/// `φ̂ = (1 − θ̂) ĉ_X + θ̂ ĉ_Y` with `θ̂ = T₁/(T₁+T₂)`.
pub fn pooled_longrun(
    x: &FunctionalSeries,
    y: &FunctionalSeries,
    u: f64,
    smoother: &LocalSmoother,
    b: f64,
    lag_window: LagWindowKernel,
) -> Result<LocalCovariance> {
    check_same_grid(x, y)?;
    let theta = x.len() as f64 / (x.len() + y.len()) as f64;
    let cx = longrun_cov(x, u, smoother, b, lag_window)?;
    let cy = longrun_cov(y, u, smoother, b, lag_window)?;
    let kernel = cx.kernel() * (1.0 - theta) + cy.kernel() * theta;
    LocalCovariance::new(kernel, x.grid().clone(), u, smoother.h)
}

/// Eigenvalue-ratio order selector.
///
/// Eigenvalues with `|η_j/η_1| < eps0` are set to zero; returns the smallest
/// `j ∈ 1..=q_bar` minimizing `η_{j+1}/η_j`, with `0/0 = 1`.
pub fn select_q_ratio(eigenvalues: &[f64], q_bar: usize, eps0: f64) -> Result<usize> {
    if q_bar == 0 || q_bar >= eigenvalues.len() {
        return Err(LsftsError::InvalidOrder {
            q: q_bar,
            n: eigenvalues.len(),
        });
    }
    if !(eps0 > 0.0) {
        return Err(LsftsError::Config(format!("eps0 must be positive, got {eps0}")));
    }
    let lead = eigenvalues[0];
    if !(lead > 0.0) {
        return Err(LsftsError::UndefinedOrder);
    }
    let thresholded: Vec<f64> = eigenvalues
        .iter()
        .map(|&e| if (e / lead).abs() < eps0 { 0.0 } else { e })
        .collect();
    let ratio = |j: usize| -> f64 {
        let (num, den) = (thresholded[j + 1], thresholded[j]);
        match (num == 0.0, den == 0.0) {
            (true, true) => 1.0,
            (false, true) => f64::INFINITY,
            _ => num / den,
        }
    };
    let mut best = 1;
    let mut best_ratio = ratio(0);
    for j in 2..=q_bar {
        let r = ratio(j - 1);
        if r < best_ratio {
            best = j;
            best_ratio = r;
        }
    }
    Ok(best)
}

/// Monte Carlo estimate of `P(Σ_j w_j N_j² ≥ observed)`.
///
/// Draws are generated in fixed blocks, block `i` using ChaCha stream `i` of
/// `seed`, so the result does not depend on the thread count.
pub fn pvalue_weighted_chisq(weights: &[f64], observed: f64, n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc < 1000 {
        return Err(LsftsError::Config(format!("need at least 1000 draws, got {n_mc}")));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(LsftsError::Config("weights must be nonnegative".into()));
    }
    if observed <= 0.0 {
        return Ok(1.0);
    }
    if weights.iter().all(|&w| w == 0.0) {
        log::warn!("all weights are zero; the null law is a point mass at 0");
        return Ok(0.0);
    }
    let blocks = n_mc.div_ceil(MC_BLOCK);
    let exceed: usize = maybe_par_iter!(0..blocks)
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(block as u64);
            let draws = MC_BLOCK.min(n_mc - block * MC_BLOCK);
            (0..draws)
                .filter(|_| {
                    let s: f64 = weights
                        .iter()
                        .map(|w| {
                            let z: f64 = StandardNormal.sample(&mut rng);
                            w * z * z
                        })
                        .sum();
                    s >= observed
                })
                .count()
        })
        .sum();
    Ok(exceed as f64 / n_mc as f64)
}

/// `U`, `Ū` and `Ũ` with their p-values.
pub fn projected_tests(x: &FunctionalSeries, y: &FunctionalSeries, u: f64, config: &TwoSampleConfig) -> Result<TwoSampleResult> {
    check_same_grid(x, y)?;
    let smoother = &config.smoother;
    let (t1, t2) = (x.len(), y.len());
    let n = x.grid().len();
    let w = x.grid().weights();
    let scale = scale_factor(t1, t2, smoother.h);
    let b = match config.b {
        Some(b) => b,
        None => default_bandwidth_b(t1.min(t2), smoother.h)?,
    };

    let diff = mean_difference(x, y, u, smoother)?;
    let statistic_u = scale * dot_weighted(&diff, &diff, w);

    let phi = pooled_longrun(x, y, u, smoother, b, config.lag_window)?;
    let eig = operator_eigh(&phi, n)?;
    let k2 = smoother.kernel.squared_integral();
    let lead = eig.eigenvalues.first().map_or(0.0, |l| l.abs());
    let most_negative = eig.eigenvalues.iter().copied().fold(0.0, f64::min);
    if most_negative < -1e-10 * lead.max(1e-300) {
        log::warn!("long-run kernel is not PSD at u={u}; clipping eigenvalues down to {most_negative:e} at zero");
    }
    let eta: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0) * k2).collect();

    let q = match config.q {
        OrderChoice::Fixed(q) => {
            if q == 0 || q > n {
                return Err(LsftsError::InvalidOrder { q, n });
            }
            q
        }
        OrderChoice::Auto => select_q_ratio(&eta, 10.min(n - 1), config.eps0)?,
    };
    if !(eta[0] > 0.0) {
        return Err(LsftsError::RankDeficient { index: 1 });
    }
    if let Some(j) = (0..q).find(|&j| eta[j] < config.eps0 * eta[0]) {
        return Err(LsftsError::RankDeficient { index: j + 1 });
    }

    let mut ubar = 0.0;
    let mut utilde = 0.0;
    for (v, &e) in eig.eigenfunctions.iter().zip(&eta).take(q) {
        let score = dot_weighted(&diff, v, w);
        ubar += score * score;
        utilde += score * score / e;
    }
    let statistic_ubar = scale * ubar;
    let statistic_utilde = scale * utilde;

    let chi = ChiSquared::new(q as f64).map_err(|e| LsftsError::Numeric(e.to_string()))?;
    let p_value = if statistic_utilde <= 0.0 {
        1.0
    } else {
        chi.sf(statistic_utilde).clamp(0.0, 1.0)
    };

    let (p_value_ubar, p_value_u) = match config.mc_draws {
        Some(draws) => {
            let positive: Vec<f64> = eta.iter().copied().filter(|&e| e > 0.0).collect();
            (
                Some(pvalue_weighted_chisq(&eta[..q], statistic_ubar, draws, config.seed)?),
                Some(pvalue_weighted_chisq(&positive, statistic_u, draws, config.seed)?),
            )
        }
        None => (None, None),
    };

    Ok(TwoSampleResult {
        statistic_u,
        statistic_ubar,
        statistic_utilde,
        q_used: q,
        p_value,
        method: PValueMethod::Chisq,
        p_value_ubar,
        p_value_u,
        theta_hat: t1 as f64 / (t1 + t2) as f64,
        eta: eta[..q].to_vec(),
        u,
        h: smoother.h,
        b,
    })
}
