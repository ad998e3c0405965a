//! Locally stationary functional series with closed-form oracles.
//!
//! Curves are expansions in the Fourier basis,
//!
//! ```text
//! X_{t,T}(s) = m(t/T, s) + Σ_k ξ_t^(k) φ_k(s)
//! ξ_t^(k)    = a_k(t/T) ξ_{t−1}^(k) + σ_k(t/T) e_t^(k),   e_t^(k) iid N(0, 1)
//! ```
//!
//! with independent innovation streams per component. Freezing the
//! coefficient paths at `u` gives the stationary companion `X_t^(u)`, whose
//! covariance and long-run covariance are diagonal in the basis:
//!
//! ```text
//! λ_k(u)  = σ_k²(u) / (1 − a_k²(u))      (local covariance)
//! ℓ_k(u)  = σ_k²(u) / (1 − a_k(u))²      (long-run covariance)
//! ```

pub mod oracle;

use std::f64::consts::{PI, SQRT_2};

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{LsftsError, Result};
use crate::grid::{FunctionalSeries, Grid};
use crate::operator::{EigenSystem, LocalCovariance};

/// Steps discarded before `t = 1`.
pub const BURN_IN: usize = 500;

/// Orthonormal Fourier basis on `[0, 1]`: `φ₁ = 1`, `φ_{2m} = √2 cos(2πms)`,
/// `φ_{2m+1} = √2 sin(2πms)`. `k` is 1-based.
pub fn fourier_basis(k: usize, s: f64) -> f64 {
    assert!(k >= 1, "basis index is 1-based");
    if k == 1 {
        return 1.0;
    }
    let m = (k / 2) as f64;
    if k.is_multiple_of(2) {
        SQRT_2 * (2.0 * PI * m * s).cos()
    } else {
        SQRT_2 * (2.0 * PI * m * s).sin()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    #[default]
    Fourier,
}

/// Smooth scalar path `u ↦ value` on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Path {
    Constant { value: f64 },
    /// `start + (end − start) u`
    Linear { start: f64, end: f64 },
    /// `level + amplitude · cos(2π frequency u)`
    Cosine { level: f64, amplitude: f64, frequency: f64 },
}

impl Path {
    pub fn constant(value: f64) -> Self {
        Self::Constant { value }
    }

    pub fn linear(start: f64, end: f64) -> Self {
        Self::Linear { start, end }
    }

    pub fn eval(&self, u: f64) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Linear { start, end } => start + (end - start) * u,
            Self::Cosine {
                level,
                amplitude,
                frequency,
            } => level + amplitude * (2.0 * PI * frequency * u).cos(),
        }
    }

    /// Upper bound of `|path|` on `[0, 1]`.
    pub fn sup_abs(&self) -> f64 {
        match *self {
            Self::Constant { value } => value.abs(),
            Self::Linear { start, end } => start.abs().max(end.abs()),
            Self::Cosine { level, amplitude, .. } => level.abs() + amplitude.abs(),
        }
    }

    /// Lower bound of the path on `[0, 1]`.
    pub fn inf(&self) -> f64 {
        match *self {
            Self::Constant { value } => value,
            Self::Linear { start, end } => start.min(end),
            Self::Cosine { level, amplitude, .. } => level - amplitude.abs(),
        }
    }

    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            Self::Constant { .. } => 0.0,
            Self::Linear { start, end } => (end - start).abs(),
            Self::Cosine {
                amplitude, frequency, ..
            } => (2.0 * PI * frequency * amplitude).abs(),
        }
    }

    fn is_finite(&self) -> bool {
        match *self {
            Self::Constant { value } => value.is_finite(),
            Self::Linear { start, end } => start.is_finite() && end.is_finite(),
            Self::Cosine {
                level,
                amplitude,
                frequency,
            } => level.is_finite() && amplitude.is_finite() && frequency.is_finite(),
        }
    }
}

/// Time-varying AR(1) dynamics of one basis coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentModel {
    /// Autoregressive coefficient `a_k(u)`, `sup |a_k| < 1`.
    pub a: Path,
    /// Innovation scale `σ_k(u) ≥ 0`.
    pub sigma: Path,
}

/// One term `c(u) φ_k(s)` of the mean function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanTerm {
    /// 1-based Fourier index.
    pub basis: usize,
    pub coefficient: Path,
}

/// Full generative description of a simulated series.
///
/// Component `k` (1-based position in `components`) drives basis function `φ_k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub basis: Basis,
    pub components: Vec<ComponentModel>,
    #[serde(default)]
    pub mean: Vec<MeanTerm>,
    #[serde(default)]
    pub seed: u64,
}

impl SimConfig {
    pub fn new(components: Vec<ComponentModel>) -> Self {
        Self {
            basis: Basis::Fourier,
            components,
            mean: Vec::new(),
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mean(mut self, mean: Vec<MeanTerm>) -> Self {
        self.mean = mean;
        self
    }

    /// The same dynamics with a zero mean function.
    pub fn without_mean(&self) -> Self {
        Self {
            mean: Vec::new(),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.components.is_empty() {
            return Err(LsftsError::Config("at least one component is required".into()));
        }
        for (k, c) in self.components.iter().enumerate() {
            if !c.a.is_finite() || !c.sigma.is_finite() {
                return Err(LsftsError::Config(format!("component {} has non-finite parameters", k + 1)));
            }
            let sup = c.a.sup_abs();
            if sup >= 1.0 {
                return Err(LsftsError::Nonstationary(sup));
            }
            if c.sigma.inf() < 0.0 {
                return Err(LsftsError::Config(format!(
                    "component {} has a negative innovation scale",
                    k + 1
                )));
            }
        }
        for term in &self.mean {
            if term.basis == 0 {
                return Err(LsftsError::Config("mean basis indices are 1-based".into()));
            }
            if !term.coefficient.is_finite() {
                return Err(LsftsError::Config("mean coefficient is non-finite".into()));
            }
        }
        Ok(())
    }

    /// `m(u, s)`.
    pub fn mean_value(&self, u: f64, s: f64) -> f64 {
        self.mean
            .iter()
            .map(|term| term.coefficient.eval(u) * fourier_basis(term.basis, s))
            .sum()
    }

    pub fn mean_curve(&self, u: f64, grid: &Grid) -> Vec<f64> {
        grid.sample(|s| self.mean_value(u, s))
    }

    fn require_zero_mean(&self) -> Result<()> {
        if !self.mean.is_empty() {
            return Err(LsftsError::OracleUndefined(
                "oracle kernels describe the zero-mean error process; use without_mean()".into(),
            ));
        }
        Ok(())
    }

    /// Stationary variances `σ_k²(u)/(1 − a_k²(u))`, in component order.
    pub fn local_variances(&self, u: f64) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                let (a, s) = (c.a.eval(u), c.sigma.eval(u));
                s * s / (1.0 - a * a)
            })
            .collect()
    }

    /// Long-run variances `σ_k²(u)/(1 − a_k(u))²`, in component order.
    pub fn longrun_variances(&self, u: f64) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                let (a, s) = (c.a.eval(u), c.sigma.eval(u));
                s * s / ((1.0 - a) * (1.0 - a))
            })
            .collect()
    }
}

/// Simulates the basis coefficients `ξ_t^(k)`, `t = 1..T`, as a `T × K` matrix.
///
/// `freeze` pins every coefficient path at one rescaled time (the stationary
/// companion); otherwise step `t` uses `t/T` and burn-in uses `u = 0`.
/// Component `k` draws from ChaCha stream `k` of the seed, so runs with the
/// same seed share innovations.
pub fn simulate_coefficients(cfg: &SimConfig, t: usize, freeze: Option<f64>) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    if t < 2 {
        return Err(LsftsError::InvalidSeries(format!("need T >= 2, got {t}")));
    }
    let k = cfg.components.len();
    let tf = t as f64;
    let mut xi = DMatrix::zeros(t, k);
    for (idx, comp) in cfg.components.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(idx as u64);
        let time_at = |step: usize| freeze.unwrap_or(step as f64 / tf);
        let burn_u = freeze.unwrap_or(0.0);
        let (a0, s0) = (comp.a.eval(burn_u), comp.sigma.eval(burn_u));
        let mut state = 0.0;
        for _ in 0..BURN_IN {
            let e: f64 = StandardNormal.sample(&mut rng);
            state = a0 * state + s0 * e;
        }
        for step in 1..=t {
            let u = time_at(step);
            let e: f64 = StandardNormal.sample(&mut rng);
            state = comp.a.eval(u) * state + comp.sigma.eval(u) * e;
            xi[(step - 1, idx)] = state;
        }
    }
    Ok(xi)
}

fn assemble(cfg: &SimConfig, xi: &DMatrix<f64>, grid: &Grid, mean_time: impl Fn(usize) -> f64) -> Result<FunctionalSeries> {
    let k = cfg.components.len();
    let basis = DMatrix::from_fn(k, grid.len(), |j, i| fourier_basis(j + 1, grid.points()[i]));
    let mut values = xi * basis;
    if !cfg.mean.is_empty() {
        for step in 0..values.nrows() {
            let m = cfg.mean_curve(mean_time(step + 1), grid);
            for (i, mi) in m.into_iter().enumerate() {
                values[(step, i)] += mi;
            }
        }
    }
    FunctionalSeries::new(values, grid.clone())
}

/// `X_{t,T}`, `t = 1..T`, on `grid`. Deterministic given `cfg.seed`.
pub fn simulate_lsfts(cfg: &SimConfig, t: usize, grid: &Grid) -> Result<FunctionalSeries> {
    let xi = simulate_coefficients(cfg, t, None)?;
    let tf = t as f64;
    assemble(cfg, &xi, grid, |step| step as f64 / tf)
}

/// Stationary companion `X_t^(u)`, `t = 1..T`, driven by the same innovations
/// as [`simulate_lsfts`] with the same seed.
pub fn stationary_approx(cfg: &SimConfig, u: f64, t: usize, grid: &Grid) -> Result<FunctionalSeries> {
    crate::kernels::check_time(u)?;
    let xi = simulate_coefficients(cfg, t, Some(u))?;
    assemble(cfg, &xi, grid, |_| u)
}

fn diagonal_kernel(grid: &Grid, u: f64, variances: &[f64]) -> Result<LocalCovariance> {
    let components: Vec<(f64, Vec<f64>)> = variances
        .iter()
        .enumerate()
        .map(|(j, &v)| (v, grid.sample(|s| fourier_basis(j + 1, s))))
        .collect();
    LocalCovariance::from_components(grid.clone(), &components, u, 0.0)
}

fn diagonal_spectrum(grid: &Grid, variances: &[f64]) -> Result<EigenSystem> {
    let mut order: Vec<usize> = (0..variances.len()).collect();
    order.sort_by(|&a, &b| variances[b].total_cmp(&variances[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&j| variances[j]).collect();
    let functions = order.iter().map(|&j| grid.sample(|s| fourier_basis(j + 1, s))).collect();
    EigenSystem::new(values, functions, grid.clone())
}

/// `C_u = Σ_k λ_k(u) φ_k ⊗ φ_k` of the zero-mean companion process.
pub fn true_local_covariance(cfg: &SimConfig, u: f64, grid: &Grid) -> Result<LocalCovariance> {
    cfg.validate()?;
    cfg.require_zero_mean()?;
    diagonal_kernel(grid, u, &cfg.local_variances(u))
}

/// Eigenvalues `λ_k(u)` in descending order with eigenfunctions `φ_k`.
pub fn true_local_spectrum(cfg: &SimConfig, u: f64, grid: &Grid) -> Result<EigenSystem> {
    cfg.validate()?;
    cfg.require_zero_mean()?;
    diagonal_spectrum(grid, &cfg.local_variances(u))
}

/// Long-run kernel `c^(u) = Σ_k σ_k²(u)/(1 − a_k(u))² φ_k ⊗ φ_k`.
pub fn true_longrun_cov(cfg: &SimConfig, u: f64, grid: &Grid) -> Result<LocalCovariance> {
    cfg.validate()?;
    cfg.require_zero_mean()?;
    diagonal_kernel(grid, u, &cfg.longrun_variances(u))
}

/// Long-run eigenvalues in descending order with eigenfunctions `φ_k`.
pub fn true_longrun_spectrum(cfg: &SimConfig, u: f64, grid: &Grid) -> Result<EigenSystem> {
    cfg.validate()?;
    cfg.require_zero_mean()?;
    diagonal_spectrum(grid, &cfg.longrun_variances(u))
}
