//! Monte Carlo experiments behind `lsfts bench` and the acceptance suite.
//!
//! Each experiment is declared in a versioned JSON manifest together with its
//! model, sample sizes and seed. Replicate `r` of a run draws from
//! `replicate_seed(seed, r)`, replicates run concurrently, and results are
//! collected in replicate order, so a manifest always reproduces the same table.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{LsftsError, Result};
use crate::grid::{l2_norm, make_uniform_grid, FunctionalSeries, Grid};
use crate::kernels::{
    default_bandwidth_b, default_bandwidth_h, local_weights, BandwidthMode, LagWindowKernel, LocalSmoother,
    SmoothingKernel, WeightMode,
};
use crate::local_covariance::{align_sign, local_cov, local_fpca};
use crate::local_mean::clt_standardize;
use crate::longrun::{local_autocov, longrun_cov};
use crate::operator::{operator_eigh, operator_norm_bound, EigenSystem, LocalCovariance};
use crate::par::{maybe_par_iter, replicate_seed};
use crate::prediction::{predict_k_step, prediction_cov, PredictionConfig};
use crate::simulate::oracle::{
    brute_force_local_autocov, brute_force_local_cov, brute_force_longrun_cov, brute_force_prediction_cov,
};
use crate::simulate::{
    simulate_lsfts, true_local_spectrum, true_longrun_cov, true_longrun_spectrum, MeanTerm, Path, SimConfig,
};
use crate::two_sample::{projected_tests, select_q_ratio, OrderChoice, TwoSampleConfig};
#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// The manifest shipped with the crate.
pub const DEFAULT_MANIFEST: &str = include_str!("../experiments/manifest.json");

/// Manifest format understood by this build.
pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub experiments: Vec<ExperimentSpec>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let manifest: Manifest =
            serde_json::from_str(text).map_err(|e| LsftsError::Config(format!("manifest: {e}")))?;
        if manifest.version != MANIFEST_VERSION {
            return Err(LsftsError::Config(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                manifest.version
            )));
        }
        Ok(manifest)
    }

    pub fn builtin() -> Self {
        Self::parse(DEFAULT_MANIFEST).expect("bundled manifest is valid")
    }

    pub fn get(&self, name: &str) -> Option<&ExperimentSpec> {
        self.experiments.iter().find(|e| e.name() == name)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.experiments.iter().map(|e| e.name()).collect()
    }
}

/// Either a fixed `h` or one of the default rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BandwidthRule {
    Fixed(f64),
    Rate(BandwidthMode),
}

impl BandwidthRule {
    pub fn at(self, t: usize) -> f64 {
        match self {
            Self::Fixed(h) => h,
            Self::Rate(mode) => default_bandwidth_h(t, mode),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    OracleEquivalence(OracleEquivalenceSpec),
    EigenPerturbation(EigenPerturbationSpec),
    EigenRate(EigenRateSpec),
    Clt(CltSpec),
    LongrunConsistency(LongrunSpec),
    TwoSample(TwoSampleSpec),
    QSelector(QSelectorSpec),
    Prediction(PredictionSpec),
    RiemannSum(RiemannSpec),
}

impl ExperimentSpec {
    pub fn name(&self) -> &'static str {
        match self {
            Self::OracleEquivalence(_) => "oracle-equivalence",
            Self::EigenPerturbation(_) => "eigen-perturbation",
            Self::EigenRate(_) => "eigen-rate",
            Self::Clt(_) => "clt",
            Self::LongrunConsistency(_) => "longrun-consistency",
            Self::TwoSample(_) => "two-sample",
            Self::QSelector(_) => "q-selector",
            Self::Prediction(_) => "prediction",
            Self::RiemannSum(_) => "riemann-sum",
        }
    }

    pub fn run(&self) -> Result<Report> {
        let start = Instant::now();
        let mut report = match self {
            Self::OracleEquivalence(s) => run_oracle_equivalence(s),
            Self::EigenPerturbation(s) => run_eigen_perturbation(s),
            Self::EigenRate(s) => run_eigen_rate(s),
            Self::Clt(s) => run_clt(s),
            Self::LongrunConsistency(s) => run_longrun_consistency(s),
            Self::TwoSample(s) => run_two_sample(s),
            Self::QSelector(s) => run_q_selector(s),
            Self::Prediction(s) => run_prediction(s),
            Self::RiemannSum(s) => run_riemann_sum(s),
        }?;
        report.elapsed_seconds = start.elapsed().as_secs_f64();
        log::info!("{} finished in {:.2}s", report.experiment, report.elapsed_seconds);
        Ok(report)
    }
}

/// A result table plus named scalar summaries.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub experiment: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub summary: Vec<(String, f64)>,
    /// Wall-clock time; not part of the reproducible output.
    #[serde(skip)]
    pub elapsed_seconds: f64,
}

impl Report {
    fn new(experiment: &str, columns: &[&str]) -> Self {
        Self {
            experiment: experiment.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Vec::new(),
            elapsed_seconds: 0.0,
        }
    }

    fn note(&mut self, key: &str, value: f64) {
        self.summary.push((key.to_string(), value));
    }

    pub fn summary_value(&self, key: &str) -> Option<f64> {
        self.summary.iter().find(|(k, _)| k == key).map(|&(_, v)| v)
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Kolmogorov–Smirnov distance between the sample and `N(0, 1)`.
pub fn ks_distance_normal(sample: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut z = sample.to_vec();
    z.sort_by(f64::total_cmp);
    let n = z.len() as f64;
    z.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = normal.cdf(v);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

fn mean_and_variance(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn default_kernel() -> SmoothingKernel {
    SmoothingKernel::Epanechnikov
}

fn default_lag_window() -> LagWindowKernel {
    LagWindowKernel::Bartlett
}

fn smoother(kernel: SmoothingKernel, h: f64) -> Result<LocalSmoother> {
    LocalSmoother::new(kernel, h, WeightMode::Paper)
}

fn max_abs_diff(a: &LocalCovariance, b: &LocalCovariance) -> f64 {
    (a.kernel() - b.kernel()).amax()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleEquivalenceSpec {
    pub instances: usize,
    pub t: usize,
    pub n: usize,
    pub seed: u64,
}

/// Random series, bandwidths, kernels and lags; every estimator against its
/// triple-loop reference.
fn run_oracle_equivalence(spec: &OracleEquivalenceSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.n, 1)?;
    let rows = maybe_par_iter!(0..spec.instances)
        .map(|i| oracle_instance(spec, &grid, replicate_seed(spec.seed, i as u64)).map(|d| (i, d)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new(
        "oracle-equivalence",
        &["instance", "local_cov", "prediction_cov", "local_autocov", "longrun_cov"],
    );
    let mut worst = 0.0f64;
    for (i, d) in rows {
        worst = d.iter().fold(worst, |m, &v| m.max(v));
        let mut row = vec![i as f64];
        row.extend(d);
        report.rows.push(row);
    }
    report.note("max_abs_diff", worst);
    Ok(report)
}

fn oracle_instance(spec: &OracleEquivalenceSpec, grid: &Grid, seed: u64) -> Result<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = spec.t;
    let x = FunctionalSeries::new(DMatrix::from_fn(t, spec.n, |_, _| rng.random_range(-2.0..2.0)), grid.clone())?;
    let kernels = [SmoothingKernel::Epanechnikov, SmoothingKernel::Triangular, SmoothingKernel::Quartic];
    let windows = [LagWindowKernel::Bartlett, LagWindowKernel::Parzen, LagWindowKernel::Truncated];
    let k1 = kernels[rng.random_range(0..3)];
    let k2 = windows[rng.random_range(0..3)];
    let h = rng.random_range(0.15..0.7);
    let u = rng.random_range(0.05..0.95);
    let center = rng.random_bool(0.5);
    let lag = rng.random_range(1..t);
    let b = rng.random_range(0.5..8.0);
    let sm = smoother(k1, h)?;

    let d_cov = max_abs_diff(&local_cov(&x, u, &sm, center)?, &brute_force_local_cov(&x, u, h, k1, center)?);
    let d_auto = max_abs_diff(&local_autocov(&x, u, &sm, lag)?, &brute_force_local_autocov(&x, u, h, k1, lag)?);
    let d_lr = max_abs_diff(
        &longrun_cov(&x, u, &sm, b, k2)?,
        &brute_force_longrun_cov(&x, u, h, b, k1, k2)?,
    );
    let total_len = t + rng.random_range(2..10);
    let u_pred = rng.random_range(0.5..(t as f64 / total_len as f64));
    let d_pred = max_abs_diff(
        &prediction_cov(&x, total_len, u_pred, &sm, center)?,
        &brute_force_prediction_cov(&x, total_len, u_pred, h, k1, center)?,
    );
    Ok([d_cov, d_pred, d_auto, d_lr])
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenPerturbationSpec {
    pub pairs: usize,
    pub n: usize,
    /// Eigenfunctions compared for `j = 1..=q`.
    pub q: usize,
    pub seed: u64,
}

/// Weyl's inequality and the `2√2/α_j` eigenfunction bound on random pairs
/// `C₂` (positive semidefinite) and `C₁ = C₂ + εE` (E symmetric).
fn run_eigen_perturbation(spec: &EigenPerturbationSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.n, 1)?;
    let rows = maybe_par_iter!(0..spec.pairs)
        .map(|i| perturbation_pair(spec, &grid, replicate_seed(spec.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = Report::new(
        "eigen-perturbation",
        &["pair", "epsilon", "norm_diff", "max_eigenvalue_gap", "max_eigenfunction_ratio"],
    );
    let mut weyl_excess = f64::NEG_INFINITY;
    let mut worst_ratio = 0.0f64;
    for (i, row) in rows.into_iter().enumerate() {
        weyl_excess = weyl_excess.max(row[2] - row[1]);
        worst_ratio = worst_ratio.max(row[3]);
        let mut r = vec![i as f64];
        r.extend(row);
        report.rows.push(r);
    }
    report.note("max_weyl_excess", weyl_excess);
    report.note("max_eigenfunction_ratio", worst_ratio);
    Ok(report)
}

fn perturbation_pair(spec: &EigenPerturbationSpec, grid: &Grid, seed: u64) -> Result<[f64; 4]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.n;
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let c2 = LocalCovariance::new(&g * g.transpose() / n as f64, grid.clone(), 0.5, 0.1)?;
    let e = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let eps = 10f64.powf(rng.random_range(-4.0..0.0));
    let c1 = LocalCovariance::new(c2.kernel() + (&e + e.transpose()) * (0.5 * eps), grid.clone(), 0.5, 0.1)?;

    let norm = operator_norm_bound(&c1, &c2)?;
    let e1 = operator_eigh(&c1, n)?;
    let e2 = operator_eigh(&c2, n)?;
    let gap = e1
        .eigenvalues
        .iter()
        .zip(&e2.eigenvalues)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let lam = &e2.eigenvalues;
    let mut ratio = 0.0f64;
    for j in 0..spec.q.min(n - 1) {
        let alpha = if j == 0 {
            lam[0] - lam[1]
        } else {
            (lam[j - 1] - lam[j]).min(lam[j] - lam[j + 1])
        };
        if alpha <= 0.0 {
            continue;
        }
        let aligned = align_sign(&e1.eigenfunctions[j], &e2.eigenfunctions[j], grid)?;
        let d: Vec<f64> = aligned.curve.iter().zip(&e2.eigenfunctions[j]).map(|(a, b)| a - b).collect();
        let lhs = l2_norm(&d, grid)?;
        let rhs = 2.0 * std::f64::consts::SQRT_2 / alpha * norm;
        ratio = ratio.max(lhs / rhs);
    }
    Ok([eps, norm, gap, ratio])
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenRateSpec {
    pub model: SimConfig,
    pub u: f64,
    pub t_ladder: Vec<usize>,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
    #[serde(default)]
    pub center: bool,
    #[serde(default = "default_kernel")]
    pub kernel: SmoothingKernel,
}

/// Median `|λ̂_1 − λ_1|` at `u` along a ladder of sample sizes.
fn run_eigen_rate(spec: &EigenRateSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    let truth = true_local_spectrum(&spec.model, spec.u, &grid)?.eigenvalues[0];
    let reps = spec.replicates;
    let errors = maybe_par_iter!(0..spec.t_ladder.len() * reps)
        .map(|idx| {
            let t = spec.t_ladder[idx / reps];
            let cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, idx as u64));
            let x = simulate_lsfts(&cfg, t, &grid)?;
            let sm = smoother(spec.kernel, spec.h.at(t))?;
            let eig = local_fpca(&local_cov(&x, spec.u, &sm, spec.center)?, 1)?;
            Ok((eig.eigenvalues[0] - truth).abs())
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut report = Report::new("eigen-rate", &["T", "h", "median_abs_error", "mean_abs_error"]);
    let mut log_t = Vec::new();
    let mut log_err = Vec::new();
    for (i, &t) in spec.t_ladder.iter().enumerate() {
        let block = &errors[i * reps..(i + 1) * reps];
        let med = median(block);
        let mean = block.iter().sum::<f64>() / reps as f64;
        report.rows.push(vec![t as f64, spec.h.at(t), med, mean]);
        log_t.push((t as f64).ln());
        log_err.push(med.ln());
    }
    let (slope, intercept) = ols_slope(&log_t, &log_err);
    report.note("lambda_true", truth);
    report.note("slope", slope);
    report.note("intercept", intercept);
    Ok(report)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltSpec {
    pub model: SimConfig,
    pub u: f64,
    pub t: usize,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
    /// 1-based Fourier index of the projection direction.
    pub direction_basis: usize,
    #[serde(default = "default_kernel")]
    pub kernel: SmoothingKernel,
}

/// Standardized projections of the local mean against `N(0, 1)`, using the
/// analytic long-run variance and the exact mean curve.
fn run_clt(spec: &CltSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    let k = spec.direction_basis;
    if k == 0 || k > spec.model.components.len() {
        return Err(LsftsError::Config(format!("direction_basis {k} has no component")));
    }
    let direction = grid.sample(|s| crate::simulate::fourier_basis(k, s));
    let ell = spec.model.longrun_variances(spec.u)[k - 1];
    let mean = spec.model.mean_curve(spec.u, &grid);
    let sm = smoother(spec.kernel, spec.h.at(spec.t))?;
    let z = maybe_par_iter!(0..spec.replicates)
        .map(|r| {
            let cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, r as u64));
            let x = simulate_lsfts(&cfg, spec.t, &grid)?;
            clt_standardize(&x, spec.u, &sm, &direction, ell, Some(&mean))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (m, v) = mean_and_variance(&z);
    let mut report = Report::new("clt", &["replicate", "z"]);
    report.rows = z.iter().enumerate().map(|(i, &v)| vec![i as f64, v]).collect();
    report.note("h", sm.h);
    report.note("longrun_value", ell);
    report.note("ks_distance", ks_distance_normal(&z));
    report.note("mean", m);
    report.note("variance", v);
    Ok(report)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongrunSpec {
    pub model: SimConfig,
    pub u: f64,
    pub t_ladder: Vec<usize>,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
    #[serde(default = "default_lag_window")]
    pub lag_window: LagWindowKernel,
}

/// Median `∫∫(ĉ − c)²` with the default lag-window bandwidth.
fn run_longrun_consistency(spec: &LongrunSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    let truth = true_longrun_cov(&spec.model, spec.u, &grid)?;
    let reps = spec.replicates;
    let ise = maybe_par_iter!(0..spec.t_ladder.len() * reps)
        .map(|idx| {
            let t = spec.t_ladder[idx / reps];
            // Seeds are shared across the ladder, so each row reuses the same innovations.
            let cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, (idx % reps) as u64));
            let x = simulate_lsfts(&cfg, t, &grid)?;
            let h = spec.h.at(t);
            let sm = smoother(SmoothingKernel::Epanechnikov, h)?;
            let c = longrun_cov(&x, spec.u, &sm, default_bandwidth_b(t, h)?, spec.lag_window)?;
            c.squared_l2_distance(&truth)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut report = Report::new("longrun-consistency", &["T", "h", "b", "median_ise", "mean_ise"]);
    for (i, &t) in spec.t_ladder.iter().enumerate() {
        let block = &ise[i * reps..(i + 1) * reps];
        let h = spec.h.at(t);
        report.rows.push(vec![
            t as f64,
            h,
            default_bandwidth_b(t, h)?,
            median(block),
            block.iter().sum::<f64>() / reps as f64,
        ]);
    }
    report.note("truth_squared_norm", truth.squared_l2_norm());
    report.note("median_first", report.rows[0][3]);
    report.note("median_last", report.rows[report.rows.len() - 1][3]);
    Ok(report)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSampleSpec {
    /// Shared dynamics and mean of both samples.
    pub model: SimConfig,
    pub u: f64,
    pub t: usize,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
    pub q: usize,
    pub level: f64,
    /// Mean shifts of the second sample along the leading long-run eigenfunction.
    pub shifts: Vec<f64>,
}

/// Rejection rates of the chi-square calibrated `Ũ` test.
fn run_two_sample(spec: &TwoSampleSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    // The leading long-run eigenfunction is a basis function; shifting along it is a mean term.
    let ell = spec.model.longrun_variances(spec.u);
    let lead = (0..ell.len()).max_by(|&a, &b| ell[a].total_cmp(&ell[b]).then(b.cmp(&a))).unwrap_or(0);
    let nu = true_longrun_spectrum(&spec.model.without_mean(), spec.u, &grid)?;
    debug_assert_eq!(nu.eigenvalues[0], ell[lead]);
    let h = spec.h.at(spec.t);
    let mut config = TwoSampleConfig::new(smoother(SmoothingKernel::Epanechnikov, h)?, OrderChoice::Fixed(spec.q));
    config.mc_draws = None;

    let mut report = Report::new("two-sample", &["shift", "rejection_rate", "mean_p_value"]);
    for (si, &shift) in spec.shifts.iter().enumerate() {
        let mut shifted = spec.model.clone();
        if shift != 0.0 {
            shifted.mean.push(MeanTerm {
                basis: lead + 1,
                coefficient: Path::constant(shift),
            });
        }
        let base = replicate_seed(spec.model.seed, si as u64);
        let pvalues = maybe_par_iter!(0..spec.replicates)
            .map(|r| {
                let x_cfg = spec.model.clone().with_seed(replicate_seed(base, 2 * r as u64));
                let y_cfg = shifted.clone().with_seed(replicate_seed(base, 2 * r as u64 + 1));
                let x = simulate_lsfts(&x_cfg, spec.t, &grid)?;
                let y = simulate_lsfts(&y_cfg, spec.t, &grid)?;
                Ok(projected_tests(&x, &y, spec.u, &config)?.p_value)
            })
            .collect::<Result<Vec<f64>>>()?;
        let rate = pvalues.iter().filter(|&&p| p < spec.level).count() as f64 / pvalues.len() as f64;
        let mean_p = pvalues.iter().sum::<f64>() / pvalues.len() as f64;
        report.rows.push(vec![shift, rate, mean_p]);
    }
    report.note("h", h);
    report.note("b", default_bandwidth_b(spec.t, h)?);
    if let Some(row) = report.rows.iter().find(|r| r[0] == 0.0) {
        let size = row[1];
        report.note("size", size);
    }
    if let Some(row) = report.rows.iter().rev().find(|r| r[0] != 0.0) {
        let power = row[1];
        report.note("power", power);
    }
    Ok(report)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSelectorSpec {
    pub model: SimConfig,
    pub u: f64,
    pub t: usize,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
    pub eps0: f64,
    pub expected: usize,
}

/// Distribution of the ratio-selected order on the pooled long-run spectrum.
fn run_q_selector(spec: &QSelectorSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    let h = spec.h.at(spec.t);
    let mut config = TwoSampleConfig::new(smoother(SmoothingKernel::Epanechnikov, h)?, OrderChoice::Auto);
    config.mc_draws = None;
    config.eps0 = spec.eps0;
    let chosen = maybe_par_iter!(0..spec.replicates)
        .map(|r| {
            let x_cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, 2 * r as u64));
            let y_cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, 2 * r as u64 + 1));
            let x = simulate_lsfts(&x_cfg, spec.t, &grid)?;
            let y = simulate_lsfts(&y_cfg, spec.t, &grid)?;
            Ok(projected_tests(&x, &y, spec.u, &config)?.q_used)
        })
        .collect::<Result<Vec<usize>>>()?;
    let top = chosen.iter().copied().max().unwrap_or(0);
    let mut report = Report::new("q-selector", &["q", "count"]);
    for q in 1..=top {
        let count = chosen.iter().filter(|&&c| c == q).count();
        if count > 0 {
            report.rows.push(vec![q as f64, count as f64]);
        }
    }
    let hits = chosen.iter().filter(|&&c| c == spec.expected).count();
    report.note("fraction_expected", hits as f64 / chosen.len() as f64);
    report.note(
        "hand_example",
        select_q_ratio(&[4.0, 2.0, 1.0, 1e-12, 1e-13], 4, spec.eps0)? as f64,
    );
    Ok(report)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSpec {
    pub model: SimConfig,
    /// Observed lengths `T₁`.
    pub t_ladder: Vec<usize>,
    pub k: usize,
    pub q: usize,
    pub replicates: usize,
    pub grid_points: usize,
    pub h: BandwidthRule,
}

/// `‖X̂_{T₁+k} − X̃_{T₁+k}‖`, where `X̃` projects the realized curve on the
/// true leading eigenfunctions at `u = T₁/T`.
fn run_prediction(spec: &PredictionSpec) -> Result<Report> {
    let grid = make_uniform_grid(spec.grid_points, 1)?;
    let reps = spec.replicates;
    let results = maybe_par_iter!(0..spec.t_ladder.len() * reps)
        .map(|idx| {
            let t1 = spec.t_ladder[idx / reps];
            let total = t1 + spec.k + 1;
            let cfg = spec.model.clone().with_seed(replicate_seed(spec.model.seed, idx as u64));
            let full = simulate_lsfts(&cfg, total, &grid)?;
            let observed = full.head(t1)?;
            let sm = smoother(SmoothingKernel::Epanechnikov, spec.h.at(t1))?;
            let mut pc = PredictionConfig::new(spec.k, OrderChoice::Fixed(spec.q));
            pc.total_len = Some(total);
            let pred = predict_k_step(&observed, &pc, &sm)?;
            let truth = true_local_spectrum(&spec.model, pred.u, &grid)?;
            let target = truth.project(&full.curve(t1 + spec.k), spec.q)?;
            let d: Vec<f64> = pred.curve.iter().zip(&target).map(|(a, b)| a - b).collect();
            let err = l2_norm(&d, &grid)?;
            let flip = sign_flip_discrepancy(&pred.eigen, &observed.curve(t1), spec.q)?;
            Ok((err, flip))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let mut report = Report::new("prediction", &["T1", "h", "median_error", "mean_error"]);
    for (i, &t1) in spec.t_ladder.iter().enumerate() {
        let block: Vec<f64> = results[i * reps..(i + 1) * reps].iter().map(|r| r.0).collect();
        report.rows.push(vec![
            t1 as f64,
            spec.h.at(t1),
            median(&block),
            block.iter().sum::<f64>() / reps as f64,
        ]);
    }
    report.note("median_first", report.rows[0][2]);
    report.note("median_last", report.rows[report.rows.len() - 1][2]);
    report.note(
        "sign_flip_max_diff",
        results.iter().map(|r| r.1).fold(0.0, f64::max),
    );
    Ok(report)
}

/// Largest change of the projection when every other eigenfunction changes sign.
fn sign_flip_discrepancy(eigen: &EigenSystem, x: &[f64], q: usize) -> Result<f64> {
    let flipped = EigenSystem::new(
        eigen.eigenvalues.clone(),
        eigen
            .eigenfunctions
            .iter()
            .enumerate()
            .map(|(j, v)| if j % 2 == 0 { v.iter().map(|a| -a).collect() } else { v.clone() })
            .collect(),
        eigen.grid().clone(),
    )?;
    let a = eigen.project(x, q)?;
    let b = flipped.project(x, q)?;
    Ok(a.iter().zip(&b).map(|(p, r)| (p - r).abs()).fold(0.0, f64::max))
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiemannSpec {
    pub u_list: Vec<f64>,
    pub h: f64,
    pub t_ladder: Vec<usize>,
    #[serde(default = "default_kernel")]
    pub kernel: SmoothingKernel,
}

/// `|Σ_t K₁((u − t/T)/h)/(Th) − 1|` along a ladder of `T` at fixed `h`.
///
/// `scaled_error` multiplies by `Th²` and stays bounded under the `1/(Th²)`
/// bound; `th_squared_error` multiplies by `(Th)²` and is nearly constant when
/// the support endpoints fall on the time grid.
fn run_riemann_sum(spec: &RiemannSpec) -> Result<Report> {
    let mut report = Report::new("riemann-sum", &["u", "T", "abs_error", "scaled_error", "th_squared_error", "ratio_to_previous"]);
    let mut all_decreasing = true;
    let mut max_scaled = 0.0f64;
    for &u in &spec.u_list {
        let mut previous: Option<f64> = None;
        for &t in &spec.t_ladder {
            let w = local_weights(u, t, spec.h, spec.kernel, WeightMode::Paper)?;
            let err = (w.sum() - 1.0).abs();
            let scaled = err * t as f64 * spec.h * spec.h;
            let ratio = previous.map_or(f64::NAN, |p| p / err);
            if let Some(p) = previous {
                all_decreasing &= err < p;
            }
            max_scaled = max_scaled.max(scaled);
            let th = t as f64 * spec.h;
            report.rows.push(vec![u, t as f64, err, scaled, err * th * th, ratio]);
            previous = Some(err);
        }
    }
    report.note("all_decreasing", if all_decreasing { 1.0 } else { 0.0 });
    report.note("max_scaled_error", max_scaled);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_manifest_parses_and_names_are_unique() {
        let m = Manifest::builtin();
        let mut names = m.names();
        let total = names.len();
        names.sort();
        names.dedup();
        assert_eq!(names.len(), total);
        assert_eq!(total, 9);
    }

    #[test]
    fn manifest_version_is_checked() {
        let err = Manifest::parse(r#"{"version": 99, "experiments": []}"#).unwrap_err();
        assert!(matches!(err, LsftsError::Config(_)));
    }

    #[test]
    fn helpers() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        let (slope, intercept) = ols_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]);
        assert!((slope - 2.0).abs() < 1e-12 && (intercept - 1.0).abs() < 1e-12);
        // one point at the median of N(0,1): the distance is 1/2
        assert!((ks_distance_normal(&[0.0]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_runs_are_reproducible() {
        let spec = ExperimentSpec::EigenRate(EigenRateSpec {
            model: SimConfig::new(vec![crate::simulate::ComponentModel {
                a: Path::constant(0.3),
                sigma: Path::constant(1.0),
            }])
            .with_seed(3),
            u: 0.5,
            t_ladder: vec![100, 200],
            replicates: 4,
            grid_points: 9,
            h: BandwidthRule::Rate(BandwidthMode::Estimation),
            center: false,
            kernel: SmoothingKernel::Epanechnikov,
        });
        let a = spec.run().unwrap();
        let b = spec.run().unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.summary, b.summary);
    }
}
