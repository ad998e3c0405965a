//! Kernel estimation and inference for locally stationary functional time series.
//!
//! Curves are observed on a uniform grid over `[0, 1]` and integral operators
//! are discretized with trapezoid weights. The main entry points:
//!
//! * [`local_mean`] and [`local_cov`] for the time-varying mean and covariance,
//!   with [`local_fpca`] for its eigen-decomposition;
//! * [`longrun_cov`] for the lag-window long-run covariance;
//! * [`predict_k_step`] for projection forecasts;
//! * [`projected_tests`] for comparing the mean curves of two samples;
//! * [`simulate`] for time-varying functional AR data with closed-form truths.
//!
//! Data-parallel loops use rayon when the `parallel` feature is enabled (the
//! default). Results are identical with and without it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod kernels;
pub mod local_covariance;
pub mod local_mean;
pub mod longrun;
pub mod operator;
mod par;
pub mod prediction;
pub mod simulate;
pub mod two_sample;

pub use error::{LsftsError, Result};
pub use grid::{inner_product, l2_norm, make_uniform_grid, FunctionalSeries, Grid};
pub use kernels::{
    default_bandwidth_b, default_bandwidth_h, k1_eval, k2_eval, local_weights, BandwidthMode, LagWindowKernel,
    LocalSmoother, SmoothingKernel, WeightMode,
};
pub use local_covariance::{align_sign, local_cov, local_fpca};
pub use local_mean::{clt_standardize, local_mean, mean_path};
pub use longrun::{local_autocov, longrun_cov};
pub use operator::{operator_eigh, operator_norm_bound, EigenSystem, LocalCovariance};
pub use par::replicate_seed;
pub use prediction::{predict_k_step, prediction_cov, Prediction, PredictionConfig};
pub use two_sample::{
    projected_tests, pvalue_weighted_chisq, select_q_ratio, u_statistic, OrderChoice, TwoSampleConfig,
    TwoSampleResult,
};
