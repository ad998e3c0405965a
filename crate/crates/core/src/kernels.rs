//! Smoothing kernels in rescaled time, lag windows, default bandwidths and
//! local weight vectors.

use serde::{Deserialize, Serialize};

use crate::error::{LsftsError, Result};

/// Compactly supported, symmetric smoothing kernel integrating to one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKernel {
    #[default]
    Epanechnikov,
    Triangular,
    Quartic,
}

impl SmoothingKernel {
    /// Support radius `C₁`.
    pub fn support_radius(self) -> f64 {
        1.0
    }

    pub fn eval(self, v: f64) -> f64 {
        k1_eval(self, v)
    }

    /// `∫ K²`, evaluated numerically by composite Simpson on the support.
    pub fn squared_integral(self) -> f64 {
        let c = self.support_radius();
        simpson(|v| self.eval(v).powi(2), -c, c, 1 << 14)
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "epanechnikov" => Some(Self::Epanechnikov),
            "triangular" => Some(Self::Triangular),
            "quartic" | "biweight" => Some(Self::Quartic),
            _ => None,
        }
    }
}

/// Lag window with `K₂(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagWindowKernel {
    #[default]
    Bartlett,
    Parzen,
    Truncated,
}

impl LagWindowKernel {
    /// Support radius `C₂`.
    pub fn support_radius(self) -> f64 {
        1.0
    }

    pub fn eval(self, v: f64) -> f64 {
        k2_eval(self, v)
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "bartlett" => Some(Self::Bartlett),
            "parzen" => Some(Self::Parzen),
            "truncated" => Some(Self::Truncated),
            _ => None,
        }
    }
}

pub fn k1_eval(kernel: SmoothingKernel, v: f64) -> f64 {
    let a = v.abs();
    if a > kernel.support_radius() {
        return 0.0;
    }
    match kernel {
        SmoothingKernel::Epanechnikov => 0.75 * (1.0 - v * v),
        SmoothingKernel::Triangular => 1.0 - a,
        SmoothingKernel::Quartic => {
            let r = 1.0 - v * v;
            15.0 / 16.0 * r * r
        }
    }
}

pub fn k2_eval(kernel: LagWindowKernel, v: f64) -> f64 {
    let a = v.abs();
    if a > kernel.support_radius() {
        return 0.0;
    }
    match kernel {
        LagWindowKernel::Bartlett => 1.0 - a,
        LagWindowKernel::Parzen => {
            if a <= 0.5 {
                1.0 - 6.0 * a * a + 6.0 * a * a * a
            } else {
                2.0 * (1.0 - a).powi(3)
            }
        }
        LagWindowKernel::Truncated => 1.0,
    }
}

fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let step = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + i as f64 * step;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * step / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandwidthMode {
    /// `h = T^{-1/3}`, balancing bias and variance of the covariance estimator.
    Estimation,
    /// `h = T^{-0.4}`, undersmoothed so that `Th³ → 0`.
    Inference,
}

pub fn default_bandwidth_h(t: usize, mode: BandwidthMode) -> f64 {
    default_bandwidth_h_scaled(t, mode, 1.0)
}

/// Default bandwidth multiplied by a user constant.
pub fn default_bandwidth_h_scaled(t: usize, mode: BandwidthMode, constant: f64) -> f64 {
    let t = t as f64;
    let exponent = match mode {
        BandwidthMode::Estimation => -1.0 / 3.0,
        BandwidthMode::Inference => -0.4,
    };
    constant * t.powf(exponent)
}

/// Lag-window bandwidth `b = (Th)^{1/3}`.
pub fn default_bandwidth_b(t: usize, h: f64) -> Result<f64> {
    let th = t as f64 * h;
    if !(th > 1.0) {
        return Err(LsftsError::InvalidBandwidth(format!(
            "default b needs T*h > 1, got {th}"
        )));
    }
    Ok(th.cbrt())
}

/// How the kernel weights `K₁((u − t/T)/h)` are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// Divide by `Th`, exactly as in the estimator definitions.
    #[default]
    Paper,
    /// Divide by the sum of kernel values so the weights sum to one.
    Normalized,
}

impl WeightMode {
    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "paper" => Some(Self::Paper),
            "normalized" => Some(Self::Normalized),
            _ => None,
        }
    }
}

/// Kernel, bandwidth and weight scaling used by every local estimator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalSmoother {
    pub kernel: SmoothingKernel,
    pub h: f64,
    pub mode: WeightMode,
}

impl LocalSmoother {
    pub fn new(kernel: SmoothingKernel, h: f64, mode: WeightMode) -> Result<Self> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(LsftsError::InvalidBandwidth(format!("h must be positive, got {h}")));
        }
        Ok(Self { kernel, h, mode })
    }

    /// Epanechnikov kernel with paper-exact weights.
    pub fn epanechnikov(h: f64) -> Result<Self> {
        Self::new(SmoothingKernel::Epanechnikov, h, WeightMode::Paper)
    }

    pub fn normalized(self) -> Self {
        Self {
            mode: WeightMode::Normalized,
            ..self
        }
    }

    pub fn weights(&self, u: f64, t: usize) -> Result<LocalWeights> {
        local_weights(u, t, self.h, self.kernel, self.mode)
    }
}

/// Weights `w_1..w_T` at one rescaled time.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalWeights {
    pub values: Vec<f64>,
    /// `u` lies within `C₁h` of the boundary, where the interior rates do not apply.
    pub boundary: bool,
}

impl LocalWeights {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Indices (0-based) of the nonzero weights, as a contiguous range.
    pub fn support(&self) -> std::ops::Range<usize> {
        let first = self.values.iter().position(|&w| w != 0.0).unwrap_or(0);
        let last = self.values.iter().rposition(|&w| w != 0.0).map_or(0, |i| i + 1);
        first..last.max(first)
    }
}

/// `w_t = K₁((u − t/T)/h)/(Th)` (paper mode) or the same kernel values
/// divided by their sum (normalized mode), for `t = 1..T`.
pub fn local_weights(u: f64, t: usize, h: f64, kernel: SmoothingKernel, mode: WeightMode) -> Result<LocalWeights> {
    check_time(u)?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(LsftsError::InvalidBandwidth(format!("h must be positive, got {h}")));
    }
    let tf = t as f64;
    let raw: Vec<f64> = (1..=t).map(|j| k1_eval(kernel, (u - j as f64 / tf) / h)).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return Err(LsftsError::EmptyWindow { u, h });
    }
    let scale = match mode {
        WeightMode::Paper => tf * h,
        WeightMode::Normalized => total,
    };
    let reach = kernel.support_radius() * h;
    let boundary = u < reach || u > 1.0 - reach;
    if boundary {
        log::debug!("u={u} lies within C1*h={reach} of the boundary");
    }
    Ok(LocalWeights {
        values: raw.into_iter().map(|k| k / scale).collect(),
        boundary,
    })
}

pub(crate) fn check_time(u: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&u) {
        return Err(LsftsError::InvalidTime(u));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ALL_K1: [SmoothingKernel; 3] = [
        SmoothingKernel::Epanechnikov,
        SmoothingKernel::Triangular,
        SmoothingKernel::Quartic,
    ];
    const ALL_K2: [LagWindowKernel; 3] = [
        LagWindowKernel::Bartlett,
        LagWindowKernel::Parzen,
        LagWindowKernel::Truncated,
    ];

    #[test]
    fn epanechnikov_values() {
        assert_eq!(k1_eval(SmoothingKernel::Epanechnikov, 0.0), 0.75);
        assert_eq!(k1_eval(SmoothingKernel::Epanechnikov, 1.0), 0.0);
        assert_eq!(k1_eval(SmoothingKernel::Epanechnikov, 0.5), 0.5625);
    }

    #[test]
    fn bartlett_values() {
        assert_eq!(k2_eval(LagWindowKernel::Bartlett, 0.0), 1.0);
        assert_eq!(k2_eval(LagWindowKernel::Bartlett, 1.0), 0.0);
        assert_eq!(k2_eval(LagWindowKernel::Bartlett, 0.25), 0.75);
    }

    #[test]
    fn smoothing_kernel_assumptions() {
        for k in ALL_K1 {
            assert!((simpson(|v| k.eval(v), -1.0, 1.0, 1 << 14) - 1.0).abs() < 1e-6, "{k:?}");
            let probes: Vec<f64> = (0..=400).map(|i| -2.0 + i as f64 * 0.01).collect();
            for &v in &probes {
                assert_eq!(k.eval(v), k.eval(-v));
                if v.abs() > 1.0 {
                    assert_eq!(k.eval(v), 0.0);
                }
            }
            // Lipschitz constant 2 covers all three kernels
            for p in probes.windows(2) {
                assert!((k.eval(p[1]) - k.eval(p[0])).abs() <= 2.0 * (p[1] - p[0]) + 1e-12);
            }
        }
    }

    #[test]
    fn squared_integrals() {
        assert!((SmoothingKernel::Epanechnikov.squared_integral() - 0.6).abs() < 1e-8);
        assert!((SmoothingKernel::Triangular.squared_integral() - 2.0 / 3.0).abs() < 1e-8);
        assert!((SmoothingKernel::Quartic.squared_integral() - 5.0 / 7.0).abs() < 1e-8);
    }

    #[test]
    fn lag_window_assumptions() {
        for k in ALL_K2 {
            assert_eq!(k.eval(0.0), 1.0);
            for i in 0..=300 {
                let v = -1.5 + i as f64 * 0.01;
                assert!(k.eval(v).abs() <= 1.0);
                if v.abs() > 1.0 {
                    assert_eq!(k.eval(v), 0.0);
                }
            }
        }
    }

    #[test]
    fn bandwidth_defaults() {
        assert!((default_bandwidth_h(1000, BandwidthMode::Estimation) - 0.1).abs() < 1e-12);
        assert!((default_bandwidth_h(1000, BandwidthMode::Inference) - 10f64.powf(-1.2)).abs() < 1e-12);
        assert!((default_bandwidth_h(8, BandwidthMode::Estimation) - 0.5).abs() < 1e-12);
        assert!((default_bandwidth_b(1000, 0.1).unwrap() - 100f64.cbrt()).abs() < 1e-12);
        assert!((default_bandwidth_b(8000, 0.05).unwrap() - 400f64.cbrt()).abs() < 1e-12);
        assert!((default_bandwidth_b(10, 0.2).unwrap() - 2f64.cbrt()).abs() < 1e-12);
        assert!(default_bandwidth_b(10, 0.1).is_err());
    }

    #[test]
    fn hand_computed_weights() {
        let w = local_weights(0.5, 4, 0.5, SmoothingKernel::Epanechnikov, WeightMode::Paper).unwrap();
        let expected = [0.28125, 0.375, 0.28125, 0.0];
        for (a, b) in w.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((w.sum() - 0.9375).abs() < 1e-15);
        assert_eq!(w.support(), 0..3);
    }

    #[test]
    fn empty_window_and_invalid_inputs() {
        assert!(matches!(
            local_weights(0.0, 10, 0.01, SmoothingKernel::Epanechnikov, WeightMode::Paper),
            Err(LsftsError::EmptyWindow { .. })
        ));
        assert!(local_weights(1.2, 10, 0.1, SmoothingKernel::Epanechnikov, WeightMode::Paper).is_err());
        assert!(local_weights(0.5, 10, 0.0, SmoothingKernel::Epanechnikov, WeightMode::Paper).is_err());
    }

    #[test]
    fn palindromic_at_midpoint() {
        for t in [10, 50, 200] {
            let w = local_weights(0.5, t, 0.13, SmoothingKernel::Quartic, WeightMode::Paper).unwrap();
            // t/T for t = 1..T is symmetric about 0.5 after dropping the last point
            let inner = &w.values[..t - 1];
            for i in 0..inner.len() {
                assert!((inner[i] - inner[inner.len() - 1 - i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn boundary_flag() {
        let w = local_weights(0.05, 100, 0.1, SmoothingKernel::Epanechnikov, WeightMode::Paper).unwrap();
        assert!(w.boundary);
        let w = local_weights(0.5, 100, 0.1, SmoothingKernel::Epanechnikov, WeightMode::Paper).unwrap();
        assert!(!w.boundary);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalized_weights_sum_to_one(u in 0.0f64..=1.0, t in 2usize..500, h in 0.02f64..1.0) {
                if let Ok(w) = local_weights(u, t, h, SmoothingKernel::Epanechnikov, WeightMode::Normalized) {
                    prop_assert!((w.sum() - 1.0).abs() < 1e-12);
                }
            }

            #[test]
            fn weights_vanish_outside_support(u in 0.0f64..=1.0, t in 2usize..500, h in 0.02f64..0.5) {
                if let Ok(w) = local_weights(u, t, h, SmoothingKernel::Triangular, WeightMode::Paper) {
                    for (j, &wt) in w.values.iter().enumerate() {
                        if (u - (j + 1) as f64 / t as f64).abs() > h {
                            prop_assert_eq!(wt, 0.0);
                        }
                    }
                }
            }
        }
    }
}
