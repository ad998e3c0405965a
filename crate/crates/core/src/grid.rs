//! Discretization of the domain `D = [0, 1]`, quadrature, and the observed
//! series container.

use nalgebra::DMatrix;

use crate::error::{LsftsError, Result};

const MEASURE_TOL: f64 = 1e-12;

/// Ordered locations in `[0, 1]` together with positive quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

impl Grid {
    /// Builds a grid from explicit points and weights, checking the invariants.
    pub fn new(points: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(LsftsError::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.len() != weights.len() {
            return Err(LsftsError::InvalidGrid(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if points.iter().chain(weights.iter()).any(|v| !v.is_finite()) {
            return Err(LsftsError::InvalidGrid("non-finite entry".into()));
        }
        if points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(LsftsError::InvalidGrid("points must be strictly increasing".into()));
        }
        if weights.iter().any(|&w| w <= 0.0) {
            return Err(LsftsError::InvalidGrid("weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MEASURE_TOL {
            return Err(LsftsError::InvalidGrid(format!(
                "weights sum to {total}, expected the measure of [0, 1]"
            )));
        }
        Ok(Self { points, weights })
    }

    /// Equispaced points on `[0, 1]` carrying trapezoid weights.
    pub fn uniform(n: usize) -> Result<Self> {
        make_uniform_grid(n, 1)
    }

    /// Rebuilds a uniform grid from points read off a file header.
    ///
    /// Only equispaced grids covering `[0, 1]` are accepted.
    pub fn from_points(points: &[f64]) -> Result<Self> {
        let n = points.len();
        let grid = Self::uniform(n)?;
        let spacing_tol = 1e-9;
        for (i, (&p, &q)) in points.iter().zip(grid.points.iter()).enumerate() {
            if (p - q).abs() > spacing_tol {
                return Err(LsftsError::InvalidGrid(format!(
                    "point {} = {p} is not on the uniform grid of {n} points over [0, 1]",
                    i + 1
                )));
            }
        }
        Ok(grid)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Samples `f` at every grid point.
    pub fn sample<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.points.iter().map(|&s| f(s)).collect()
    }

    pub(crate) fn check_curve(&self, f: &[f64]) -> Result<()> {
        if f.len() != self.len() {
            return Err(LsftsError::Shape {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// Uniform grid of `n` points with trapezoid weights (`Δ/2` at the ends, `Δ` inside).
pub fn make_uniform_grid(n: usize, dim: usize) -> Result<Grid> {
    if dim != 1 {
        return Err(LsftsError::InvalidGrid(format!(
            "only one-dimensional domains are supported, got d={dim}"
        )));
    }
    if n < 2 {
        return Err(LsftsError::InvalidGrid(format!("need n >= 2, got {n}")));
    }
    let step = 1.0 / (n - 1) as f64;
    let points: Vec<f64> = (0..n)
        .map(|i| if i == n - 1 { 1.0 } else { i as f64 * step })
        .collect();
    let mut weights = vec![step; n];
    weights[0] = step / 2.0;
    weights[n - 1] = step / 2.0;
    Grid::new(points, weights)
}

/// Quadrature approximation of `∫ f g`.
pub fn inner_product(f: &[f64], g: &[f64], grid: &Grid) -> Result<f64> {
    grid.check_curve(f)?;
    grid.check_curve(g)?;
    Ok(dot_weighted(f, g, grid.weights()))
}

pub fn l2_norm(f: &[f64], grid: &Grid) -> Result<f64> {
    inner_product(f, f, grid).map(|v| v.max(0.0).sqrt())
}

pub(crate) fn dot_weighted(f: &[f64], g: &[f64], w: &[f64]) -> f64 {
    f.iter()
        .zip(g.iter())
        .zip(w.iter())
        .map(|((a, b), c)| a * b * c)
        .sum()
}

/// `T` curves sampled on a common grid, row `t - 1` holding `X_{t,T}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalSeries {
    values: DMatrix<f64>,
    grid: Grid,
}

impl FunctionalSeries {
    pub fn new(values: DMatrix<f64>, grid: Grid) -> Result<Self> {
        if values.ncols() != grid.len() {
            return Err(LsftsError::Shape {
                expected: grid.len(),
                got: values.ncols(),
            });
        }
        if values.nrows() < 2 {
            return Err(LsftsError::InvalidSeries(format!(
                "need at least 2 curves, got {}",
                values.nrows()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            // column-major storage
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(LsftsError::InvalidSeries(format!(
                "non-finite value at curve {}, point {}",
                row + 1,
                col + 1
            )));
        }
        Ok(Self { values, grid })
    }

    /// Builds a series from row-major curves.
    pub fn from_rows(rows: &[Vec<f64>], grid: Grid) -> Result<Self> {
        let n = grid.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(LsftsError::Shape {
                expected: n,
                got: bad.len(),
            });
        }
        let values = DMatrix::from_fn(rows.len(), n, |t, i| rows[t][i]);
        Self::new(values, grid)
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Sample size `T`.
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    /// Curve at time `t` (1-based, `1 ≤ t ≤ T`).
    pub fn curve(&self, t: usize) -> Vec<f64> {
        self.values.row(t - 1).iter().copied().collect()
    }

    /// The first `t1` curves as a new series.
    pub fn head(&self, t1: usize) -> Result<Self> {
        if t1 > self.len() {
            return Err(LsftsError::InvalidSeries(format!(
                "cannot take {t1} curves from a series of length {}",
                self.len()
            )));
        }
        Self::new(self.values.rows(0, t1).into_owned(), self.grid.clone())
    }

    /// Applies `f` to every value; used for scaling and shifting in tests.
    pub fn map<F: Fn(usize, usize, f64) -> f64>(&self, f: F) -> Result<Self> {
        let values = DMatrix::from_fn(self.len(), self.grid.len(), |t, i| f(t, i, self.values[(t, i)]));
        Self::new(values, self.grid.clone())
    }
}
