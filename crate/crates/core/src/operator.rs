//! Discretized integral operators on a [`Grid`] and their spectra.
//!
//! An operator with kernel `c(s, s')` acts as `(Cx)(s_i) = Σ_j w_j c(s_i, s_j) x(s_j)`.
//! Its eigenproblem is solved through the symmetric matrix `W^{1/2} K W^{1/2}`,
//! whose eigenvectors `e` map back to quadrature-orthonormal eigenfunctions
//! `v = W^{-1/2} e`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{LsftsError, Result};
use crate::grid::{dot_weighted, Grid};

const SYMMETRY_TOL: f64 = 1e-10;

/// Kernel matrix `c(s_i, s_j)` of an integral operator, tagged with the
/// rescaled time and bandwidth it was estimated at.
///
/// Covariance and long-run kernels are symmetric; lagged autocovariance
/// surfaces share the type but are not.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCovariance {
    kernel: DMatrix<f64>,
    grid: Grid,
    u: f64,
    h: f64,
}

impl LocalCovariance {
    pub fn new(kernel: DMatrix<f64>, grid: Grid, u: f64, h: f64) -> Result<Self> {
        let n = grid.len();
        if kernel.nrows() != n || kernel.ncols() != n {
            return Err(LsftsError::Shape {
                expected: n,
                got: if kernel.nrows() != n { kernel.nrows() } else { kernel.ncols() },
            });
        }
        Ok(Self { kernel, grid, u, h })
    }

    /// The zero operator on `grid`.
    pub fn zeros(grid: Grid, u: f64, h: f64) -> Self {
        let n = grid.len();
        Self {
            kernel: DMatrix::zeros(n, n),
            grid,
            u,
            h,
        }
    }

    /// `Σ_j c_j φ_j ⊗ φ_j` for curves `φ_j` sampled on `grid`.
    pub fn from_components(grid: Grid, components: &[(f64, Vec<f64>)], u: f64, h: f64) -> Result<Self> {
        let n = grid.len();
        let mut kernel = DMatrix::zeros(n, n);
        for (scale, phi) in components {
            grid.check_curve(phi)?;
            for i in 0..n {
                for j in 0..n {
                    kernel[(i, j)] += scale * phi[i] * phi[j];
                }
            }
        }
        Self::new(kernel, grid, u, h)
    }

    pub fn kernel(&self) -> &DMatrix<f64> {
        &self.kernel
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn into_kernel(self) -> DMatrix<f64> {
        self.kernel
    }

    /// Largest entrywise asymmetry relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.kernel.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.kernel - self.kernel.transpose()).amax() / scale
    }

    pub fn is_symmetric(&self) -> bool {
        self.asymmetry() <= SYMMETRY_TOL
    }

    /// Applies the operator to a curve: `(Cx)(s_i) = Σ_j w_j c(s_i, s_j) x(s_j)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.grid.check_curve(x)?;
        let w = self.grid.weights();
        Ok((0..self.grid.len())
            .map(|i| {
                let row: Vec<f64> = self.kernel.row(i).iter().copied().collect();
                dot_weighted(&row, x, w)
            })
            .collect())
    }

    /// `∫∫ (c₁ − c₂)²` by product quadrature.
    pub fn squared_l2_distance(&self, other: &LocalCovariance) -> Result<f64> {
        if self.grid != other.grid {
            return Err(LsftsError::GridMismatch);
        }
        let w = self.grid.weights();
        let n = w.len();
        let mut total = 0.0;
        for j in 0..n {
            for i in 0..n {
                let d = self.kernel[(i, j)] - other.kernel[(i, j)];
                total += w[i] * w[j] * d * d;
            }
        }
        Ok(total)
    }

    /// `∫∫ c²`.
    pub fn squared_l2_norm(&self) -> f64 {
        let zero = LocalCovariance::zeros(self.grid.clone(), self.u, self.h);
        self.squared_l2_distance(&zero).unwrap_or(0.0)
    }

    /// `W^{1/2} K W^{1/2}`.
    pub(crate) fn weighted_matrix(&self) -> DMatrix<f64> {
        let sw: Vec<f64> = self.grid.weights().iter().map(|w| w.sqrt()).collect();
        DMatrix::from_fn(self.grid.len(), self.grid.len(), |i, j| sw[i] * self.kernel[(i, j)] * sw[j])
    }
}

/// Leading eigenpairs of a symmetric operator, eigenvalues descending and
/// eigenfunctions normalized to `∫ v² = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub eigenvalues: Vec<f64>,
    pub eigenfunctions: Vec<Vec<f64>>,
    grid: Grid,
}

impl EigenSystem {
    pub fn new(eigenvalues: Vec<f64>, eigenfunctions: Vec<Vec<f64>>, grid: Grid) -> Result<Self> {
        if eigenvalues.len() != eigenfunctions.len() {
            return Err(LsftsError::Shape {
                expected: eigenvalues.len(),
                got: eigenfunctions.len(),
            });
        }
        for v in &eigenfunctions {
            grid.check_curve(v)?;
        }
        Ok(Self {
            eigenvalues,
            eigenfunctions,
            grid,
        })
    }

    /// Number of pairs `q`.
    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Kernel `Σ_j λ_j v_j(s) v_j(s')` of the retained pairs.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let n = self.grid.len();
        let mut k = DMatrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenfunctions) {
            for j in 0..n {
                for i in 0..n {
                    k[(i, j)] += lambda * v[i] * v[j];
                }
            }
        }
        k
    }

    /// Projection `Σ_{j ≤ q} ⟨x, v_j⟩ v_j` onto the first `q` eigenfunctions.
    pub fn project(&self, x: &[f64], q: usize) -> Result<Vec<f64>> {
        self.grid.check_curve(x)?;
        if q == 0 || q > self.count() {
            return Err(LsftsError::InvalidOrder {
                q,
                n: self.count(),
            });
        }
        let w = self.grid.weights();
        let mut out = vec![0.0; x.len()];
        for v in &self.eigenfunctions[..q] {
            let score = dot_weighted(x, v, w);
            for (o, vi) in out.iter_mut().zip(v) {
                *o += score * vi;
            }
        }
        Ok(out)
    }
}

/// Top-`q` eigenpairs of the quadrature-weighted eigenproblem of `c`.
pub fn operator_eigh(c: &LocalCovariance, q: usize) -> Result<EigenSystem> {
    let n = c.grid.len();
    if q == 0 || q > n {
        return Err(LsftsError::InvalidOrder { q, n });
    }
    if c.kernel.iter().any(|v| !v.is_finite()) {
        return Err(LsftsError::Numeric("kernel contains non-finite values".into()));
    }
    if !c.is_symmetric() {
        return Err(LsftsError::Numeric(format!(
            "kernel is not symmetric (relative asymmetry {:.3e})",
            c.asymmetry()
        )));
    }
    let m = c.weighted_matrix();
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let inv_sqrt_w: Vec<f64> = c.grid.weights().iter().map(|w| 1.0 / w.sqrt()).collect();
    let mut eigenvalues = Vec::with_capacity(q);
    let mut eigenfunctions = Vec::with_capacity(q);
    for &idx in order.iter().take(q) {
        eigenvalues.push(eig.eigenvalues[idx]);
        let e = eig.eigenvectors.column(idx);
        let mut v: Vec<f64> = e.iter().zip(&inv_sqrt_w).map(|(ei, s)| ei * s).collect();
        let norm = dot_weighted(&v, &v, c.grid.weights()).sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        eigenfunctions.push(v);
    }
    EigenSystem::new(eigenvalues, eigenfunctions, c.grid.clone())
}

/// Discretized operator norm `‖C₁ − C₂‖_L`: the largest absolute eigenvalue of
/// the weighted difference matrix.
///
/// Computed by cyclic Jacobi rotations, independently of [`operator_eigh`], so
/// the two can cross-check each other.
pub fn operator_norm_bound(c1: &LocalCovariance, c2: &LocalCovariance) -> Result<f64> {
    if c1.grid != c2.grid {
        return Err(LsftsError::GridMismatch);
    }
    let d1 = c1.weighted_matrix();
    let d2 = c2.weighted_matrix();
    let diff = &d1 - &d2;
    let diff = (&diff + diff.transpose()) * 0.5;
    if diff.iter().any(|v| !v.is_finite()) {
        return Err(LsftsError::Numeric("kernel contains non-finite values".into()));
    }
    Ok(jacobi_eigenvalues(diff)
        .into_iter()
        .fold(0.0_f64, |acc, v| acc.max(v.abs())))
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi sweeps.
pub(crate) fn jacobi_eigenvalues(mut a: DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return vec![0.0; n];
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        for q in 0..n {
            for p in 0..q {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
            }
        }
    }
    (0..n).map(|i| a[(i, i)]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{inner_product, make_uniform_grid};
    use crate::simulate::fourier_basis;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn phi(grid: &Grid, k: usize) -> Vec<f64> {
        grid.sample(|s| fourier_basis(k, s))
    }

    fn random_symmetric(grid: &Grid, rng: &mut ChaCha8Rng) -> LocalCovariance {
        let n = grid.len();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.random_range(-1.0..1.0);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        LocalCovariance::new(k, grid.clone(), 0.5, 0.1).unwrap()
    }

    #[test]
    fn rank_one_operator() {
        let grid = make_uniform_grid(101, 1).unwrap();
        let f = phi(&grid, 3);
        let norm = inner_product(&f, &f, &grid).unwrap().sqrt();
        let f: Vec<f64> = f.iter().map(|x| x / norm).collect();
        let c = LocalCovariance::from_components(grid.clone(), &[(1.0, f.clone())], 0.5, 0.1).unwrap();
        let eig = operator_eigh(&c, 2).unwrap();
        assert!((eig.eigenvalues[0] - 1.0).abs() < 1e-10);
        assert!(eig.eigenvalues[1].abs() < 1e-10);
        let overlap = inner_product(&eig.eigenfunctions[0], &f, &grid).unwrap();
        assert!((overlap.abs() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn zero_operator() {
        let grid = make_uniform_grid(11, 1).unwrap();
        let eig = operator_eigh(&LocalCovariance::zeros(grid, 0.5, 0.1), 11).unwrap();
        assert!(eig.eigenvalues.iter().all(|&l| l == 0.0));
    }

    #[test]
    fn known_spectrum_from_fourier_components() {
        let grid = make_uniform_grid(201, 1).unwrap();
        let c = LocalCovariance::from_components(
            grid.clone(),
            &[(2.0, phi(&grid, 1)), (0.5, phi(&grid, 2))],
            0.5,
            0.1,
        )
        .unwrap();
        let eig = operator_eigh(&c, 3).unwrap();
        // Discrete norm of √2 cos(2πs) under the trapezoid rule on a periodic
        // grid is exact, so the spectrum is reproduced to rounding.
        assert!((eig.eigenvalues[0] - 2.0).abs() < 1e-6);
        assert!((eig.eigenvalues[1] - 0.5).abs() < 1e-6);
        assert!(eig.eigenvalues[2].abs() < 1e-6);
    }

    #[test]
    fn eigenfunctions_are_quadrature_orthonormal() {
        let grid = make_uniform_grid(41, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let c = random_symmetric(&grid, &mut rng);
        let eig = operator_eigh(&c, 41).unwrap();
        for i in 0..41 {
            for j in 0..41 {
                let ip = inner_product(&eig.eigenfunctions[i], &eig.eigenfunctions[j], &grid).unwrap();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((ip - expected).abs() < 1e-8);
            }
        }
        assert!(eig.eigenvalues.windows(2).all(|p| p[0] >= p[1]));
        let rebuilt = eig.reconstruct();
        let rel = (&rebuilt - c.kernel()).norm() / c.kernel().norm();
        assert!(rel < 1e-8, "relative reconstruction error {rel}");
    }

    #[test]
    fn eigh_errors() {
        let grid = make_uniform_grid(5, 1).unwrap();
        let c = LocalCovariance::zeros(grid.clone(), 0.5, 0.1);
        assert!(matches!(operator_eigh(&c, 6), Err(LsftsError::InvalidOrder { .. })));
        assert!(matches!(operator_eigh(&c, 0), Err(LsftsError::InvalidOrder { .. })));
        let mut k = DMatrix::zeros(5, 5);
        k[(1, 1)] = f64::NAN;
        let c = LocalCovariance::new(k, grid, 0.5, 0.1).unwrap();
        assert!(matches!(operator_eigh(&c, 1), Err(LsftsError::Numeric(_))));
    }

    #[test]
    fn norm_bound_cases() {
        let grid = make_uniform_grid(101, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let c = random_symmetric(&grid, &mut rng);
        assert_eq!(operator_norm_bound(&c, &c).unwrap(), 0.0);

        let f = phi(&grid, 5);
        let norm = inner_product(&f, &f, &grid).unwrap().sqrt();
        let f: Vec<f64> = f.iter().map(|x| x / norm).collect();
        let bump = LocalCovariance::from_components(grid.clone(), &[(1.0, f)], 0.5, 0.1).unwrap();
        let shifted = LocalCovariance::new(c.kernel() + bump.kernel(), grid.clone(), 0.5, 0.1).unwrap();
        assert!((operator_norm_bound(&shifted, &c).unwrap() - 1.0).abs() < 1e-6);

        let zero = LocalCovariance::zeros(grid.clone(), 0.5, 0.1);
        let eig = operator_eigh(&c, 101).unwrap();
        let max_abs = eig.eigenvalues.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!((operator_norm_bound(&c, &zero).unwrap() - max_abs).abs() < 1e-10);
    }

    #[test]
    fn norm_bound_grid_mismatch() {
        let a = LocalCovariance::zeros(make_uniform_grid(5, 1).unwrap(), 0.5, 0.1);
        let b = LocalCovariance::zeros(make_uniform_grid(6, 1).unwrap(), 0.5, 0.1);
        assert_eq!(operator_norm_bound(&a, &b), Err(LsftsError::GridMismatch));
    }

    #[test]
    fn spectral_dominance_for_psd() {
        let grid = make_uniform_grid(31, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let components: Vec<(f64, Vec<f64>)> = (0..6)
            .map(|_| {
                let (scale, freq) = (rng.random_range(0.0..3.0), rng.random_range(1.0..9.0));
                (scale, grid.sample(|s| (s * freq).sin()))
            })
            .collect();
        let c = LocalCovariance::from_components(grid.clone(), &components, 0.5, 0.1).unwrap();
        let eig = operator_eigh(&c, 1).unwrap();
        let zero = LocalCovariance::zeros(grid, 0.5, 0.1);
        let bound = operator_norm_bound(&c, &zero).unwrap();
        assert!((eig.eigenvalues[0] - bound).abs() < 1e-10 * bound.max(1.0));
    }

    #[test]
    fn projection_with_full_basis_is_identity() {
        let grid = make_uniform_grid(21, 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let c = random_symmetric(&grid, &mut rng);
        let eig = operator_eigh(&c, 21).unwrap();
        let x: Vec<f64> = (0..21).map(|_| rng.random_range(-2.0..2.0)).collect();
        let p = eig.project(&x, 21).unwrap();
        for (a, b) in p.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
