//! Lowest eigenpairs by block shift-invert Krylov iteration at shift 0.
//!
//! Each step expands the basis with `S⁻¹ r` for the residuals `r = S x − θ x`
//! of the current block of Ritz pairs. This spans the same space as a block
//! shift-invert Lanczos step (`S⁻¹ x` modulo `x`) but keeps full relative
//! accuracy in the new directions, which `S⁻¹ x` loses once `x` has nearly
//! converged. The basis is fully reorthogonalized, Ritz pairs come from the
//! Rayleigh–Ritz projection of `S`, and residuals are measured against `S`.
//! The block size is `M + 2`, so clusters and exact multiplicities up to that
//! size are resolved. A diagonal mass matrix `W` turns the problem into
//! `S x = θ W x`; the basis is then `W`-orthonormal.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::solve::Cholesky;
use super::{dot, norm, Operator};
use crate::par;
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct EigenOptions {
    /// Required `‖S x − θ x‖ / (θ ‖x‖)`.
    pub tol: f64,
    /// Basis columns before a restart.
    pub max_basis: usize,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions { tol: 1e-9, max_basis: 0, max_restarts: 20, seed: 0x5eed_cafe }
    }
}

/// Matrix eigenpairs (ascending), vectors over free nodes with unit
/// (mass-weighted) norm.
#[derive(Clone, Debug)]
pub struct Eigenpairs {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

struct Metric<'a>(Option<&'a [f64]>);

impl Metric<'_> {
    fn dot(&self, a: &[f64], b: &[f64]) -> f64 {
        match self.0 {
            None => dot(a, b),
            Some(w) => par::sum(a.len(), |i| w[i] * a[i] * b[i]),
        }
    }

    fn norm(&self, a: &[f64]) -> f64 {
        self.dot(a, a).sqrt()
    }

    fn apply(&self, a: &[f64]) -> Vec<f64> {
        match self.0 {
            None => a.to_vec(),
            Some(w) => a.iter().zip(w).map(|(x, w)| x * w).collect(),
        }
    }
}

/// Orthonormalizes `block` against `basis` (two Gram–Schmidt passes) and
/// drops numerically dependent columns.
fn orthonormalize_against(metric: &Metric, basis: &[Vec<f64>], block: &mut Vec<Vec<f64>>) {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(block.len());
    for mut w in block.drain(..) {
        let before = metric.norm(&w);
        if before == 0.0 {
            continue;
        }
        for _ in 0..2 {
            for q in basis.iter().chain(out.iter()) {
                let c = metric.dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi -= c * qi;
                }
            }
        }
        let after = metric.norm(&w);
        if after > 1e-12 * before {
            w.iter_mut().for_each(|x| *x /= after);
            out.push(w);
        }
    }
    *block = out;
}

/// The `m` smallest eigenpairs of the symmetric positive definite `op`.
pub fn lowest_eigenpairs(op: &Operator, chol: &Cholesky, m: usize, opts: &EigenOptions) -> Result<Eigenpairs> {
    lowest_generalized(op, None, chol, m, opts)
}

/// The `m` smallest eigenpairs of `S x = θ W x` for a positive diagonal `W`
/// (`None` is the identity). `chol` factors `S`.
pub fn lowest_generalized(
    op: &Operator,
    mass: Option<&[f64]>,
    chol: &Cholesky,
    m: usize,
    opts: &EigenOptions,
) -> Result<Eigenpairs> {
    let n = op.n;
    if m == 0 || m > n {
        return invalid(format!("cannot compute {m} eigenpairs of a {n}-dimensional operator"));
    }
    if let Some(w) = mass {
        if w.len() != n || w.iter().any(|&x| !(x > 0.0)) {
            return invalid("mass must be positive on every unknown");
        }
    }
    let metric = Metric(mass);
    let b = (m + 2).min(n);
    let max_basis = if opts.max_basis > 0 { opts.max_basis } else { (8 * b).max(48) }.min(n);
    let mut rng = StdRng::seed_from_u64(opts.seed);
    let mut block: Vec<Vec<f64>> = (0..b).map(|_| (0..n).map(|_| rng.gen::<f64>() - 0.5).collect()).collect();
    let mut last = (f64::INFINITY, 0usize);

    for _restart in 0..=opts.max_restarts {
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut sbasis: Vec<Vec<f64>> = Vec::new();
        let mut proj: Vec<Vec<f64>> = Vec::new(); // proj[i][j] = v_iᵀ S v_j, j <= i
        orthonormalize_against(&metric, &basis, &mut block);
        loop {
            let start = basis.len();
            for v in block.drain(..) {
                let sv = op.mul(&v);
                basis.push(v);
                sbasis.push(sv);
            }
            for i in start..basis.len() {
                let row: Vec<f64> = (0..=i).map(|j| dot(&basis[j], &sbasis[i])).collect();
                proj.push(row);
            }
            let dim = basis.len();
            let hmat = DMatrix::from_fn(dim, dim, |i, j| if j <= i { proj[i][j] } else { proj[j][i] });
            let eig = SymmetricEigen::new(hmat);
            let mut order: Vec<usize> = (0..dim).collect();
            order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));

            let take = b.min(dim);
            let mut values = Vec::with_capacity(take);
            let mut vectors = Vec::with_capacity(take);
            let mut residuals = Vec::with_capacity(take);
            let mut rvecs = Vec::with_capacity(take);
            for &o in order.iter().take(take) {
                let theta = eig.eigenvalues[o];
                let y = eig.eigenvectors.column(o);
                let mut x = vec![0.0; n];
                let mut sx = vec![0.0; n];
                for (k, yk) in y.iter().enumerate() {
                    for i in 0..n {
                        x[i] += yk * basis[k][i];
                        sx[i] += yk * sbasis[k][i];
                    }
                }
                let wx = metric.apply(&x);
                let rv: Vec<f64> = sx.iter().zip(&wx).map(|(s, xi)| s - theta * xi).collect();
                let xn = metric.norm(&x);
                values.push(theta);
                residuals.push(norm(&rv) / (theta.abs() * norm(&wx)));
                rvecs.push(rv);
                x.iter_mut().for_each(|v| *v /= xn);
                vectors.push(x);
            }
            let worst = residuals.iter().take(m).cloned().fold(0.0, f64::max);
            last = (worst, last.1 + 1);
            if dim >= m && worst <= opts.tol {
                if values[0] <= 0.0 {
                    return Err(Error::Factorization("operator is not positive definite".into()));
                }
                values.truncate(m);
                vectors.truncate(m);
                residuals.truncate(m);
                return Ok(Eigenpairs { values, vectors, residuals });
            }
            if dim + b > max_basis || dim == n {
                block = vectors;
                break;
            }
            block = chol.solve_many(&rvecs);
            orthonormalize_against(&metric, &basis, &mut block);
            if block.is_empty() {
                // no new direction survives: the basis is exhausted
                return Err(Error::NoConvergence { residual: worst, iterations: last.1 });
            }
        }
    }
    Err(Error::NoConvergence { residual: last.0, iterations: last.1 })
}
