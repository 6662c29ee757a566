//! Small dense linear algebra helpers shared by the estimators.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{CmfError, Result};

/// Condition numbers above this make a Gram matrix unusable.
pub const MAX_CONDITION: f64 = 1e12;

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Ratio of smallest to largest singular value (0 for a zero matrix).
pub fn singular_value_ratio(m: &DMatrix<f64>) -> f64 {
    let sv = m.singular_values();
    let largest = sv.max();
    if largest <= 0.0 {
        return 0.0;
    }
    sv.min() / largest
}

/// Largest eigenvalue magnitude of a linear operator by power iteration.
///
/// Stops when the relative change of the Rayleigh-style estimate drops
/// below `tol`. Returns 0 when the operator annihilates the start vector.
pub fn power_iteration<F>(dim: usize, apply: F, tol: f64, max_iters: usize) -> f64
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    if dim == 0 {
        return 0.0;
    }
    // deterministic, generic start vector
    let mut v = DVector::from_fn(dim, |i, _| 1.0 + 0.5 * ((i as f64) * 0.618_033_988_75).fract());
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let w = apply(&v);
        let norm = w.norm();
        if !norm.is_finite() || norm <= f64::MIN_POSITIVE {
            return 0.0;
        }
        let converged = (norm - estimate).abs() <= tol * norm;
        estimate = norm;
        v = w / norm;
        if converged {
            break;
        }
    }
    estimate
}

/// Cholesky factorization of a symmetric positive-definite matrix with a
/// cheap condition number estimate.
#[derive(Debug, Clone)]
pub struct SpdFactor {
    chol: Cholesky<f64, Dyn>,
    condition: f64,
}

impl SpdFactor {
    /// Factor `g`, rejecting matrices that are not numerically positive
    /// definite or whose condition estimate exceeds `max_condition`.
    pub fn new(g: DMatrix<f64>, max_condition: f64) -> Result<Self> {
        let dim = g.nrows();
        let lambda_max = power_iteration(dim, |v| &g * v, 1e-6, 500);
        let chol = Cholesky::new(g).ok_or(CmfError::IllConditionedSensing { condition: f64::INFINITY })?;
        // inverse iteration for the smallest eigenvalue
        let inv_max = power_iteration(dim, |v| chol.solve(v), 1e-6, 500);
        let condition = if inv_max > 0.0 { lambda_max * inv_max } else { f64::INFINITY };
        if !condition.is_finite() || condition > max_condition {
            return Err(CmfError::IllConditionedSensing { condition });
        }
        Ok(SpdFactor { chol, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    /// Explicit inverse; only for small matrices and diagnostics.
    pub fn inverse(&self) -> DMatrix<f64> {
        self.chol.inverse()
    }
}

/// `0.5 (A + Aᵀ)`, removing rounding asymmetry.
pub fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}
