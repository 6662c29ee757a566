//! Huber loss, its minimax threshold, and the soft-threshold operator.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::DVector;
use statrs::function::erf::erfc;

use crate::error::{invalid, CmfError, Result};

/// Bracket for `k = h / σ` used by the threshold bisection.
pub const THRESHOLD_BRACKET: (f64, f64) = (1e-6, 20.0);
const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITERS: usize = 200;

/// Standard normal density.
pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Standard normal upper tail probability `Q(t) = P(Z > t)`.
pub fn std_normal_tail(t: f64) -> f64 {
    0.5 * erfc(t * FRAC_1_SQRT_2)
}

/// `ψ(k)/k - Q(k)`; strictly decreasing on `(0, ∞)`.
pub fn threshold_lhs(k: f64) -> f64 {
    std_normal_pdf(k) / k - std_normal_tail(k)
}

/// Right-hand side `ε / (2(1-ε))` of the threshold equation.
pub fn threshold_rhs(epsilon: f64) -> f64 {
    epsilon / (2.0 * (1.0 - epsilon))
}

/// Huber parameters for a given contamination level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HuberParams {
    pub epsilon: f64,
    pub sigma: f64,
    pub h: f64,
}

impl HuberParams {
    /// Residual of the threshold equation at the stored `h`.
    pub fn residual(&self) -> f64 {
        threshold_lhs(self.h / self.sigma) - threshold_rhs(self.epsilon)
    }
}

/// Solve `(σ/h) ψ(h/σ) - Q(h/σ) = ε / (2(1-ε))` for `h`.
pub fn solve_huber_threshold(epsilon: f64, sigma: f64) -> Result<HuberParams> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return invalid(format!("contamination ratio {epsilon} outside (0, 1)"));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return invalid(format!("sigma {sigma} must be positive"));
    }
    let rhs = threshold_rhs(epsilon);
    let g = |k: f64| threshold_lhs(k) - rhs;
    let (mut lo, mut hi) = THRESHOLD_BRACKET;
    if g(lo) < 0.0 || g(hi) > 0.0 {
        return Err(CmfError::BracketExceeded { lo, hi });
    }
    for _ in 0..BISECTION_MAX_ITERS {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_TOL {
            break;
        }
    }
    let k = 0.5 * (lo + hi);
    Ok(HuberParams { epsilon, sigma, h: k * sigma })
}

/// `ρ_h(n)`: `n²` inside `[-h, h]`, `2h|n| - h²` outside.
pub fn huber_loss(n: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return invalid(format!("huber threshold {h} must be positive"));
    }
    let a = n.abs();
    Ok(if a <= h { n * n } else { 2.0 * h * a - h * h })
}

/// `max(|x| - α, 0) sign(x)`.
#[inline]
pub fn shrink(x: f64, alpha: f64) -> f64 {
    let a = x.abs() - alpha;
    if a > 0.0 {
        a.copysign(x)
    } else {
        0.0
    }
}

/// Scalar soft-threshold with argument checking.
pub fn soft_threshold(x: f64, alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0) {
        return invalid(format!("threshold {alpha} must be non-negative"));
    }
    Ok(shrink(x, alpha))
}

/// Elementwise soft-threshold of a vector.
pub fn soft_threshold_vec(x: &DVector<f64>, alpha: f64) -> Result<DVector<f64>> {
    if !(alpha >= 0.0) {
        return invalid(format!("threshold {alpha} must be non-negative"));
    }
    Ok(x.map(|v| shrink(v, alpha)))
}

/// Evaluate `min_u (u - n)² + 2h|u|` through its closed-form minimizer.
///
/// Returns `(value, u_star)`; the value coincides with `ρ_h(n)`.
pub fn huber_via_fuchs(n: f64, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return invalid(format!("huber threshold {h} must be positive"));
    }
    let u = shrink(n, h);
    Ok(((u - n).powi(2) + 2.0 * h * u.abs(), u))
}
