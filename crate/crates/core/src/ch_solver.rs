//! Compressed Huber reconstruction.
//!
//! Given `z = T y`, estimate `(θ, u)` from
//!
//! ```text
//! min_{θ,u} ‖z - T(Hθ + u)‖²_{(TTᵀ)⁻¹} + 2h‖u‖₁
//! ```
//!
//! `θ` is eliminated in closed form (`θ = Q(z - Tu)`), leaving a LASSO in
//! `u` with smooth part `f(u) = (z - Tu)ᵀ S (z - Tu)`, which is solved with
//! accelerated proximal gradient steps.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, CmfError, Result};
use crate::huber::shrink;
use crate::linalg::{self, power_iteration, SpdFactor};
use crate::model::DesignMatrix;
use crate::sensing::SensingMatrix;

/// Relative margin added on top of the power-iteration estimate of `λ_max`.
pub const LIPSCHITZ_MARGIN: f64 = 1.01;
const POWER_TOL: f64 = 1e-6;
const POWER_MAX_ITERS: usize = 1000;
/// Below this, `S·TTᵀ` is treated as the zero operator (its spectrum is in {0, 1}).
const NULL_SPECTRUM: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    /// Infinity-norm threshold on successive iterates.
    pub u_change_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_iters: 2000, rel_obj_tol: 1e-8, u_change_tol: 1e-9 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 || !(self.rel_obj_tol > 0.0) || !(self.u_change_tol > 0.0) {
            return invalid("solver options must all be positive");
        }
        Ok(())
    }
}

/// Quantities shared by every solve against one `(T, H)` pair.
#[derive(Debug, Clone)]
pub struct SolverWorkspace<'a> {
    t: &'a SensingMatrix,
    h: &'a DesignMatrix,
    gram: DMatrix<f64>,
    gram_factor: SpdFactor,
    q: DMatrix<f64>,
    s: DMatrix<f64>,
    lipschitz: f64,
    spectral_radius: f64,
}

impl<'a> SolverWorkspace<'a> {
    pub fn sensing(&self) -> &'a SensingMatrix {
        self.t
    }

    pub fn design(&self) -> &'a DesignMatrix {
        self.h
    }

    /// `θ`-recovery operator `(HᵀT†TH)⁻¹HᵀT†` (K×M).
    pub fn q(&self) -> &DMatrix<f64> {
        &self.q
    }

    /// `(I - THQ)ᵀ (TTᵀ)⁻¹ (I - THQ)` (M×M).
    pub fn s(&self) -> &DMatrix<f64> {
        &self.s
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn gram_factor(&self) -> &SpdFactor {
        &self.gram_factor
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Power-iteration estimate of `λ_max(TᵀST)`.
    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    /// `θ̂ = Q (z - T u)`.
    pub fn theta_for(&self, z: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        &self.q * (z - self.t.entries() * u)
    }
}

pub fn precompute<'a>(t: &'a SensingMatrix, h: &'a DesignMatrix) -> Result<SolverWorkspace<'a>> {
    if t.n_samples() != h.n_rows() {
        return invalid(format!("sensing matrix has {} columns, design has {} rows", t.n_samples(), h.n_rows()));
    }
    let m = t.n_filters();
    let gram = t.gram();
    let gram_factor = SpdFactor::new(gram.clone(), linalg::MAX_CONDITION)?;

    let th = t.entries() * h.entries();
    let weighted = gram_factor.solve_mat(&th);
    let normal = th.transpose() * &weighted;
    let normal = SpdFactor::new(normal, linalg::MAX_CONDITION)
        .map_err(|_| CmfError::Unidentifiable("TH is numerically rank deficient".into()))?;
    let q = normal.solve_mat(&weighted.transpose());

    let residual_map = DMatrix::identity(m, m) - &th * &q;
    let mut s = residual_map.transpose() * gram_factor.solve_mat(&residual_map);
    linalg::symmetrize(&mut s);

    let spectral_radius = power_iteration(m, |v| &s * (&gram * v), POWER_TOL, POWER_MAX_ITERS);
    let lipschitz = if spectral_radius < NULL_SPECTRUM {
        // S = 0: the smooth term is constant and any positive step works
        2.0
    } else {
        2.0 * LIPSCHITZ_MARGIN * spectral_radius
    };

    Ok(SolverWorkspace { t, h, gram, gram_factor, q, s, lipschitz, spectral_radius })
}

/// Result of one compressed Huber solve.
#[derive(Debug, Clone)]
pub struct CHSolution {
    pub theta_hat: DVector<f64>,
    pub u_hat: DVector<f64>,
    pub iterations: usize,
    /// Objective at the starting point followed by one entry per iteration.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub final_objective: f64,
    /// Steps whose proximal point was rejected for not decreasing the objective.
    pub rejected_steps: usize,
}

fn l1_penalty(u: &DVector<f64>, h: f64) -> f64 {
    let norm = u.lp_norm(1);
    // keeps h = ∞ usable (no outliers allowed) without 0·∞
    if norm == 0.0 {
        0.0
    } else {
        2.0 * h * norm
    }
}

fn smooth_part(residual: &DVector<f64>, s: &DMatrix<f64>) -> f64 {
    residual.dot(&(s * residual))
}

/// `(z - Tu)ᵀ S (z - Tu) + 2h‖u‖₁`.
pub fn ch_objective(u: &DVector<f64>, z: &DVector<f64>, ws: &SolverWorkspace<'_>, h: f64) -> Result<f64> {
    check_dims(u, z, ws)?;
    let r = z - ws.t.entries() * u;
    Ok(smooth_part(&r, &ws.s) + l1_penalty(u, h))
}

fn check_dims(u: &DVector<f64>, z: &DVector<f64>, ws: &SolverWorkspace<'_>) -> Result<()> {
    if z.len() != ws.t.n_filters() {
        return invalid(format!("z has length {}, expected {}", z.len(), ws.t.n_filters()));
    }
    if u.len() != ws.t.n_samples() {
        return invalid(format!("u has length {}, expected {}", u.len(), ws.t.n_samples()));
    }
    Ok(())
}

/// Run the accelerated shrinkage iteration from `u = 0`.
pub fn solve_ch(z: &DVector<f64>, ws: &SolverWorkspace<'_>, h: f64, opts: &SolverOptions) -> Result<CHSolution> {
    solve_ch_from(z, ws, h, opts, &DVector::zeros(ws.t.n_samples()))
}

/// Run the accelerated shrinkage iteration from a given starting point.
///
/// Each step takes the proximal gradient point `v` from the extrapolated
/// iterate. If `v` does not decrease the objective the previous iterate is
/// kept and only the momentum is advanced, so the returned objective trace
/// is non-increasing; when every step descends this is plain FISTA. On
/// convergence the active set is solved exactly when that point satisfies
/// the optimality conditions.
pub fn solve_ch_from(
    z: &DVector<f64>,
    ws: &SolverWorkspace<'_>,
    h: f64,
    opts: &SolverOptions,
    u0: &DVector<f64>,
) -> Result<CHSolution> {
    if !(h > 0.0) {
        return invalid(format!("huber threshold {h} must be positive"));
    }
    opts.validate()?;
    check_dims(u0, z, ws)?;

    let t = ws.t.entries();
    let step = 2.0 / ws.lipschitz;
    let shrink_by = 2.0 * h / ws.lipschitz;

    let mut u_prev = u0.clone();
    let mut f_prev = smooth_part(&(z - t * &u_prev), &ws.s) + l1_penalty(&u_prev, h);
    if !f_prev.is_finite() {
        return Err(CmfError::Divergence { iteration: 0 });
    }
    let mut trace = Vec::with_capacity(opts.max_iters.min(4096) + 1);
    trace.push(f_prev);

    let mut y = u_prev.clone();
    let mut momentum = 1.0_f64;
    let mut converged = false;
    let mut iterations = 0;
    let mut rejected_steps = 0;

    for k in 1..=opts.max_iters {
        iterations = k;
        let e = z - t * &y;
        let grad_dir = t.tr_mul(&(&ws.s * &e));
        let mut v = y.clone();
        v.axpy(step, &grad_dir, 1.0);
        v.apply(|x| *x = shrink(*x, shrink_by));

        let f_v = smooth_part(&(z - t * &v), &ws.s) + l1_penalty(&v, h);
        if !f_v.is_finite() || v.iter().any(|x| !x.is_finite()) {
            return Err(CmfError::Divergence { iteration: k });
        }

        let next_momentum = 0.5 * (1.0 + (1.0 + 4.0 * momentum * momentum).sqrt());
        let accepted = f_v <= f_prev;
        if !accepted {
            rejected_steps += 1;
        }
        let (u_new, f_new) = if accepted { (v.clone(), f_v) } else { (u_prev.clone(), f_prev) };

        // y = u_k + (t_k / t_{k+1}) (v - u_k) + ((t_k - 1) / t_{k+1}) (u_k - u_{k-1})
        let mut next_y = u_new.clone();
        if !accepted {
            next_y.axpy(momentum / next_momentum, &(&v - &u_new), 1.0);
        }
        next_y.axpy((momentum - 1.0) / next_momentum, &(&u_new - &u_prev), 1.0);

        // a rejected step still measures distance to the proximal point
        let change = (&v - &u_prev).amax();
        let obj_change = (f_prev - f_new).abs();
        trace.push(f_new);

        let stop = change < opts.u_change_tol
            || (accepted && obj_change <= opts.rel_obj_tol * f_prev.abs().max(f64::MIN_POSITIVE));

        u_prev = u_new;
        f_prev = f_new;
        y = next_y;
        momentum = next_momentum;

        if stop {
            converged = true;
            break;
        }
    }

    if converged {
        if let Some((u, f)) = polish_support(z, ws, h, &u_prev) {
            if f <= f_prev && u != u_prev {
                iterations += 1;
                trace.push(f);
                u_prev = u;
                f_prev = f;
            }
        }
    }

    let theta_hat = ws.theta_for(z, &u_prev);
    Ok(CHSolution {
        theta_hat,
        u_hat: u_prev,
        iterations,
        objective_trace: trace,
        converged,
        final_objective: f_prev,
        rejected_steps,
    })
}

/// Exact minimizer on the support and sign pattern of `u`, if it is optimal.
fn polish_support(z: &DVector<f64>, ws: &SolverWorkspace<'_>, h: f64, u: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let support: Vec<usize> = (0..u.len()).filter(|&i| u[i] != 0.0).collect();
    if support.is_empty() || !h.is_finite() {
        return None;
    }
    let t = ws.t.entries();
    let t_a = t.select_columns(&support);
    let st_a = &ws.s * &t_a;
    let mut lhs = t_a.tr_mul(&st_a);
    linalg::symmetrize(&mut lhs);
    let signs = DVector::from_iterator(support.len(), support.iter().map(|&i| u[i].signum()));
    let rhs = st_a.tr_mul(z) - &signs * h;
    let u_a = lhs.cholesky()?.solve(&rhs);
    if support.iter().enumerate().any(|(j, _)| u_a[j].signum() != signs[j] || !u_a[j].is_finite()) {
        return None;
    }

    let mut polished = DVector::zeros(u.len());
    for (j, &i) in support.iter().enumerate() {
        polished[i] = u_a[j];
    }
    let r = z - t * &polished;
    let corr = t.tr_mul(&(&ws.s * &r));
    if corr.iter().any(|c| c.abs() > h * (1.0 + 1e-9)) {
        return None;
    }
    let f = smooth_part(&r, &ws.s) + l1_penalty(&polished, h);
    Some((polished, f))
}
