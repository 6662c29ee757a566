//! Compressed matched filter: `T = [Hᵀ; W P]`.
//!
//! The leading `K` rows are the classical matched filter. The remaining
//! `M - K` rows are iid Gaussian combinations pushed through the projector
//! onto the orthogonal complement of `range(H)`, so they respond only to
//! the part of the noise the matched filter cannot see.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, CmfError, Result};
use crate::linalg::{self, SpdFactor};
use crate::model::DesignMatrix;
use crate::seeds::{self, Seed};

/// Largest `N` for which the explicit N×N projector is materialized.
pub const EXPLICIT_PROJECTOR_LIMIT: usize = 2000;

/// `P = I - H (HᵀH)⁻¹ Hᵀ` applied through an orthonormal basis of `range(H)`.
#[derive(Debug, Clone)]
pub struct NullSpaceProjector {
    basis: DMatrix<f64>,
}

impl NullSpaceProjector {
    pub fn new(design: &DesignMatrix) -> Result<Self> {
        let qr = design.entries().clone().qr();
        let r = qr.r();
        let diag = r.diagonal().map(f64::abs);
        let ratio = if diag.max() > 0.0 { diag.min() / diag.max() } else { 0.0 };
        if ratio <= crate::model::RANK_TOLERANCE {
            return Err(CmfError::SingularDesign { ratio });
        }
        Ok(NullSpaceProjector { basis: qr.q() })
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.basis * (self.basis.transpose() * x)
    }

    /// `A P` for a matrix whose rows live in ℝᴺ.
    pub fn apply_rows(&self, a: &DMatrix<f64>) -> DMatrix<f64> {
        a - (a * &self.basis) * self.basis.transpose()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let n = self.dim();
        DMatrix::identity(n, n) - &self.basis * self.basis.transpose()
    }
}

/// Explicit null-space projector of a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionMatrix {
    pub entries: DMatrix<f64>,
}

pub fn projection_matrix(design: &DesignMatrix) -> Result<ProjectionMatrix> {
    if design.n_rows() > EXPLICIT_PROJECTOR_LIMIT {
        return invalid(format!(
            "explicit projector limited to N <= {EXPLICIT_PROJECTOR_LIMIT}; use NullSpaceProjector"
        ));
    }
    let mut entries = NullSpaceProjector::new(design)?.to_matrix();
    linalg::symmetrize(&mut entries);
    Ok(ProjectionMatrix { entries })
}

/// The M×N CMF matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    entries: DMatrix<f64>,
    matched_rows: usize,
    seed_used: Seed,
}

impl SensingMatrix {
    /// Wrap an arbitrary full-row-rank matrix (no CMF structure assumed).
    pub fn from_entries(entries: DMatrix<f64>, matched_rows: usize) -> Result<Self> {
        let (m, n) = entries.shape();
        if m == 0 || m > n {
            return invalid(format!("sensing matrix must satisfy 1 <= M <= N, got {m}x{n}"));
        }
        if matched_rows > m {
            return invalid("matched rows exceed row count");
        }
        Ok(SensingMatrix { entries, matched_rows, seed_used: 0 })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n_filters(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.entries.ncols()
    }

    pub fn matched_rows(&self) -> usize {
        self.matched_rows
    }

    pub fn seed_used(&self) -> Seed {
        self.seed_used
    }

    /// `T Tᵀ`.
    pub fn gram(&self) -> DMatrix<f64> {
        let mut g = &self.entries * self.entries.transpose();
        linalg::symmetrize(&mut g);
        g
    }

    /// Factor `T Tᵀ`, failing if it is too ill-conditioned to use.
    pub fn gram_factor(&self) -> Result<SpdFactor> {
        SpdFactor::new(self.gram(), linalg::MAX_CONDITION)
    }
}

pub fn build_cmf(design: &DesignMatrix, n_filters: usize, seed: Seed) -> Result<SensingMatrix> {
    let (n, k) = (design.n_rows(), design.n_cols());
    if n_filters < k {
        return invalid(format!("M = {n_filters} is below K = {k}"));
    }
    if n_filters > n {
        return invalid(format!("M = {n_filters} exceeds N = {n}"));
    }
    let mut entries = DMatrix::zeros(n_filters, n);
    entries.rows_mut(0, k).copy_from(&design.entries().transpose());
    let extra = n_filters - k;
    if extra > 0 {
        let mut rng = seeds::rng(seed);
        let mut w = DMatrix::zeros(extra, n);
        for r in 0..extra {
            for c in 0..n {
                w[(r, c)] = rng.sample::<f64, _>(StandardNormal);
            }
        }
        let projector = NullSpaceProjector::new(design)?;
        entries.rows_mut(k, extra).copy_from(&projector.apply_rows(&w));
    }
    Ok(SensingMatrix { entries, matched_rows: k, seed_used: seed })
}

/// `z = T y`.
pub fn compress(t: &SensingMatrix, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != t.n_samples() {
        return invalid(format!("observation has length {}, sensing matrix has {} columns", y.len(), t.n_samples()));
    }
    Ok(t.entries() * y)
}

/// `T† = Tᵀ (T Tᵀ)⁻¹` for a full-row-rank `T`.
pub fn row_space_pseudoinverse(t: &SensingMatrix) -> Result<DMatrix<f64>> {
    let factor = t.gram_factor()?;
    Ok(factor.solve_mat(t.entries()).transpose())
}
