//! Weighted least squares baselines, oracle MSE bounds and the AWLS
//! refinement of a compressed Huber solution.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::ch_solver::CHSolution;
use crate::error::{invalid, CmfError, Result};
use crate::linalg::{self, SpdFactor};
use crate::model::{sample_noise, DesignMatrix, NoiseSpec};
use crate::seeds::{Seed, TrialSeeds};
use crate::sensing::{build_cmf, SensingMatrix};

/// Diagonal noise covariance `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseCovarianceDiag {
    variances: DVector<f64>,
}

impl NoiseCovarianceDiag {
    pub fn new(variances: DVector<f64>) -> Result<Self> {
        if variances.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return invalid("noise variances must be positive and finite");
        }
        Ok(NoiseCovarianceDiag { variances })
    }

    pub fn uniform(n: usize, variance: f64) -> Result<Self> {
        Self::new(DVector::from_element(n, variance))
    }

    /// `σ₂²` on masked entries, `σ₁²` elsewhere.
    pub fn from_mask(spec: &NoiseSpec, mask: &[bool]) -> Self {
        NoiseCovarianceDiag { variances: spec.variances_for_mask(mask) }
    }

    pub fn variances(&self) -> &DVector<f64> {
        &self.variances
    }

    pub fn len(&self) -> usize {
        self.variances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variances.is_empty()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(&self.variances * factor)
    }
}

/// Outliers detected from `û` and the covariance they imply.
#[derive(Debug, Clone, PartialEq)]
pub struct OutlierEstimate {
    pub indices: Vec<usize>,
    pub sigma2_sq_hat: Option<f64>,
    pub d_hat: NoiseCovarianceDiag,
}

/// Generalized least squares fit with its conditional covariance trace.
#[derive(Debug, Clone)]
pub struct WlsFit {
    pub theta: DVector<f64>,
    /// `trace((XᵀC⁻¹X)⁻¹)`, the conditional MSE of the fit.
    pub covariance_trace: f64,
}

/// `θ̂ = (HᵀD⁻¹H)⁻¹HᵀD⁻¹y`.
pub fn wls_uncompressed(y: &DVector<f64>, h: &DesignMatrix, d: &NoiseCovarianceDiag) -> Result<DVector<f64>> {
    Ok(wls_uncompressed_fit(y, h, d)?.theta)
}

pub fn wls_uncompressed_fit(y: &DVector<f64>, h: &DesignMatrix, d: &NoiseCovarianceDiag) -> Result<WlsFit> {
    if y.len() != h.n_rows() || d.len() != h.n_rows() {
        return invalid("observation, design and covariance dimensions disagree");
    }
    let hmat = h.entries();
    let mut weighted = hmat.clone();
    for (mut row, &v) in weighted.row_iter_mut().zip(d.variances.iter()) {
        row /= v;
    }
    let normal = hmat.transpose() * &weighted;
    let factor = SpdFactor::new(normal, linalg::MAX_CONDITION).map_err(|_| CmfError::SingularDesign { ratio: 0.0 })?;
    let theta = factor.solve_vec(&weighted.tr_mul(y));
    Ok(WlsFit { theta, covariance_trace: factor.inverse().trace() })
}

/// `θ̂ = (HᵀTᵀ(TDTᵀ)⁻¹TH)⁻¹HᵀTᵀ(TDTᵀ)⁻¹z`.
pub fn wls_oracle_compressed(
    z: &DVector<f64>,
    t: &SensingMatrix,
    h: &DesignMatrix,
    d: &NoiseCovarianceDiag,
) -> Result<DVector<f64>> {
    Ok(wls_oracle_fit(z, t, h, d)?.theta)
}

pub fn wls_oracle_fit(z: &DVector<f64>, t: &SensingMatrix, h: &DesignMatrix, d: &NoiseCovarianceDiag) -> Result<WlsFit> {
    if z.len() != t.n_filters() || t.n_samples() != h.n_rows() || d.len() != h.n_rows() {
        return invalid("compressed data, sensing, design and covariance dimensions disagree");
    }
    let factor = compressed_covariance(t, d)?;
    let th = t.entries() * h.entries();
    let weighted = factor.solve_mat(&th);
    let normal = th.transpose() * &weighted;
    let normal = SpdFactor::new(normal, linalg::MAX_CONDITION)
        .map_err(|_| CmfError::Unidentifiable("TH is numerically rank deficient".into()))?;
    let theta = normal.solve_vec(&weighted.tr_mul(z));
    Ok(WlsFit { theta, covariance_trace: normal.inverse().trace() })
}

/// Factor of `T D Tᵀ`, allowing for the conditioning `D` itself adds.
fn compressed_covariance(t: &SensingMatrix, d: &NoiseCovarianceDiag) -> Result<SpdFactor> {
    let mut scaled = t.entries().clone();
    for (mut col, &v) in scaled.column_iter_mut().zip(d.variances.iter()) {
        col *= v;
    }
    let mut c = scaled * t.entries().transpose();
    linalg::symmetrize(&mut c);
    // cond(TDTᵀ) <= cond(TTᵀ) · max(D)/min(D)
    let spread = d.variances.max() / d.variances.min();
    SpdFactor::new(c, linalg::MAX_CONDITION * spread)
}

/// Monte Carlo mean with its naive standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

impl MonteCarloEstimate {
    /// Summaries are accumulated in slice order so results do not depend
    /// on how the samples were produced.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return MonteCarloEstimate { mean: f64::NAN, std_error: f64::NAN, trials: 0 };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        MonteCarloEstimate { mean, std_error, trials: n }
    }
}

/// Monte Carlo estimate of `E[trace((HᵀD⁻¹H)⁻¹)]` over random outlier patterns.
pub fn mse_bound_no_compression(h: &DesignMatrix, spec: &NoiseSpec, trials: usize, seed: Seed) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let n = h.n_rows();
    let k = h.n_cols();
    let samples = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seeds = TrialSeeds::new(seed, n, k, trial, false);
            let mask = sample_noise(spec, n, seeds.noise).outlier_mask;
            let d = NoiseCovarianceDiag::from_mask(spec, &mask);
            no_compression_trace(h, &d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloEstimate::from_samples(&samples))
}

/// `trace((HᵀD⁻¹H)⁻¹)`.
pub fn no_compression_trace(h: &DesignMatrix, d: &NoiseCovarianceDiag) -> Result<f64> {
    Ok(wls_uncompressed_fit(&DVector::zeros(h.n_rows()), h, d)?.covariance_trace)
}

/// `trace((HᵀTᵀ(TDTᵀ)⁻¹TH)⁻¹)`.
pub fn oracle_trace(t: &SensingMatrix, h: &DesignMatrix, d: &NoiseCovarianceDiag) -> Result<f64> {
    Ok(wls_oracle_fit(&DVector::zeros(t.n_filters()), t, h, d)?.covariance_trace)
}

/// Monte Carlo estimate of `E[trace((HᵀTᵀ(TDTᵀ)⁻¹TH)⁻¹)]` with a fresh CMF
/// and outlier pattern per trial. `M = K` gives the pure matched filter.
pub fn mse_bound_oracle(
    h: &DesignMatrix,
    spec: &NoiseSpec,
    n_filters: usize,
    trials: usize,
    seed: Seed,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let n = h.n_rows();
    if n_filters < h.n_cols() || n_filters > n {
        return invalid(format!("M = {n_filters} outside [K, N]"));
    }
    let samples = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let seeds = TrialSeeds::new(seed, n, n_filters, trial, false);
            let mask = sample_noise(spec, n, seeds.noise).outlier_mask;
            let d = NoiseCovarianceDiag::from_mask(spec, &mask);
            let t = build_cmf(h, n_filters, seeds.sensing)?;
            oracle_trace(&t, h, &d)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MonteCarloEstimate::from_samples(&samples))
}

/// Indices with `|û_i| > σ₁`.
pub fn detect_outliers(u_hat: &DVector<f64>, sigma1: f64) -> Result<Vec<usize>> {
    if !(sigma1 > 0.0) {
        return invalid(format!("sigma1 {sigma1} must be positive"));
    }
    Ok(u_hat.iter().enumerate().filter(|(_, v)| v.abs() > sigma1).map(|(i, _)| i).collect())
}

/// Mean of `û_i²` over the detected support.
pub fn estimate_outlier_variance(u_hat: &DVector<f64>, indices: &[usize]) -> Result<f64> {
    if indices.is_empty() {
        return Err(CmfError::EmptySupport);
    }
    if indices.iter().any(|&i| i >= u_hat.len()) {
        return invalid("outlier index out of range");
    }
    Ok(indices.iter().map(|&i| u_hat[i] * u_hat[i]).sum::<f64>() / indices.len() as f64)
}

/// Outlier support, variance and `D̂` implied by a compressed Huber solution.
pub fn estimate_outliers(u_hat: &DVector<f64>, sigma1: f64) -> Result<OutlierEstimate> {
    let indices = detect_outliers(u_hat, sigma1)?;
    let sigma1_sq = sigma1 * sigma1;
    let mut variances = DVector::from_element(u_hat.len(), sigma1_sq);
    let sigma2_sq_hat = match estimate_outlier_variance(u_hat, &indices) {
        Ok(v) => {
            for &i in &indices {
                variances[i] = v;
            }
            Some(v)
        }
        Err(CmfError::EmptySupport) => None,
        Err(e) => return Err(e),
    };
    Ok(OutlierEstimate { indices, sigma2_sq_hat, d_hat: NoiseCovarianceDiag::new(variances)? })
}

/// Approximate WLS: the oracle compressed estimator with `D` replaced by
/// the covariance estimated from `û`.
pub fn awls(
    z: &DVector<f64>,
    t: &SensingMatrix,
    h: &DesignMatrix,
    ch: &CHSolution,
    sigma1: f64,
) -> Result<(DVector<f64>, OutlierEstimate)> {
    if ch.u_hat.len() != t.n_samples() {
        return invalid("solution does not match the sensing matrix");
    }
    let est = estimate_outliers(&ch.u_hat, sigma1)?;
    let theta = wls_oracle_compressed(z, t, h, &est.d_hat)?;
    Ok((theta, est))
}

/// `‖a - b‖²`.
pub fn squared_error(estimate: &DVector<f64>, truth: &DVector<f64>) -> f64 {
    (estimate - truth).norm_squared()
}
