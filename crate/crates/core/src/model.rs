//! Linear model `y = Hθ + n` with ε-contaminated noise.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{invalid, CmfError, Result};
use crate::seeds::{self, Seed};

/// Minimum accepted ratio of smallest to largest singular value.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Known N×K design matrix, tall and of full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    entries: DMatrix<f64>,
}

impl DesignMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (n, k) = entries.shape();
        if k == 0 {
            return invalid("design matrix needs at least one column");
        }
        if n < k + 1 {
            return invalid(format!("design matrix needs N >= K + 1, got N={n}, K={k}"));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return invalid("design matrix has non-finite entries");
        }
        let ratio = crate::linalg::singular_value_ratio(&entries);
        if ratio <= RANK_TOLERANCE {
            return Err(CmfError::SingularDesign { ratio });
        }
        if n < 5 * k {
            log::warn!("design matrix is not tall: N={n} < 5K={}", 5 * k);
        }
        Ok(DesignMatrix { entries })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn n_rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.entries.ncols()
    }
}

/// Design for a sum of real sinusoids with known frequencies.
///
/// Columns are `[cos(2π f_i n) ... | sin(2π f_i n) ...]` for `n = 0..N-1`,
/// so the coefficients are the in-phase and quadrature amplitudes.
pub fn build_sinusoid_design(frequencies: &[f64], n_samples: usize) -> Result<DesignMatrix> {
    if frequencies.is_empty() {
        return invalid("at least one frequency is required");
    }
    for (i, &f) in frequencies.iter().enumerate() {
        if !(f > 0.0 && f < 0.5) {
            return invalid(format!("frequency {f} must lie in (0, 0.5)"));
        }
        if frequencies[..i].contains(&f) {
            return invalid(format!("duplicate frequency {f}"));
        }
    }
    let n_freq = frequencies.len();
    if n_samples < 2 * n_freq + 1 {
        return invalid(format!("need N >= {} samples for {n_freq} frequencies", 2 * n_freq + 1));
    }
    let entries = DMatrix::from_fn(n_samples, 2 * n_freq, |n, col| {
        let (f, sine) = if col < n_freq { (frequencies[col], false) } else { (frequencies[col - n_freq], true) };
        let phase = 2.0 * PI * f * n as f64;
        if sine {
            phase.sin()
        } else {
            phase.cos()
        }
    });
    DesignMatrix::new(entries)
}

/// Distribution of the contaminating component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutlierDistribution {
    /// Zero-mean normal with the given variance.
    Gaussian { sigma2_sq: f64 },
    /// Zero-mean Laplace with the given variance (scale `σ₂/√2`).
    Laplace { sigma2_sq: f64 },
}

impl OutlierDistribution {
    pub fn variance(&self) -> f64 {
        match *self {
            OutlierDistribution::Gaussian { sigma2_sq } | OutlierDistribution::Laplace { sigma2_sq } => sigma2_sq,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            OutlierDistribution::Gaussian { sigma2_sq } => {
                sigma2_sq.sqrt() * rng.sample::<f64, _>(StandardNormal)
            }
            OutlierDistribution::Laplace { sigma2_sq } => {
                let scale = (sigma2_sq / 2.0).sqrt();
                let a: f64 = rng.sample(Exp1);
                let b: f64 = rng.sample(Exp1);
                scale * (a - b)
            }
        }
    }
}

/// ε-contaminated noise: `(1-ε) N(0, σ₁²) + ε G`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    epsilon: f64,
    sigma1_sq: f64,
    outlier: OutlierDistribution,
}

impl NoiseSpec {
    pub fn new(epsilon: f64, sigma1_sq: f64, outlier: OutlierDistribution) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return invalid(format!("contamination ratio {epsilon} outside [0, 1]"));
        }
        if !(sigma1_sq > 0.0 && sigma1_sq.is_finite()) {
            return invalid(format!("nominal variance {sigma1_sq} must be positive"));
        }
        let sigma2_sq = outlier.variance();
        if !(sigma2_sq > sigma1_sq && sigma2_sq.is_finite()) {
            return invalid(format!("outlier variance {sigma2_sq} must exceed nominal variance {sigma1_sq}"));
        }
        if sigma2_sq < 10.0 * sigma1_sq {
            log::warn!("outlier variance is less than 10x the nominal variance");
        }
        Ok(NoiseSpec { epsilon, sigma1_sq, outlier })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma2_sq(&self) -> f64 {
        self.outlier.variance()
    }

    pub fn outlier(&self) -> OutlierDistribution {
        self.outlier
    }

    /// Per-sample variances implied by an outlier mask.
    pub fn variances_for_mask(&self, mask: &[bool]) -> DVector<f64> {
        DVector::from_iterator(
            mask.len(),
            mask.iter().map(|&m| if m { self.sigma2_sq() } else { self.sigma1_sq }),
        )
    }
}

/// One draw of the noise vector together with which entries were outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub values: DVector<f64>,
    pub outlier_mask: Vec<bool>,
}

impl NoiseRealization {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn zeros(n: usize) -> Self {
        NoiseRealization { values: DVector::zeros(n), outlier_mask: vec![false; n] }
    }
}

/// Draw `n` independent samples of the contaminated noise.
pub fn sample_noise(spec: &NoiseSpec, n: usize, seed: Seed) -> NoiseRealization {
    let mut rng = seeds::rng(seed);
    let sigma1 = spec.sigma1_sq.sqrt();
    let mut values = DVector::zeros(n);
    let mut outlier_mask = vec![false; n];
    for i in 0..n {
        let is_outlier = rng.random::<f64>() < spec.epsilon;
        values[i] = if is_outlier {
            spec.outlier.sample(&mut rng)
        } else {
            sigma1 * rng.sample::<f64, _>(StandardNormal)
        };
        outlier_mask[i] = is_outlier;
    }
    NoiseRealization { values, outlier_mask }
}

/// A complete synthetic problem: design, truth, noise and observation.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub design: DesignMatrix,
    pub theta_true: DVector<f64>,
    pub noise: NoiseRealization,
    pub observation: DVector<f64>,
}

pub fn generate_observation(
    design: &DesignMatrix,
    theta: &DVector<f64>,
    noise: NoiseRealization,
) -> Result<ProblemInstance> {
    if theta.len() != design.n_cols() {
        return invalid(format!("theta has length {}, design has {} columns", theta.len(), design.n_cols()));
    }
    if noise.len() != design.n_rows() || noise.outlier_mask.len() != noise.len() {
        return invalid(format!("noise has length {}, design has {} rows", noise.len(), design.n_rows()));
    }
    let observation = design.entries() * theta + &noise.values;
    Ok(ProblemInstance { design: design.clone(), theta_true: theta.clone(), noise, observation })
}
