//! Experiment configuration (JSON).

use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::ch_solver::SolverOptions;
use crate::error::{CmfError, Result};
use crate::model::{build_sinusoid_design, NoiseSpec, OutlierDistribution};
use crate::seeds::Seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutlierFamily {
    #[default]
    Gaussian,
    Laplace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaPreset {
    Ones,
}

/// True parameter: `"ones"` or an explicit vector of length `K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    Preset(ThetaPreset),
    Values(Vec<f64>),
}

impl Default for ThetaSpec {
    fn default() -> Self {
        ThetaSpec::Preset(ThetaPreset::Ones)
    }
}

/// Compression levels, either as fractions of `N` or as filter counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MGrid {
    Ratios(Vec<f64>),
    Counts(Vec<usize>),
}

impl Default for MGrid {
    fn default() -> Self {
        MGrid::Ratios(vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.5, 0.75, 1.0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub rel_obj_tol: f64,
    pub u_change_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        SolverConfig { max_iters: d.max_iters, rel_obj_tol: d.rel_obj_tol, u_change_tol: d.u_change_tol }
    }
}

impl From<SolverConfig> for SolverOptions {
    fn from(c: SolverConfig) -> Self {
        SolverOptions { max_iters: c.max_iters, rel_obj_tol: c.rel_obj_tol, u_change_tol: c.u_change_tol }
    }
}

/// Full description of a Monte Carlo study. Defaults reproduce the
/// five-tone sinusoid experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub frequencies: Vec<f64>,
    pub n_samples: usize,
    pub epsilon: f64,
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub outlier_family: OutlierFamily,
    pub theta_true: ThetaSpec,
    pub m_grid: MGrid,
    /// Sample counts swept in `fig3` mode.
    pub n_grid: Vec<usize>,
    /// Compression ratios `M/N` held fixed in `fig3` mode.
    pub fig3_ratios: Vec<f64>,
    pub trials: usize,
    pub master_seed: Seed,
    pub solver: SolverConfig,
    /// Reuse one sensing matrix per compression level instead of redrawing per trial.
    pub freeze_sensing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            frequencies: vec![0.1, 0.2, 0.3, 0.35, 0.4],
            n_samples: 500,
            epsilon: 0.01,
            sigma1_sq: 1.0,
            sigma2_sq: 500.0,
            outlier_family: OutlierFamily::Gaussian,
            theta_true: ThetaSpec::default(),
            m_grid: MGrid::default(),
            n_grid: vec![50, 100, 200, 400, 600, 800, 1000],
            fig3_ratios: vec![0.25, 0.5, 1.0],
            trials: 500,
            master_seed: 0,
            solver: SolverConfig::default(),
            freeze_sensing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| CmfError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn n_params(&self) -> usize {
        2 * self.frequencies.len()
    }

    pub fn noise_spec(&self) -> Result<NoiseSpec> {
        let outlier = match self.outlier_family {
            OutlierFamily::Gaussian => OutlierDistribution::Gaussian { sigma2_sq: self.sigma2_sq },
            OutlierFamily::Laplace => OutlierDistribution::Laplace { sigma2_sq: self.sigma2_sq },
        };
        NoiseSpec::new(self.epsilon, self.sigma1_sq, outlier)
    }

    pub fn theta(&self) -> DVector<f64> {
        match &self.theta_true {
            ThetaSpec::Preset(ThetaPreset::Ones) => DVector::from_element(self.n_params(), 1.0),
            ThetaSpec::Values(v) => DVector::from_column_slice(v),
        }
    }

    pub fn solver_options(&self) -> SolverOptions {
        self.solver.into()
    }

    /// Filter counts of the compression sweep for `n` samples.
    pub fn m_values(&self, n: usize) -> Result<Vec<usize>> {
        match &self.m_grid {
            MGrid::Ratios(r) => r.iter().map(|&r| filters_for_ratio(r, n, self.n_params())).collect(),
            MGrid::Counts(c) => c
                .iter()
                .map(|&m| check_filters(m, n, self.n_params()))
                .collect(),
        }
    }

    /// Check every field; errors are reported as config errors.
    pub fn validate(&self) -> Result<()> {
        let cfg = |e: CmfError| match e {
            CmfError::Config(_) => e,
            other => CmfError::Config(other.to_string()),
        };
        build_sinusoid_design(&self.frequencies, self.n_samples).map_err(cfg)?;
        self.noise_spec().map_err(cfg)?;
        if self.trials == 0 {
            return Err(CmfError::Config("trials must be at least 1".into()));
        }
        if let ThetaSpec::Values(v) = &self.theta_true {
            if v.len() != self.n_params() || v.iter().any(|x| !x.is_finite()) {
                return Err(CmfError::Config(format!("theta_true must hold {} finite values", self.n_params())));
            }
        }
        self.solver_options().validate().map_err(cfg)?;
        self.m_values(self.n_samples).map_err(cfg)?;
        for &n in &self.n_grid {
            build_sinusoid_design(&self.frequencies, n).map_err(cfg)?;
            for &r in &self.fig3_ratios {
                filters_for_ratio(r, n, self.n_params()).map_err(cfg)?;
            }
        }
        Ok(())
    }
}

fn check_filters(m: usize, n: usize, k: usize) -> Result<usize> {
    if m < k || m > n {
        return Err(CmfError::Config(format!("M = {m} outside [K, N] = [{k}, {n}]")));
    }
    Ok(m)
}

/// `M = round(ratio·N)`, required to lie in `[K, N]`.
pub fn filters_for_ratio(ratio: f64, n: usize, k: usize) -> Result<usize> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(CmfError::Config(format!("compression ratio {ratio} outside (0, 1]")));
    }
    check_filters((ratio * n as f64).round() as usize, n, k)
}
