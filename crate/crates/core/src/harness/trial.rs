//! One Monte Carlo draw of the full compress-and-reconstruct pipeline.

use nalgebra::DVector;

use crate::ch_solver::{precompute, solve_ch, SolverOptions};
use crate::error::Result;
use crate::estimators::{awls, squared_error, wls_oracle_fit, wls_uncompressed, NoiseCovarianceDiag};
use crate::huber::solve_huber_threshold;
use crate::model::{build_sinusoid_design, generate_observation, sample_noise, DesignMatrix, NoiseSpec};
use crate::seeds::TrialSeeds;
use crate::sensing::{build_cmf, compress};

use super::config::ExperimentConfig;

/// Everything a trial needs that does not change between trials at a given `N`.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub design: DesignMatrix,
    pub spec: NoiseSpec,
    pub theta: DVector<f64>,
    /// Huber threshold; infinite when there is no contamination.
    pub huber_h: f64,
    pub sigma1: f64,
    pub options: SolverOptions,
}

impl TrialContext {
    pub fn new(config: &ExperimentConfig, n_samples: usize) -> Result<Self> {
        let design = build_sinusoid_design(&config.frequencies, n_samples)?;
        let spec = config.noise_spec()?;
        let sigma1 = config.sigma1_sq.sqrt();
        let huber_h = if spec.epsilon() == 0.0 {
            f64::INFINITY
        } else {
            solve_huber_threshold(spec.epsilon(), sigma1)?.h
        };
        Ok(TrialContext {
            design,
            spec,
            theta: config.theta(),
            huber_h,
            sigma1,
            options: config.solver_options(),
        })
    }
}

/// Per-method squared errors `‖θ̂ - θ‖²` and solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub ch: f64,
    pub awls: f64,
    /// Empirical error of the compressed WLS that knows the outlier mask.
    pub oracle: f64,
    /// Ordinary least squares on the uncompressed data.
    pub plain_wls: f64,
    /// Conditional MSE of the oracle estimator given this trial's `T` and `D`.
    pub oracle_trace: f64,
    pub ch_iterations: usize,
    pub ch_converged: bool,
    pub ch_rejected_steps: usize,
    /// Largest increase between consecutive objective values (≤ 0 when monotone).
    pub max_objective_increase: f64,
    pub detected_outliers: usize,
}

pub fn run_trial(ctx: &TrialContext, n_filters: usize, seeds: TrialSeeds) -> Result<TrialOutcome> {
    let n = ctx.design.n_rows();
    let noise = sample_noise(&ctx.spec, n, seeds.noise);
    let true_d = NoiseCovarianceDiag::from_mask(&ctx.spec, &noise.outlier_mask);
    let problem = generate_observation(&ctx.design, &ctx.theta, noise)?;

    let t = build_cmf(&ctx.design, n_filters, seeds.sensing)?;
    let z = compress(&t, &problem.observation)?;

    let ws = precompute(&t, &ctx.design)?;
    let ch = solve_ch(&z, &ws, ctx.huber_h, &ctx.options)?;
    let (awls_theta, outliers) = awls(&z, &t, &ctx.design, &ch, ctx.sigma1)?;
    let oracle = wls_oracle_fit(&z, &t, &ctx.design, &true_d)?;
    let nominal = NoiseCovarianceDiag::uniform(n, ctx.spec.sigma1_sq())?;
    let plain = wls_uncompressed(&problem.observation, &ctx.design, &nominal)?;

    let max_objective_increase = ch
        .objective_trace
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(TrialOutcome {
        ch: squared_error(&ch.theta_hat, &ctx.theta),
        awls: squared_error(&awls_theta, &ctx.theta),
        oracle: squared_error(&oracle.theta, &ctx.theta),
        plain_wls: squared_error(&plain, &ctx.theta),
        oracle_trace: oracle.covariance_trace,
        ch_iterations: ch.iterations,
        ch_converged: ch.converged,
        ch_rejected_steps: ch.rejected_steps,
        max_objective_increase,
        detected_outliers: outliers.indices.len(),
    })
}
