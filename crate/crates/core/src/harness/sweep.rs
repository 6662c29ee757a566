//! Compression-ratio and sample-size sweeps.

use rayon::prelude::*;

use crate::error::{CmfError, Result};
use crate::estimators::{mse_bound_no_compression, mse_bound_oracle, MonteCarloEstimate};
use crate::seeds::TrialSeeds;

use super::config::{filters_for_ratio, ExperimentConfig};
use super::curve::{CurvePoint, MSECurve, Series};
use super::trial::{run_trial, TrialContext, TrialOutcome};

pub const CH: &str = "CH";
pub const AWLS: &str = "AWLS";
pub const ORACLE: &str = "ORACLE";
pub const NO_COMPRESSION: &str = "NO_COMPRESSION";
pub const FULL_COMPRESSION: &str = "FULL_COMPRESSION";

/// Fraction of trials that may fail before a sweep point aborts the run.
pub const FAILURE_BUDGET: f64 = 0.01;

/// Successful outcomes at one sweep point, in trial order.
#[derive(Debug, Clone)]
pub struct PointOutcomes {
    pub n_samples: usize,
    pub n_filters: usize,
    pub outcomes: Vec<TrialOutcome>,
    pub dropped: usize,
}

impl PointOutcomes {
    pub fn estimate(&self, f: impl Fn(&TrialOutcome) -> f64) -> MonteCarloEstimate {
        let samples: Vec<f64> = self.outcomes.iter().map(f).collect();
        MonteCarloEstimate::from_samples(&samples)
    }

    fn point(&self, f: impl Fn(&TrialOutcome) -> f64) -> CurvePoint {
        CurvePoint::from_estimate(self.estimate(f), self.dropped)
    }
}

/// Run all trials at one `(N, M)` point. Trials run on the current rayon
/// pool; results are collected in trial order.
pub fn run_point(config: &ExperimentConfig, ctx: &TrialContext, n_filters: usize) -> Result<PointOutcomes> {
    let n = ctx.design.n_rows();
    let results: Vec<Result<TrialOutcome>> = (0..config.trials)
        .into_par_iter()
        .map(|trial| {
            let seeds = TrialSeeds::new(config.master_seed, n, n_filters, trial, config.freeze_sensing);
            run_trial(ctx, n_filters, seeds)
        })
        .collect();
    let mut outcomes = Vec::with_capacity(results.len());
    let mut dropped = 0;
    for (trial, r) in results.into_iter().enumerate() {
        match r {
            Ok(o) => outcomes.push(o),
            Err(e) => {
                log::warn!("N={n} M={n_filters} trial {trial} dropped: {e}");
                dropped += 1;
            }
        }
    }
    if dropped as f64 > FAILURE_BUDGET * config.trials as f64 || outcomes.is_empty() {
        return Err(CmfError::BudgetExceeded { dropped, trials: config.trials });
    }
    if dropped > 0 {
        log::info!("N={n} M={n_filters}: {dropped} of {} trials dropped", config.trials);
    }
    Ok(PointOutcomes { n_samples: n, n_filters, outcomes, dropped })
}

/// Compression sweep result with the raw per-point outcomes kept for diagnostics.
#[derive(Debug, Clone)]
pub struct CompressionSweep {
    pub curve: MSECurve,
    pub points: Vec<PointOutcomes>,
    pub no_compression: MonteCarloEstimate,
    pub full_compression: MonteCarloEstimate,
}

/// MSE against `M/N` for CH, AWLS and the oracle, plus the uncompressed
/// and matched-filter-only bounds as constant lines.
pub fn sweep_compression(config: &ExperimentConfig) -> Result<CompressionSweep> {
    config.validate()?;
    let n = config.n_samples;
    let ctx = TrialContext::new(config, n)?;
    let m_values = config.m_values(n)?;
    let k = ctx.design.n_cols();

    let no_compression = mse_bound_no_compression(&ctx.design, &ctx.spec, config.trials, config.master_seed)?;
    let full_compression = mse_bound_oracle(&ctx.design, &ctx.spec, k, config.trials, config.master_seed)?;

    let mut curve = MSECurve::new(config.master_seed);
    let names = [CH, AWLS, ORACLE, NO_COMPRESSION, FULL_COMPRESSION];
    curve.series = names.iter().map(|m| Series { method: (*m).to_owned(), points: Vec::new() }).collect();
    let mut points = Vec::with_capacity(m_values.len());
    for &m in &m_values {
        let po = run_point(config, &ctx, m)?;
        curve.sweep_axis.push(m as f64 / n as f64);
        let row = [
            po.point(|o| o.ch),
            po.point(|o| o.awls),
            po.point(|o| o.oracle_trace),
            CurvePoint::from_estimate(no_compression, 0),
            CurvePoint::from_estimate(full_compression, 0),
        ];
        for (s, p) in curve.series.iter_mut().zip(row) {
            s.points.push(p);
        }
        points.push(po);
    }
    Ok(CompressionSweep { curve, points, no_compression, full_compression })
}

/// Series label for the CH error at a fixed compression ratio.
pub fn ratio_label(ratio: f64) -> String {
    format!("{CH}@{ratio}")
}

#[derive(Debug, Clone)]
pub struct SampleSizeSweep {
    pub curve: MSECurve,
    pub points: Vec<PointOutcomes>,
}

/// CH error against `N` for each ratio in `fig3_ratios`.
pub fn sweep_n(config: &ExperimentConfig) -> Result<SampleSizeSweep> {
    config.validate()?;
    if config.n_grid.is_empty() || config.fig3_ratios.is_empty() {
        return Err(CmfError::Config("n_grid and fig3_ratios must be nonempty".into()));
    }
    let k = config.n_params();
    let mut curve = MSECurve::new(config.master_seed);
    curve.series = config
        .fig3_ratios
        .iter()
        .map(|&r| Series { method: ratio_label(r), points: Vec::new() })
        .collect();
    let mut points = Vec::new();
    for &n in &config.n_grid {
        let ctx = TrialContext::new(config, n)?;
        curve.sweep_axis.push(n as f64);
        for (i, &r) in config.fig3_ratios.iter().enumerate() {
            let m = filters_for_ratio(r, n, k)?;
            let po = run_point(config, &ctx, m)?;
            curve.series[i].points.push(po.point(|o| o.ch));
            points.push(po);
        }
    }
    Ok(SampleSizeSweep { curve, points })
}

/// Bounds only: no-compression, matched filter and the oracle at each `M`.
pub fn sweep_bounds(config: &ExperimentConfig) -> Result<MSECurve> {
    config.validate()?;
    let n = config.n_samples;
    let ctx = TrialContext::new(config, n)?;
    let k = ctx.design.n_cols();
    let none = mse_bound_no_compression(&ctx.design, &ctx.spec, config.trials, config.master_seed)?;
    let full = mse_bound_oracle(&ctx.design, &ctx.spec, k, config.trials, config.master_seed)?;
    let mut curve = MSECurve::new(config.master_seed);
    curve.series = [ORACLE, NO_COMPRESSION, FULL_COMPRESSION]
        .iter()
        .map(|m| Series { method: (*m).to_owned(), points: Vec::new() })
        .collect();
    for m in config.m_values(n)? {
        let oracle = mse_bound_oracle(&ctx.design, &ctx.spec, m, config.trials, config.master_seed)?;
        curve.sweep_axis.push(m as f64 / n as f64);
        for (s, est) in curve.series.iter_mut().zip([oracle, none, full]) {
            s.points.push(CurvePoint::from_estimate(est, 0));
        }
    }
    Ok(curve)
}
