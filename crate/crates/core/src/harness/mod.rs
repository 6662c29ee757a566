//! Monte Carlo experiment driver.

pub mod config;
pub mod curve;
pub mod sweep;
pub mod trial;

pub use config::{ExperimentConfig, MGrid, OutlierFamily, SolverConfig, ThetaSpec};
pub use curve::{emit_results, read_results, CurvePoint, MSECurve, OutputFormat, Series};
pub use sweep::{run_point, sweep_bounds, sweep_compression, sweep_n, CompressionSweep, PointOutcomes, SampleSizeSweep};
pub use trial::{run_trial, TrialContext, TrialOutcome};
