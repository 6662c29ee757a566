//! MSE curves and their CSV / gnuplot serialization.
//!
//! CSV columns: `sweep_value, method, mse, std_error, trials, dropped_trials, seed`,
//! one row per (sweep point, method), floats with 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{CmfError, Result};
use crate::estimators::MonteCarloEstimate;
use crate::seeds::Seed;

pub const CSV_HEADER: [&str; 7] = ["sweep_value", "method", "mse", "std_error", "trials", "dropped_trials", "seed"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub mse: f64,
    pub std_error: f64,
    pub trials: usize,
    pub dropped_trials: usize,
}

impl CurvePoint {
    pub fn from_estimate(est: MonteCarloEstimate, dropped_trials: usize) -> Self {
        CurvePoint { mse: est.mean, std_error: est.std_error, trials: est.trials, dropped_trials }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub method: String,
    pub points: Vec<CurvePoint>,
}

/// Monte Carlo MSE per method along a sweep axis (`M/N` or `N`).
#[derive(Debug, Clone, PartialEq)]
pub struct MSECurve {
    pub sweep_axis: Vec<f64>,
    pub series: Vec<Series>,
    pub seed: Seed,
}

impl MSECurve {
    pub fn new(seed: Seed) -> Self {
        MSECurve { sweep_axis: Vec::new(), series: Vec::new(), seed }
    }

    pub fn series(&self, method: &str) -> Option<&Series> {
        self.series.iter().find(|s| s.method == method)
    }

    /// Point for `method` at sweep index `idx`.
    pub fn point(&self, method: &str, idx: usize) -> Option<&CurvePoint> {
        self.series(method).and_then(|s| s.points.get(idx))
    }

    pub fn index_of(&self, sweep_value: f64) -> Option<usize> {
        self.sweep_axis.iter().position(|&v| (v - sweep_value).abs() < 1e-9)
    }

    fn check_shape(&self) -> Result<()> {
        for s in &self.series {
            if s.points.len() != self.sweep_axis.len() {
                return Err(CmfError::InvalidArgument(format!(
                    "series {} has {} points for {} sweep values",
                    s.method,
                    s.points.len(),
                    self.sweep_axis.len()
                )));
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        self.check_shape()?;
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for (i, &x) in self.sweep_axis.iter().enumerate() {
            for s in &self.series {
                let p = &s.points[i];
                w.write_record([
                    fmt_f64(x),
                    s.method.clone(),
                    fmt_f64(p.mse),
                    fmt_f64(p.std_error),
                    p.trials.to_string(),
                    p.dropped_trials.to_string(),
                    self.seed.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| CmfError::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
        if header != CSV_HEADER {
            return Err(CmfError::Parse(format!("unexpected header {header:?}")));
        }
        let mut curve = MSECurve::new(0);
        for (row, record) in reader.records().enumerate() {
            let record = record?;
            let field = |i: usize| record.get(i).ok_or_else(|| CmfError::Parse(format!("row {row} too short")));
            let x = parse_f64(field(0)?)?;
            let method = field(1)?.to_owned();
            let point = CurvePoint {
                mse: parse_f64(field(2)?)?,
                std_error: parse_f64(field(3)?)?,
                trials: parse_int(field(4)?)?,
                dropped_trials: parse_int(field(5)?)?,
            };
            curve.seed = parse_int(field(6)?)?;
            if curve.sweep_axis.last().is_none_or(|&last| last.to_bits() != x.to_bits()) {
                curve.sweep_axis.push(x);
            }
            let idx = curve.sweep_axis.len() - 1;
            let series = match curve.series.iter_mut().position(|s| s.method == method) {
                Some(pos) => &mut curve.series[pos],
                None => {
                    curve.series.push(Series { method, points: Vec::new() });
                    curve.series.last_mut().unwrap()
                }
            };
            if series.points.len() != idx {
                return Err(CmfError::Parse(format!("row {row}: series {} out of order", series.method)));
            }
            series.points.push(point);
        }
        curve.check_shape().map_err(|e| CmfError::Parse(e.to_string()))?;
        Ok(curve)
    }

    /// Whitespace-separated table: sweep value then `mse std_error` per method.
    pub fn to_gnuplot_string(&self) -> Result<String> {
        self.check_shape()?;
        let mut out = String::from("# sweep_value");
        for s in &self.series {
            out.push_str(&format!(" {0}_mse {0}_std_error", s.method));
        }
        out.push('\n');
        for (i, &x) in self.sweep_axis.iter().enumerate() {
            out.push_str(&fmt_f64(x));
            for s in &self.series {
                out.push_str(&format!(" {} {}", fmt_f64(s.points[i].mse), fmt_f64(s.points[i].std_error)));
            }
            out.push('\n');
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Gnuplot,
}

/// Write a curve to `path`, replacing any existing file.
pub fn emit_results(curve: &MSECurve, path: &Path, format: OutputFormat) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => curve.to_csv_string()?,
        OutputFormat::Gnuplot => curve.to_gnuplot_string()?,
    };
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

pub fn read_results(path: &Path) -> Result<MSECurve> {
    MSECurve::from_csv_str(&fs::read_to_string(path)?)
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim().parse().map_err(|_| CmfError::Parse(format!("bad number {s:?}")))
}

fn parse_int<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.trim().parse().map_err(|_| CmfError::Parse(format!("bad integer {s:?}")))
}
