use std::process::Command;

use cmf::harness::sweep::{AWLS, CH, FULL_COMPRESSION, NO_COMPRESSION, ORACLE};
use cmf::harness::{
    emit_results, read_results, run_point, run_trial, sweep_compression, sweep_n, ExperimentConfig, MGrid,
    OutlierFamily, OutputFormat, TrialContext,
};
use cmf::seeds::TrialSeeds;

fn quick(n: usize, trials: usize) -> ExperimentConfig {
    ExperimentConfig { n_samples: n, trials, master_seed: 11, ..ExperimentConfig::default() }
}

fn gap_closure(config: &ExperimentConfig) -> f64 {
    let sweep = sweep_compression(config).unwrap();
    let ch = sweep.curve.point(CH, 0).unwrap().mse;
    let full = sweep.full_compression.mean;
    let none = sweep.no_compression.mean;
    (full - ch) / (full - none)
}

#[test]
fn trials_are_bitwise_reproducible() {
    let config = quick(150, 1);
    let ctx = TrialContext::new(&config, 150).unwrap();
    for trial in 0..5 {
        let seeds = TrialSeeds::new(3, 150, 40, trial, false);
        let a = run_trial(&ctx, 40, seeds).unwrap();
        let b = run_trial(&ctx, 40, seeds).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ch.to_bits(), b.ch.to_bits());
    }
}

#[test]
fn clean_data_reduces_every_method_to_least_squares() {
    let config = ExperimentConfig { epsilon: 0.0, ..quick(120, 30) };
    let ctx = TrialContext::new(&config, 120).unwrap();
    assert!(ctx.huber_h.is_infinite());
    let po = run_point(&config, &ctx, 30).unwrap();
    for o in &po.outcomes {
        for v in [o.ch, o.awls, o.oracle] {
            assert!((v - o.plain_wls).abs() <= 1e-6 * o.plain_wls, "{v} vs {}", o.plain_wls);
        }
        assert_eq!(o.detected_outliers, 0);
    }
}

#[test]
fn oracle_lower_bounds_the_reconstruction() {
    let config = ExperimentConfig { m_grid: MGrid::Ratios(vec![0.25]), ..quick(200, 200) };
    let sweep = sweep_compression(&config).unwrap();
    let ch = sweep.curve.point(CH, 0).unwrap();
    let oracle = sweep.curve.point(ORACLE, 0).unwrap();
    assert!(oracle.mse <= ch.mse, "{} > {}", oracle.mse, ch.mse);
    assert_eq!(ch.trials, 200);
}

#[test]
fn matched_filter_only_point_equals_full_compression() {
    let config = ExperimentConfig { m_grid: MGrid::Counts(vec![10]), ..quick(100, 40) };
    let sweep = sweep_compression(&config).unwrap();
    let oracle = sweep.curve.point(ORACLE, 0).unwrap().mse;
    let full = sweep.curve.point(FULL_COMPRESSION, 0).unwrap().mse;
    assert!((oracle - full).abs() <= 1e-10 * full, "{oracle} vs {full}");
}

#[test]
fn default_grid_is_finite_and_oracle_improves_with_filters() {
    let sweep = sweep_compression(&quick(200, 20)).unwrap();
    let curve = &sweep.curve;
    assert_eq!(curve.sweep_axis.len(), 8);
    for s in &curve.series {
        assert!(s.points.iter().all(|p| p.mse.is_finite() && p.std_error.is_finite()), "{}", s.method);
    }
    let oracle = &curve.series(ORACLE).unwrap().points;
    for w in oracle.windows(2) {
        assert!(w[1].mse <= w[0].mse * (1.0 + 1e-12), "{} then {}", w[0].mse, w[1].mse);
    }
    let none = curve.point(NO_COMPRESSION, 0).unwrap().mse;
    assert!((oracle.last().unwrap().mse - none).abs() <= 1e-8 * none);
}

#[test]
fn doubling_samples_halves_clean_error() {
    let base = ExperimentConfig { epsilon: 0.0, m_grid: MGrid::Ratios(vec![0.25]), ..quick(200, 200) };
    let small = sweep_compression(&base).unwrap();
    let large = sweep_compression(&ExperimentConfig { n_samples: 400, ..base }).unwrap();
    let trace_ratio = large.curve.point(ORACLE, 0).unwrap().mse / small.curve.point(ORACLE, 0).unwrap().mse;
    assert!((trace_ratio - 0.5).abs() < 0.01, "trace ratio {trace_ratio}");
    let ch_ratio = large.curve.point(CH, 0).unwrap().mse / small.curve.point(CH, 0).unwrap().mse;
    assert!((0.4..=0.6).contains(&ch_ratio), "CH ratio {ch_ratio}");
}

#[test]
fn laplace_outliers_close_a_similar_gap() {
    let base = ExperimentConfig { m_grid: MGrid::Ratios(vec![0.25]), ..quick(500, 200) };
    let gaussian = gap_closure(&base);
    let laplace = gap_closure(&ExperimentConfig { outlier_family: OutlierFamily::Laplace, ..base });
    assert!((gaussian - laplace).abs() <= 0.10, "gaussian {gaussian}, laplace {laplace}");
}

#[test]
fn csv_has_one_row_per_point_and_method_and_round_trips() {
    let config = ExperimentConfig { m_grid: MGrid::Ratios(vec![0.1, 0.5, 1.0]), ..quick(100, 8) };
    let curve = sweep_compression(&config).unwrap().curve;
    let text = curve.to_csv_string().unwrap();
    assert_eq!(text.lines().count(), 1 + 3 * 5);
    for method in [CH, AWLS, ORACLE, NO_COMPRESSION, FULL_COMPRESSION] {
        assert_eq!(text.lines().filter(|l| l.split(',').nth(1) == Some(method)).count(), 3);
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig2.csv");
    emit_results(&curve, &path, OutputFormat::Csv).unwrap();
    let back = read_results(&path).unwrap();
    assert_eq!(back, curve);
}

#[test]
fn sample_size_sweep_shape() {
    let config = ExperimentConfig { n_grid: vec![50, 100], fig3_ratios: vec![0.5, 1.0], ..quick(200, 5) };
    let sweep = sweep_n(&config).unwrap();
    assert_eq!(sweep.curve.sweep_axis, vec![50.0, 100.0]);
    let names: Vec<&str> = sweep.curve.series.iter().map(|s| s.method.as_str()).collect();
    assert_eq!(names, ["CH@0.5", "CH@1"]);
    assert!(sweep.curve.series.iter().all(|s| s.points.len() == 2));
}

fn cmf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cmf"))
}

#[test]
fn cli_reports_configuration_and_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let status = cmf().args(["run", "--config"]).arg(&missing).args(["--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"n_samples": 100, "bogus": 1}"#).unwrap();
    let status = cmf().args(["run", "--config"]).arg(&bad).args(["--out"]).arg(dir.path()).status().unwrap();
    assert_eq!(status.code(), Some(2));

    let good = dir.path().join("good.json");
    std::fs::write(&good, r#"{"n_samples": 60, "trials": 3, "m_grid": {"ratios": [0.5]}}"#).unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let status = cmf().args(["run", "--config"]).arg(&good).args(["--out"]).arg(&blocker).status().unwrap();
    assert_eq!(status.code(), Some(4));

    let out = dir.path().join("out");
    let status = cmf().args(["run", "--config"]).arg(&good).args(["--out"]).arg(&out).status().unwrap();
    assert!(status.success());
    assert_eq!(read_results(&out.join("fig2.csv")).unwrap().sweep_axis, vec![0.5]);
}

#[test]
fn cli_solve_dumps_json() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("c.json");
    std::fs::write(&config, r#"{"n_samples": 200}"#).unwrap();
    let output = cmf()
        .args(["solve", "--config"])
        .arg(&config)
        .args(["--filters", "60", "--dump-solution"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let v: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(v["theta_hat"].as_array().unwrap().len(), 10);
    assert_eq!(v["u_hat"].as_array().unwrap().len(), 200);
    assert_eq!(v["n_filters"], 60);
    assert_eq!(v["converged"], true);
}
