use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cmf::ch_solver::{precompute, solve_ch};
use cmf::estimators::awls;
use cmf::harness::{emit_results, sweep_bounds, sweep_compression, sweep_n, ExperimentConfig, MSECurve, OutputFormat, TrialContext};
use cmf::model::{generate_observation, sample_noise};
use cmf::seeds::TrialSeeds;
use cmf::sensing::{build_cmf, compress};
use cmf::CmfError;

#[derive(Parser)]
#[command(name = "cmf", version, about = "Compressed matched filter experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Fig2,
    Fig3,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo sweep and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "fig2")]
        mode: Mode,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
        /// Also write a gnuplot-ready .dat file next to the CSV.
        #[arg(long)]
        gnuplot: bool,
    },
    /// Compute the no-compression, matched-filter and oracle MSE bounds.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve a single instance and report the estimate.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Number of filters; defaults to the first entry of the compression grid.
        #[arg(long)]
        filters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Print the full solution as JSON.
        #[arg(long)]
        dump_solution: bool,
    },
}

fn exit_code(err: &CmfError) -> u8 {
    match err {
        CmfError::Config(_) | CmfError::InvalidArgument(_) => 2,
        CmfError::Io(_) | CmfError::Parse(_) => 4,
        _ => 3,
    }
}

fn load_config(path: &Path, trials: Option<usize>, seed: Option<u64>) -> cmf::Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| CmfError::Config(format!("{}: {e}", path.display())))?;
    let mut config: ExperimentConfig = serde_json::from_str(&text).map_err(|e| CmfError::Config(e.to_string()))?;
    if let Some(t) = trials {
        config.trials = t;
    }
    if let Some(s) = seed {
        config.master_seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> cmf::Result<T> + Send) -> cmf::Result<T> {
    match threads {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CmfError::Config(e.to_string()))?
            .install(f),
    }
}

fn write_curve(curve: &MSECurve, dir: &Path, stem: &str, gnuplot: bool) -> cmf::Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    emit_results(curve, &csv, OutputFormat::Csv)?;
    log::info!("wrote {}", csv.display());
    if gnuplot {
        emit_results(curve, &dir.join(format!("{stem}.dat")), OutputFormat::Gnuplot)?;
    }
    Ok(())
}

fn run(cli: Cli) -> cmf::Result<()> {
    match cli.command {
        Command::Run { config, out, mode, trials, seed, threads, gnuplot } => {
            let config = load_config(&config, trials, seed)?;
            match mode {
                Mode::Fig2 => {
                    let sweep = with_threads(threads, || sweep_compression(&config))?;
                    write_curve(&sweep.curve, &out, "fig2", gnuplot)
                }
                Mode::Fig3 => {
                    let sweep = with_threads(threads, || sweep_n(&config))?;
                    write_curve(&sweep.curve, &out, "fig3", gnuplot)
                }
            }
        }
        Command::Bounds { config, out, trials, seed, threads } => {
            let config = load_config(&config, trials, seed)?;
            let curve = with_threads(threads, || sweep_bounds(&config))?;
            match out {
                Some(dir) => write_curve(&curve, &dir, "bounds", false),
                None => {
                    print!("{}", curve.to_csv_string()?);
                    Ok(())
                }
            }
        }
        Command::Solve { config, filters, seed, dump_solution } => {
            let config = load_config(&config, None, seed)?;
            let n = config.n_samples;
            let m = match filters {
                Some(m) => m,
                None => config.m_values(n)?[0],
            };
            let ctx = TrialContext::new(&config, n)?;
            let seeds = TrialSeeds::new(config.master_seed, n, m, 0, config.freeze_sensing);
            let noise = sample_noise(&ctx.spec, n, seeds.noise);
            let problem = generate_observation(&ctx.design, &ctx.theta, noise)?;
            let t = build_cmf(&ctx.design, m, seeds.sensing)?;
            let z = compress(&t, &problem.observation)?;
            let ws = precompute(&t, &ctx.design)?;
            let ch = solve_ch(&z, &ws, ctx.huber_h, &ctx.options)?;
            let (awls_theta, outliers) = awls(&z, &t, &ctx.design, &ch, ctx.sigma1)?;
            if dump_solution {
                let dump = serde_json::json!({
                    "n_samples": n,
                    "n_filters": m,
                    "huber_h": ctx.huber_h,
                    "theta_hat": ch.theta_hat.as_slice(),
                    "theta_awls": awls_theta.as_slice(),
                    "u_hat": ch.u_hat.as_slice(),
                    "outlier_indices": outliers.indices,
                    "sigma2_sq_hat": outliers.sigma2_sq_hat,
                    "iterations": ch.iterations,
                    "converged": ch.converged,
                    "final_objective": ch.final_objective,
                });
                println!("{}", serde_json::to_string_pretty(&dump).expect("json"));
            } else {
                let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.6}")).collect::<Vec<_>>().join(" ");
                println!("N={n} M={m} h={:.6}", ctx.huber_h);
                println!("theta_hat: {}", fmt(ch.theta_hat.as_slice()));
                println!("theta_awls: {}", fmt(awls_theta.as_slice()));
                println!("outliers detected: {}", outliers.indices.len());
                println!("iterations: {} (converged: {})", ch.iterations, ch.converged);
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
