use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use zne_core::harness::{self, ExperimentData, ExperimentReport};
use zne_core::noise::NoiseProfile;
use zne_core::{Benchmark, ExperimentConfig, FilterKind, Method, Parallelism};

/// Noise-adaptive zero-noise extrapolation on a simulated noisy device.
#[derive(Parser)]
#[command(name = "zne", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate an experiment and write runs.json, report.csv and samples.csv.
    Run(RunArgs),
    /// Repeat an experiment over a grid of xi values and write sweep.csv.
    SweepXi {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated xi values.
        #[arg(long, value_delimiter = ',', required = true)]
        grid: Vec<f64>,
    },
    /// Re-filter and re-fit a saved runs.json without simulating.
    Report {
        /// Path to runs.json.
        runs: PathBuf,
        /// Restrict to these methods (must have been simulated).
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long, value_delimiter = ',')]
        filters: Option<Vec<FilterKind>>,
        /// Override the significance level of the exponential-curvature test.
        #[arg(long)]
        curvature_alpha: Option<f64>,
        /// Override the largest accepted decay b·x_min of an exponential fit.
        #[arg(long)]
        max_initial_decay: Option<f64>,
        /// Output directory; defaults to the directory of runs.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value = "grover")]
    benchmark: Benchmark,
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<Method>>,
    #[arg(long, value_delimiter = ',')]
    filters: Option<Vec<FilterKind>>,
    #[arg(long, default_value_t = 50)]
    runs: usize,
    #[arg(long, default_value_t = 625)]
    shots: u64,
    /// Shots per circuit + inverse error-strength measurement.
    #[arg(long, default_value_t = 10_000)]
    eps_shots: u64,
    #[arg(long, default_value_t = 16)]
    twirls: usize,
    #[arg(long, default_value_t = zne_core::scaling::DEFAULT_XI)]
    xi: f64,
    #[arg(long, default_value_t = zne_core::scaling::DEFAULT_K)]
    k: usize,
    /// JSON noise profile; the shipped calibration with default drift otherwise.
    #[arg(long)]
    noise_profile: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Keep λ_max = ξ/ε₀ even when fewer than k realizable factors remain.
    #[arg(long)]
    no_clamp: bool,
    /// Significance level of the exponential-curvature test.
    #[arg(long, default_value_t = 0.01)]
    curvature_alpha: f64,
    /// Run on the calling thread only.
    #[arg(long)]
    sequential: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

impl RunArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let profile = match &self.noise_profile {
            Some(p) => NoiseProfile::load(p).with_context(|| format!("loading noise profile {}", p.display()))?,
            None => NoiseProfile::default(),
        };
        let bench = self.benchmark.build();
        let noise = profile.build(&bench.circuit, &bench.layout, self.seed)?;
        let mut cfg = ExperimentConfig::new(self.benchmark, noise, self.seed);
        cfg.runs = self.runs;
        cfg.shots = self.shots;
        cfg.eps_shots = self.eps_shots;
        cfg.twirls = self.twirls;
        cfg.xi = self.xi;
        cfg.k = self.k;
        cfg.clamp_lambda_max = !self.no_clamp;
        cfg.fit.curvature_alpha = Some(self.curvature_alpha);
        if let Some(m) = &self.methods {
            cfg.methods = m.clone();
        }
        if let Some(f) = &self.filters {
            cfg.filters = f.clone();
        }
        if self.sequential {
            cfg.parallelism = Parallelism::Sequential;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_report(report: &ExperimentReport) {
    println!(
        "{} (ideal {}), {} run(s) completed, {} aborted",
        report.benchmark,
        report.ideal,
        report.runs_completed,
        report.aborted.len()
    );
    println!("{:<14} {:<9} {:>10} {:>10} {:>6} {:>8}", "method", "filter", "rmse", "reduct_%", "runs", "samples");
    let fmt = |v: Option<f64>, p: usize| v.map_or("-".to_string(), |x| format!("{x:.p$}"));
    for r in &report.rows {
        println!(
            "{:<14} {:<9} {:>10} {:>10} {:>6} {:>8}",
            r.method.name(),
            r.filter.name(),
            fmt(r.rmse, 5),
            fmt(r.reduction_pct, 1),
            r.retained_runs,
            r.retained_samples
        );
    }
}

fn restrict(data: &mut ExperimentData, methods: Option<Vec<Method>>, filters: Option<Vec<FilterKind>>) -> Result<()> {
    if let Some(m) = methods {
        if let Some(missing) = m.iter().find(|x| !data.config.methods.contains(x)) {
            anyhow::bail!("method {missing} was not simulated in this runs.json");
        }
        data.config.methods = m;
    }
    if let Some(f) = filters {
        data.config.filters = f;
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => {
            let cfg = args.config()?;
            let exp = harness::run_experiment(&cfg)?;
            harness::write_outputs(&args.out, &exp.data, &exp.report)?;
            print_report(&exp.report);
            println!("wrote {}", args.out.display());
        }
        Command::SweepXi { run, grid } => {
            let cfg = run.config()?;
            let points = harness::sweep_xi(&cfg, &grid)?;
            std::fs::create_dir_all(&run.out)?;
            let path = run.out.join("sweep.csv");
            harness::write_sweep_csv(&path, &points)?;
            for p in &points {
                let rmse = p.rmse.map_or("-".into(), |v| format!("{v:.5}"));
                println!("xi={:<8} {:<14} {:<9} rmse={rmse} lambda_max={:.3}", p.xi, p.method.name(), p.filter.name(), p.mean_lambda_max);
            }
            println!("wrote {}", path.display());
        }
        Command::Report { runs, methods, filters, curvature_alpha, max_initial_decay, out } => {
            let mut data = harness::read_runs_json(&runs)?;
            restrict(&mut data, methods, filters)?;
            if let Some(a) = curvature_alpha {
                data.config.fit.curvature_alpha = Some(a);
            }
            if let Some(d) = max_initial_decay {
                data.config.fit.max_initial_decay = Some(d);
            }
            let report = harness::analyze(&data)?;
            let dir = out.unwrap_or_else(|| runs.parent().unwrap_or(Path::new(".")).to_path_buf());
            std::fs::create_dir_all(&dir)?;
            harness::write_report_outputs(&dir, &report)?;
            print_report(&report);
        }
    }
    Ok(())
}
