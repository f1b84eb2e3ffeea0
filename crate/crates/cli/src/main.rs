use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use magsac_cli::bench::{synthetic_scenes, variants};
use magsac_cli::report::write_outputs;
use magsac_cli::{dataset_scenes, exit_code, fit, run_sweep, BenchConfig, Result, Scene};
use magsac_core::io::load_correspondences;
use magsac_core::{Method, ProblemDef, ProblemKind};

#[derive(Parser)]
#[command(name = "magsac", version, about = "Robust model fitting and benchmark sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit one dataset and print the model and metrics.
    Fit {
        /// Correspondence file; `<path>.labels` is read when present.
        path: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep methods over a grid of synthetic scenes.
    BenchSynthetic {
        /// Noise levels, pixels (comma separated).
        #[arg(long, value_delimiter = ',')]
        noise: Vec<f64>,
        /// Outlier ratios (comma separated).
        #[arg(long, value_delimiter = ',')]
        outliers: Vec<f64>,
        /// Points per scene.
        #[arg(long)]
        points: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep methods over every labelled dataset in a directory.
    BenchFiles {
        dir: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    problem: Option<ProblemKind>,
    /// Methods (comma separated): ransac, msac, lo-ransac, lo-msac, magsac.
    #[arg(long = "method", value_delimiter = ',')]
    methods: Vec<Method>,
    /// Also run σ-consensus on the result of every baseline.
    #[arg(long)]
    post_sigma: bool,
    #[arg(long)]
    sigma_max: Option<f64>,
    #[arg(long)]
    partitions: Option<usize>,
    #[arg(long)]
    confidence: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    failure_threshold: Option<f64>,
    /// Output path; CSV goes to stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// File of `key=value` settings, overridden by flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, mut cfg: BenchConfig) -> Result<BenchConfig> {
        if let Some(path) = &self.config {
            cfg.apply_file(path)?;
        }
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if !self.methods.is_empty() {
            cfg.methods = self.methods.clone();
        }
        cfg.post_sigma |= self.post_sigma;
        if let Some(v) = self.sigma_max {
            cfg.solver.noise.sigma_max = v;
        }
        if let Some(v) = self.partitions {
            cfg.solver.noise.partitions = v;
        }
        if let Some(v) = self.confidence {
            cfg.solver.confidence = v;
        }
        if let Some(v) = self.seed {
            cfg.solver.seed = v;
        }
        if let Some(v) = self.runs {
            cfg.runs = v;
        }
        if let Some(v) = self.max_iterations {
            cfg.solver.max_iterations = v;
        }
        if let Some(v) = self.failure_threshold {
            cfg.failure_threshold = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn sweep(cfg: &BenchConfig, scenes: &[Scene], common: &Common) -> Result<i32> {
    let outcome = run_sweep(cfg, scenes);
    write_outputs(common.out.as_deref(), cfg, &variants(cfg), scenes, &outcome)?;
    for f in &outcome.failures {
        eprintln!("run failed: {} on {} run {}: {}", f.method, f.scene, f.run, f.message);
    }
    Ok(exit_code(&outcome))
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Fit { path, common } => {
            let base = BenchConfig {
                methods: vec![Method::Magsac],
                ..Default::default()
            };
            let cfg = common.resolve(base)?;
            let points = load_correspondences(&path)?;
            ProblemDef::new(cfg.problem).check_points(&points)?;
            let report = fit(&points, &cfg)?;
            println!("{report}");
            if let Some(out) = &common.out {
                std::fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
            }
            Ok(0)
        }
        Command::BenchSynthetic {
            noise,
            outliers,
            points,
            common,
        } => {
            let mut cfg = common.resolve(BenchConfig::default())?;
            if !noise.is_empty() {
                cfg.noise_levels = noise;
            }
            if !outliers.is_empty() {
                cfg.outlier_ratios = outliers;
            }
            if let Some(n) = points {
                cfg.points = n;
            }
            cfg.validate()?;
            sweep(&cfg, &synthetic_scenes(&cfg), &common)
        }
        Command::BenchFiles { dir, common } => {
            let cfg = common.resolve(BenchConfig::default())?;
            let scenes = dataset_scenes(&dir, &ProblemDef::new(cfg.problem))?;
            sweep(&cfg, &scenes, &common)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
