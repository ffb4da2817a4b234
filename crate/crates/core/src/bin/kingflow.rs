use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use kingflow::harness::datasets::{
    gen_four_blobs, gen_ggm_samples, gen_scurve, gen_symmetric_bimodal, rotate_dataset, GgmSpec,
};
use kingflow::harness::io::{read_points_file, write_points};
use kingflow::harness::{run_scenario, RunConfig};
use kingflow::{mmd, Error, ParticleSet, Result};

#[derive(Parser)]
#[command(name = "kingflow", version, about = "Kernelized natural-gradient particle flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario described by a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset as CSV.
    Gen {
        dataset: Dataset,
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mode offset (bimodal), blob radius (blobs).
        #[arg(long, default_value_t = 2.0)]
        offset: f64,
        /// Noise sd (scurve), blob sd (blobs).
        #[arg(long, default_value_t = 0.3)]
        noise: f64,
        /// Rotation in degrees applied to 2-d output, clockwise positive.
        #[arg(long)]
        rotate: Option<f64>,
        #[arg(long, default_value_t = 0.05)]
        edge_prob: f64,
        #[arg(long, default_value_t = 0.3)]
        edge_value: f64,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MMD between two CSV point clouds (median-heuristic bandwidth by default).
    EvalMmd {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        bandwidth: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Dataset {
    /// 0.5 N(-offset, I) + 0.5 N(offset, I).
    Bimodal,
    /// Standard normal.
    Normal,
    /// 3-d S-curve.
    Scurve,
    /// Gaussian graphical model on a random graph.
    Ggm,
    /// Four 2-d blobs on the axes.
    Blobs,
}

fn generate(args: &Command) -> Result<ParticleSet> {
    let Command::Gen {
        dataset,
        n,
        dim,
        seed,
        offset,
        noise,
        rotate,
        edge_prob,
        edge_value,
        ..
    } = args
    else {
        unreachable!()
    };
    let points = match dataset {
        Dataset::Bimodal => gen_symmetric_bimodal(*dim, *offset, *n, *seed)?,
        Dataset::Normal => gen_symmetric_bimodal(*dim, 0.0, *n, *seed)?,
        Dataset::Scurve => gen_scurve(*n, *noise, *seed)?,
        Dataset::Ggm => gen_ggm_samples(&GgmSpec::random(*dim, *edge_prob, *edge_value, *seed)?, *n, *seed)?,
        Dataset::Blobs => gen_four_blobs(*n, *offset, *noise, *seed)?,
    };
    match rotate {
        Some(deg) => rotate_dataset(&points, *deg),
        None => Ok(points),
    }
}

fn execute(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run { config, seed, out } => {
            let mut cfg = RunConfig::from_path(config)?;
            if let Some(s) = seed {
                cfg.seed = *s;
            }
            if let Some(o) = out {
                cfg.output_dir = Some(o.clone());
            }
            if cfg.output_dir.is_none() {
                cfg.output_dir = Some(PathBuf::from(format!("runs/{}-seed{}", cfg.scenario.name(), cfg.seed)));
            }
            let report = run_scenario(&cfg)?;
            println!("{}", serde_json::to_string_pretty(&report.summary)?);
            if let Some(dir) = &report.output_dir {
                eprintln!("wrote {}", dir.display());
            }
        }
        gen @ Command::Gen { out, .. } => {
            let points = generate(gen)?;
            match out {
                Some(path) => write_points(&points, std::fs::File::create(path)?)?,
                None => {
                    let stdout = std::io::stdout();
                    let mut lock = stdout.lock();
                    write_points(&points, &mut lock)?;
                    lock.flush()?;
                }
            }
        }
        Command::EvalMmd { a, b, bandwidth } => {
            let (a, b) = (read_points_file(a)?, read_points_file(b)?);
            let m = mmd(&a, &b, *bandwidth)?;
            println!("{}", serde_json::to_string(&m)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = match &e {
                Error::Config(_) | Error::Io(_) | Error::Json(_) | Error::Csv(_) => "config",
                Error::InvalidInput(_) | Error::DimensionMismatch { .. } => "input",
                _ => "numerical",
            };
            eprintln!("error ({kind}): {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
