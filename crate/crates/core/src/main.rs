use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sharplab::data::{BatchSampler, SamplingMode};
use sharplab::harness::{
    build_model, convergence_summary, landscape_grid, load_curve, prepare_data, run_experiment,
    sweep, ExperimentConfig, SweepParam,
};
use sharplab::lets::{DirectionSource, MetricKind};
use sharplab::model::read_checkpoint;
use sharplab::oracle::{hessian_diag_error, verify_hypergradient, OneStepProblem, OracleSettings};
use sharplab::rng::{Stream, Substream};
use sharplab::Result;

#[derive(Parser)]
#[command(
    name = "sharplab",
    version,
    about = "Sharpness-aware training with a learned perturbation radius"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one configuration and write metrics, checkpoint and summary.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Repeat a configuration over values of one parameter.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// rho0, metric-kind or noise-rate
        #[arg(long)]
        param: SweepParam,
        /// Comma-separated values; defaults to the parameter's standard grid.
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the loss on a random 2-D slice around a checkpoint.
    Landscape {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        radius: f64,
        #[arg(long)]
        resolution: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check the radius hypergradient against finite differences.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Minimum gradient norm per horizon across finished runs.
    Convergence {
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
    },
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    ExperimentConfig::parse(&fs::read_to_string(path)?)
}

fn with_out(cfg: ExperimentConfig, out: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match out {
        Some(dir) => cfg.with("output.dir", dir.display().to_string()),
        None => Ok(cfg),
    }
}

fn train(config: &Path, seed: Option<u64>, out: Option<&PathBuf>) -> Result<()> {
    let mut cfg = with_out(load_config(config)?, out)?;
    if let Some(s) = seed {
        cfg = cfg.with("train.seed", s.to_string())?;
    }
    let run = run_experiment(&cfg)?;
    let s = &run.summary;
    println!(
        "{} seed {}: {} steps, train loss {:.6} -> {:.6}, test loss {:.6}, rho {:.6}",
        s.variant,
        s.seed,
        s.steps,
        s.initial_train_loss,
        s.final_train_loss,
        s.final_test_loss,
        s.final_rho
    );
    if let Some(acc) = s.final_test_acc {
        println!("test accuracy {acc:.4}");
    }
    if let Some(dir) = &cfg.output_dir {
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn run_sweep(
    config: &Path,
    param: SweepParam,
    values: Vec<String>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let cfg = with_out(load_config(config)?, out)?;
    let values = if values.is_empty() {
        param.default_values()
    } else {
        values
    };
    let table = sweep(&cfg, param, &values)?;
    print!("{table}");
    if let Some(dir) = &cfg.output_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("sweep-{param}.csv")), table.to_csv())?;
    }
    Ok(())
}

fn landscape(
    checkpoint: &Path,
    config: &Path,
    radius: f64,
    resolution: usize,
    seed: Option<u64>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let data = prepare_data(&cfg)?;
    let model = build_model(&cfg.model, data.train.dim(), data.train.classes())?;
    let (theta, _) = read_checkpoint(checkpoint)?;
    let grid = landscape_grid(
        model.as_ref(),
        &theta,
        &data.train.full_batch(),
        radius,
        resolution,
        seed.unwrap_or(cfg.train.seed),
    )?;
    let dir = out
        .cloned()
        .or_else(|| checkpoint.parent().map(Path::to_path_buf))
        .unwrap_or_else(|| PathBuf::from("."));
    grid.write(&dir, "landscape")?;
    println!(
        "{0}x{0} grid, radius {1}, center loss {2:.6}; wrote {3}",
        resolution,
        radius,
        grid.center_loss,
        dir.join("landscape.csv").display()
    );
    Ok(())
}

fn gradcheck(config: &Path) -> Result<bool> {
    let cfg = load_config(config)?;
    let data = prepare_data(&cfg)?;
    let model = build_model(&cfg.model, data.train.dim(), data.train.classes())?;
    let seed = cfg.train.seed;
    let theta = model.init_params(&mut Stream::substream(seed, Substream::Init));
    let bs = cfg.train.batch_size;
    let mut tr = BatchSampler::new(
        data.train.len(),
        bs,
        SamplingMode::ShuffleEpoch,
        Stream::substream(seed, Substream::TrainSampling),
    )?;
    let mut vl = BatchSampler::new(
        data.val.len(),
        bs,
        SamplingMode::ShuffleEpoch,
        Stream::substream(seed, Substream::ValSampling),
    )?;
    let train = tr.next_batch(&data.train);
    let val = vl.next_batch(&data.val);
    let problem = OneStepProblem {
        model: model.as_ref(),
        theta: &theta,
        train: &train,
        val: &val,
        eta: cfg.optimizer.lr,
    };
    let metric = cfg
        .lets
        .as_ref()
        .map_or(MetricKind::SquaredGap, |l| l.metric);
    let rho = if cfg.optimizer.rho > 0.0 {
        cfg.optimizer.rho
    } else {
        0.05
    };
    let mut worst: f64 = 0.0;
    for direction in [DirectionSource::PostStep, DirectionSource::PreStep] {
        let settings = OracleSettings {
            metric,
            variant: cfg.sharpness_variant(),
            direction,
            rho_step: (rho / 10.0).min(sharplab::oracle::DEFAULT_RHO_STEP),
            ..OracleSettings::default()
        };
        let label = format!(
            "{} {:?} d={}",
            cfg.optimizer.variant,
            direction,
            model.dim()
        );
        let report = verify_hypergradient(problem, rho, &settings, label)?;
        println!("{report}");
        worst = worst.max(report.rel_err_exact);
    }
    let diag = hessian_diag_error(model.as_ref(), &theta, rho, &train)?;
    println!("diagonal Hessian approximation relative error: {diag:.4}");
    let passed = worst <= 1e-3;
    println!(
        "gradcheck {} (worst exact-mode relative error {worst:.3e}, tolerance 1e-3)",
        if passed { "passed" } else { "FAILED" }
    );
    Ok(passed)
}

fn convergence(runs: &[PathBuf]) -> Result<()> {
    let curves = runs
        .iter()
        .map(|d| load_curve(d))
        .collect::<Result<Vec<_>>>()?;
    println!("{}", convergence_summary(&curves)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train { config, seed, out } => train(&config, seed, out.as_ref()),
        Command::Sweep {
            config,
            param,
            values,
            out,
        } => run_sweep(&config, param, values, out.as_ref()),
        Command::Landscape {
            checkpoint,
            config,
            radius,
            resolution,
            seed,
            out,
        } => landscape(&checkpoint, &config, radius, resolution, seed, out.as_ref()),
        Command::Gradcheck { config } => match gradcheck(&config) {
            Ok(false) => return ExitCode::FAILURE,
            other => other.map(|_| ()),
        },
        Command::Convergence { runs } => convergence(&runs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
