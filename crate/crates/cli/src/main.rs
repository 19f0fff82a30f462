mod spec_file;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use repcount::bench::{
    evaluate, load_sequences, manifest_text, speed_experiment, speed_table, Annotation, EstimatorChoice, Manifest,
    Split,
};
use repcount::io::{read_series, write_series_binary, write_series_text};
use repcount::{
    generate, run_pipeline_with, CorrelationEstimator, DoubleCycleRegressor, Error, Execution, PipelineConfig,
    ReplayEstimator, ReplayTable,
};
use spec_file::SeriesFormat;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_ESTIMATION: u8 = 3;

/// Repetition counting for multi-channel feature time series.
#[derive(Parser, Debug)]
#[command(name = "repcount", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic dataset from a spec file.
    Synth { spec: PathBuf, outdir: PathBuf },
    /// Count the repetitions in one series and print the count.
    Count {
        series: PathBuf,
        /// Replay double-cycles from a `position,tp,tn` table instead of estimating them.
        #[arg(long)]
        replay: Option<PathBuf>,
        /// Write the per-round refinement trace as CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate every sequence of a manifest and emit the report.
    Eval {
        manifest: PathBuf,
        #[command(flatten)]
        batch: BatchArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate a manifest at several speed-up factors.
    Speed {
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [1usize, 2, 4])]
        factors: Vec<usize>,
        #[command(flatten)]
        batch: BatchArgs,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

#[derive(Args, Debug)]
struct BatchArgs {
    /// `correlation` or `oracle` (replays each sequence's own marks).
    #[arg(long, default_value = "correlation")]
    estimator: String,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Flat key=value pipeline configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one configuration key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Number of coarse-to-fine stages.
    #[arg(long)]
    stages: Option<usize>,
    /// EMA decay.
    #[arg(long)]
    beta: Option<f64>,
    /// Run on one thread.
    #[arg(long)]
    serial: bool,
}

impl PipelineArgs {
    fn config(&self) -> Result<PipelineConfig, Failure> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::load(path)?,
            None => PipelineConfig::default(),
        };
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("--set expects KEY=VALUE, got {item:?}")))?;
            cfg.set(k, v)?;
        }
        if let Some(k) = self.stages {
            cfg.stages = k;
            if cfg.refine_schedule.len() != k {
                // keep the default schedule's tail of single rounds
                cfg.refine_schedule.resize(k, 1);
            }
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn execution(&self) -> Execution {
        if self.serial {
            Execution::Serial
        } else {
            Execution::Parallel
        }
    }
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Estimation(_) => EXIT_ESTIMATION,
            Error::Config(_) => EXIT_USAGE,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure {
            code: EXIT_DATA,
            message: format!("{}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn synth(spec: &Path, outdir: &Path) -> Result<(), Failure> {
    let dataset = spec_file::load(spec)?;
    let io_err = |p: &Path, e: std::io::Error| Failure {
        code: EXIT_DATA,
        message: format!("{}: {e}", p.display()),
    };
    fs::create_dir_all(outdir).map_err(|e| io_err(outdir, e))?;
    let mut rows = Vec::new();
    for s in &dataset.sequences {
        let (series, gt) = generate(s)?;
        let id = s.id();
        let series_name = match dataset.format {
            SeriesFormat::Text => {
                let name = format!("{id}.csv");
                write_series_text(&outdir.join(&name), &series)?;
                name
            }
            SeriesFormat::Binary => {
                let name = format!("{id}.bin");
                write_series_binary(&outdir.join(&name), &series)?;
                name
            }
        };
        let gt_path = outdir.join(format!("{id}.gt"));
        fs::write(&gt_path, gt.to_sidecar(&id)).map_err(|e| io_err(&gt_path, e))?;
        let ann_name = format!("{id}.ann");
        let ann = Annotation::from_ground_truth(id.clone(), &gt)?;
        fs::write(outdir.join(&ann_name), ann.to_text()).map_err(|e| io_err(outdir, e))?;
        rows.push((series_name, ann_name));
    }
    let manifest = outdir.join("manifest.csv");
    fs::write(&manifest, manifest_text(&dataset.name, Split::Test, &rows)).map_err(|e| io_err(&manifest, e))?;
    eprintln!("wrote {} sequences to {}", rows.len(), outdir.display());
    Ok(())
}

fn count(series: &Path, replay: Option<&Path>, trace: Option<&Path>, pipeline: &PipelineArgs) -> Result<(), Failure> {
    let cfg = pipeline.config()?;
    let series = read_series(series)?;
    let estimator: Box<dyn DoubleCycleRegressor> = match replay {
        Some(path) => Box::new(ReplayEstimator::new(ReplayTable::load(path)?)),
        None => Box::new(CorrelationEstimator::new()),
    };
    let (state, estimate) = run_pipeline_with(&series, &estimator, &cfg, pipeline.execution())?;
    if let Some(path) = trace {
        write_output(Some(path), &state.trace_csv())?;
    }
    println!("{:.6}", estimate.count);
    Ok(())
}

fn estimator_choice(name: &str) -> Result<EstimatorChoice, Failure> {
    name.parse().map_err(|e: Error| Failure::usage(e.to_string()))
}

fn eval(manifest: &Path, batch: &BatchArgs, pipeline: &PipelineArgs) -> Result<(), Failure> {
    let cfg = pipeline.config()?;
    let choice = estimator_choice(&batch.estimator)?;
    let manifest = Manifest::load(manifest)?;
    let report = evaluate(&manifest, choice, &cfg, pipeline.execution());
    write_output(batch.out.as_deref(), &report.to_csv())?;
    eprintln!("{}", report.summary());
    Ok(())
}

fn speed(manifest: &Path, factors: &[usize], batch: &BatchArgs, pipeline: &PipelineArgs) -> Result<(), Failure> {
    if factors.is_empty() || factors.contains(&0) {
        return Err(Failure::usage("--factors needs positive integers"));
    }
    let cfg = pipeline.config()?;
    let choice = estimator_choice(&batch.estimator)?;
    let manifest = Manifest::load(manifest)?;
    let sequences = load_sequences(&manifest);
    let reports = speed_experiment(&manifest.name, &sequences, factors, choice, &cfg, pipeline.execution());
    write_output(batch.out.as_deref(), &speed_table(&reports))?;
    for (_, r) in &reports {
        eprintln!("{}", r.summary());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Synth { spec, outdir } => synth(spec, outdir),
        Command::Count {
            series,
            replay,
            trace,
            pipeline,
        } => count(series, replay.as_deref(), trace.as_deref(), pipeline),
        Command::Eval {
            manifest,
            batch,
            pipeline,
        } => eval(manifest, batch, pipeline),
        Command::Speed {
            manifest,
            factors,
            batch,
            pipeline,
        } => speed(manifest, factors, batch, pipeline),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
