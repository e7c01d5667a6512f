use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mixsparse::harness::{
    emit_plot_data, estimator_comparison, run_experiment, sweep, ComparisonOptions,
    ExperimentConfig, HarnessError, OutputFormat, PipelineChoice, SweepAxis, TrialReport,
    TruthSpec,
};
use mixsparse::recovery::EtaPreset;

#[derive(Parser)]
#[command(name = "mixsparse", version, about = "Recover two sparse vectors from a mixed linear regression oracle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded recovery trials.
    Recover(ExperimentArgs),
    /// Run the noiseless pipeline (forces sigma = 0).
    Noiseless(ExperimentArgs),
    /// Run a grid of experiments and write plot data.
    Sweep(SweepArgs),
    /// Compare EM, method of moments and single-Gaussian fits on scalar mixtures.
    CompareEstimators(CompareArgs),
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    /// TOML config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gap_bound: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// auto, small_gamma, merged or noiseless
    #[arg(long)]
    pipeline: Option<PipelineChoice>,
    /// per_query_n2 or proof_preset
    #[arg(long)]
    eta_preset: Option<EtaPreset>,
    /// random_ksparse, shared_support or twin
    #[arg(long)]
    truth: Option<String>,
    #[arg(long)]
    low: Option<f64>,
    #[arg(long)]
    high: Option<f64>,
    /// Gap of a shared_support truth.
    #[arg(long)]
    truth_gap: Option<f64>,
    /// Offset of a twin truth.
    #[arg(long)]
    offset: Option<f64>,
    /// Any numeric config field, e.g. `--set c_test=512`. Repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    set: Vec<String>,
    /// Where to write the JSON reports.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Grid axis, e.g. `--axis gamma=0.01,0.02`. Repeatable; the last axis varies fastest.
    #[arg(long, value_name = "NAME=V1,V2,...", required = true)]
    axis: Vec<String>,
    /// csv or json; defaults to the config's `format`.
    #[arg(long)]
    format: Option<OutputFormat>,
    #[arg(long, default_value = "sweep.csv")]
    plot: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,2,4,8")]
    separations: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    mom_batches: usize,
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
    #[arg(long, default_value = "estimators.csv")]
    output: PathBuf,
}

fn parse_assignment(s: &str) -> Result<(&str, &str), HarnessError> {
    s.split_once('=')
        .ok_or_else(|| HarnessError::Config(format!("expected NAME=VALUE, got {s:?}")))
}

fn parse_number(name: &str, v: &str) -> Result<f64, HarnessError> {
    v.trim()
        .parse()
        .map_err(|_| HarnessError::Config(format!("{name}: cannot parse {v:?} as a number")))
}

fn build_config(args: &ExperimentArgs) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.k {
        cfg.k = v;
    }
    if args.m.is_some() {
        cfg.m = args.m;
    }
    if let Some(v) = args.sigma {
        cfg.sigma = v;
    }
    if let Some(v) = args.gamma {
        cfg.gamma = v;
    }
    if args.gap_bound.is_some() {
        cfg.gap_bound = args.gap_bound;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.trials {
        cfg.trials = v;
    }
    if let Some(v) = args.pipeline {
        cfg.pipeline = v;
    }
    if let Some(v) = args.eta_preset {
        cfg.eta_preset = v;
    }
    if args.output.is_some() {
        cfg.output = args.output.clone();
    }
    apply_truth_overrides(&mut cfg, args)?;
    for s in &args.set {
        let (name, value) = parse_assignment(s)?;
        cfg.set_param(name, parse_number(name, value)?)?;
    }
    Ok(cfg)
}

fn apply_truth_overrides(cfg: &mut ExperimentConfig, args: &ExperimentArgs) -> Result<(), HarnessError> {
    let (mut low, mut high) = match &cfg.truth {
        TruthSpec::RandomKsparse { low, high }
        | TruthSpec::SharedSupport { low, high, .. }
        | TruthSpec::Twin { low, high, .. } => (*low, *high),
        TruthSpec::Explicit { .. } => (1.0, 2.0),
    };
    low = args.low.unwrap_or(low);
    high = args.high.unwrap_or(high);
    let kind = match (&args.truth, &cfg.truth) {
        (Some(k), _) => k.as_str(),
        (None, TruthSpec::RandomKsparse { .. }) => "random_ksparse",
        (None, TruthSpec::SharedSupport { .. }) => "shared_support",
        (None, TruthSpec::Twin { .. }) => "twin",
        (None, TruthSpec::Explicit { .. }) => return Ok(()),
    };
    let old_gap = match cfg.truth {
        TruthSpec::SharedSupport { gap, .. } => gap,
        _ => 1.0,
    };
    let old_offset = match cfg.truth {
        TruthSpec::Twin { offset, .. } => offset,
        _ => 1e-9,
    };
    cfg.truth = match kind {
        "random_ksparse" => TruthSpec::RandomKsparse { low, high },
        "shared_support" => TruthSpec::SharedSupport {
            low,
            high,
            gap: args.truth_gap.unwrap_or(old_gap),
        },
        "twin" => TruthSpec::Twin {
            low,
            high,
            offset: args.offset.unwrap_or(old_offset),
        },
        other => return Err(HarnessError::Config(format!("unknown truth kind {other:?}"))),
    };
    Ok(())
}

fn print_trials(reports: &[TrialReport]) {
    println!("trial  branch       rel_err_1  rel_err_2  abs_err_max  queries");
    for t in reports {
        match (&t.report, &t.error) {
            (Some(r), _) => println!(
                "{:>5}  {:<11}  {:>9.3e}  {:>9.3e}  {:>11.3e}  {}",
                t.trial,
                r.branch.to_string(),
                r.errors.relative_error_1,
                r.errors.relative_error_2,
                r.errors.max_error(),
                r.total_queries
            ),
            (None, err) => println!("{:>5}  FAILED: {}", t.trial, err.as_deref().unwrap_or("unknown")),
        }
    }
    let failed = reports.iter().filter(|t| !t.succeeded()).count();
    println!("{} trials, {} failed", reports.len(), failed);
}

fn exit_for(reports: &[TrialReport]) -> ExitCode {
    if reports.iter().all(TrialReport::succeeded) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn parse_axis(s: &str) -> Result<SweepAxis, HarnessError> {
    let (name, values) = parse_assignment(s)?;
    let values = values
        .split(',')
        .map(|v| parse_number(name, v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepAxis {
        name: name.to_string(),
        values,
    })
}

fn run(cli: Cli) -> Result<ExitCode, HarnessError> {
    match cli.command {
        Command::Recover(args) => {
            let reports = run_experiment(&build_config(&args)?)?;
            print_trials(&reports);
            Ok(exit_for(&reports))
        }
        Command::Noiseless(args) => {
            let mut cfg = build_config(&args)?;
            cfg.sigma = 0.0;
            cfg.pipeline = PipelineChoice::Noiseless;
            let reports = run_experiment(&cfg)?;
            print_trials(&reports);
            Ok(exit_for(&reports))
        }
        Command::Sweep(args) => {
            let cfg = build_config(&args.experiment)?;
            let axes = args.axis.iter().map(|a| parse_axis(a)).collect::<Result<Vec<_>, _>>()?;
            let result = sweep(&cfg, &axes)?;
            emit_plot_data(&result, args.format.unwrap_or(cfg.format), &args.plot)?;
            let failed_col = result.column("failed").expect("sweep column");
            let failed: f64 = result.cells.iter().map(|c| c.values[failed_col]).sum();
            println!("{} cells written to {}", result.cells.len(), args.plot.display());
            Ok(if failed == 0.0 {
                ExitCode::SUCCESS
            } else {
                println!("{failed} trials failed");
                ExitCode::from(2)
            })
        }
        Command::CompareEstimators(args) => {
            let opts = ComparisonOptions {
                mom_batches: args.mom_batches,
            };
            let result = estimator_comparison(&args.separations, args.samples, args.trials, args.sigma, args.seed, &opts)?;
            emit_plot_data(&result, args.format, &args.output)?;
            println!("separation  em_error   mom_error  single_error");
            for cell in &result.cells {
                println!(
                    "{:>10.3}  {:>9.4}  {:>9.4}  {:>12.4}",
                    cell.coords[0], cell.values[0], cell.values[2], cell.values[4]
                );
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
