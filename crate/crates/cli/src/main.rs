//! `nacensor` command-line tool.
//!
//! Exit codes: 0 success, 1 a configured check failed, 2 invalid
//! configuration or input.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nacensor::estimators::kaplan_meier;
use nacensor::generate::gen_censored_dataset_seeded;
use nacensor::harness::{
    quantile, read_records_csv, run_experiment, summarize, write_records_csv, write_summary_json, write_svg,
    ExperimentConfig, RateReport,
};
use nacensor::io::{read_sample, write_columns, write_sample};
use nacensor::kernel::{smooth_stieltjes_many, BandwidthSchedule, Kernel};
use nacensor::{EvaluationGrid, Marginal, SchemeKind};

#[derive(Parser)]
#[command(
    name = "nacensor",
    version,
    about = "Censored-data estimators under negative association"
)]
struct Cli {
    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a censored sample with NA lifetimes and censoring times.
    Simulate(SimulateArgs),
    /// Kaplan-Meier and cumulative hazard curves of a sample.
    Estimate(EstimateArgs),
    /// Kernel density and hazard curves of a sample.
    Smooth(SmoothArgs),
    /// Run a rate experiment and check it.
    Verify(VerifyArgs),
    /// Recompute summaries and plots from saved records.
    Report(ReportArgs),
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Lifetime distribution, e.g. `exponential:1` or `weibull:2:1`.
    #[arg(long, default_value = "exponential:1")]
    lifetime: Marginal,
    #[arg(long, default_value = "exponential:0.5")]
    censoring: Marginal,
    /// `iid`, `permutation` or `gaussian-block:<m>:<rho>`.
    #[arg(long, default_value = "gaussian-block:4:-0.16666666666666666")]
    lifetime_scheme: SchemeKind,
    #[arg(long, default_value = "gaussian-block:4:-0.16666666666666666")]
    censoring_scheme: SchemeKind,
    /// Output file; `.json` selects the JSON format.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SmoothArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "epanechnikov")]
    kernel: Kernel,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[arg(long, default_value_t = 0.2)]
    beta: f64,
    #[arg(long, default_value_t = 2048)]
    grid_size: usize,
    /// Upper grid end as a quantile of the observed times.
    #[arg(long, default_value_t = 0.9)]
    tau_quantile: f64,
}

#[derive(Args)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    kernel: Option<Kernel>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    tau_quantile: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    /// Skip the SVG plots.
    #[arg(long)]
    no_plots: bool,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    config: PathBuf,
    /// Long-format CSV written by `verify`.
    #[arg(long)]
    records: PathBuf,
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long)]
    no_plots: bool,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Checks,
    Config(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Config(e)
    }
}

impl From<nacensor::Error> for Failure {
    fn from(e: nacensor::Error) -> Self {
        Failure::Config(e.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Estimate(a) => estimate(a),
        Command::Smooth(a) => smooth(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let s = gen_censored_dataset_seeded(
        a.lifetime_scheme,
        &a.lifetime,
        a.censoring_scheme,
        &a.censoring,
        a.n as usize,
        a.seed,
    )?;
    write_sample(&a.out, &s).with_context(|| format!("writing {}", a.out.display()))?;
    println!("censoring fraction: {:.4}", s.censored_fraction());
    Ok(())
}

fn estimate(a: EstimateArgs) -> Result<(), Failure> {
    let s = read_sample(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let fit = kaplan_meier(&s);
    let mut times = s.sorted_x().to_vec();
    times.dedup();
    let survival: Vec<f64> = times.iter().map(|&t| fit.survival.eval(t)).collect();
    let cumhaz: Vec<f64> = times.iter().map(|&t| fit.cumhaz.eval(t)).collect();
    let out = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_columns(out, &["time", "survival", "cumhaz"], &[&times, &survival, &cumhaz])?;
    Ok(())
}

fn smooth(a: SmoothArgs) -> Result<(), Failure> {
    let schedule = BandwidthSchedule::new(a.c, a.beta)?;
    if !(a.tau_quantile > 0.0 && a.tau_quantile <= 1.0) {
        return Err(anyhow::anyhow!("tau quantile must lie in (0, 1]").into());
    }
    let s = read_sample(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let tau = quantile(s.sorted_x(), a.tau_quantile);
    if tau <= 0.0 {
        return Err(anyhow::anyhow!("the tau quantile of the observed times is not positive").into());
    }
    let grid = EvaluationGrid::equispaced(tau, a.grid_size)?;
    let b = schedule.bandwidth(s.len());
    let fit = kaplan_meier(&s);
    let f_n = smooth_stieltjes_many(&fit.distribution(), a.kernel, b, grid.points())?;
    let h_n = smooth_stieltjes_many(&fit.cumhaz, a.kernel, b, grid.points())?;
    let out = BufWriter::new(File::create(&a.out).with_context(|| format!("creating {}", a.out.display()))?);
    write_columns(out, &["t", "f_n", "h_n"], &[grid.points(), &f_n, &h_n])?;
    Ok(())
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn apply(cfg: &mut ExperimentConfig, o: Overrides) {
    if let Some(v) = o.seed {
        cfg.master_seed = v;
    }
    if let Some(v) = o.n_grid {
        cfg.n_grid = v;
    }
    if let Some(v) = o.replications {
        cfg.replications = v;
    }
    if let Some(v) = o.kernel {
        cfg.kernel = Some(v);
    }
    if let Some(v) = o.beta {
        cfg.bandwidth.beta = v;
    }
    if let Some(v) = o.c {
        cfg.bandwidth.c = v;
    }
    if let Some(v) = o.tau_quantile {
        cfg.tau_quantile = v;
    }
}

fn write_outputs(report: &RateReport, dir: &Path, records: bool, plots: bool) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    if records {
        let mut f = BufWriter::new(File::create(dir.join("records.csv"))?);
        write_records_csv(report, &mut f)?;
        f.flush()?;
    }
    let mut f = BufWriter::new(File::create(dir.join("summary.json"))?);
    write_summary_json(report, &mut f)?;
    f.flush()?;
    if plots {
        for s in &report.summaries {
            let mut f = BufWriter::new(File::create(dir.join(format!("{}.svg", s.statistic)))?);
            write_svg(s, &mut f)?;
            f.flush()?;
        }
    }
    Ok(())
}

fn print_report(report: &RateReport) -> Result<(), Failure> {
    for s in &report.summaries {
        let slope = s.slope.map_or("n/a".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<13} slope {:>7}  q90 ratio growth {:.3}",
            s.statistic.name(),
            slope,
            s.q90_ratio_growth
        );
    }
    for c in &report.checks {
        println!(
            "{} {} {}: {:.4}",
            if c.passed { "PASS" } else { "FAIL" },
            c.statistic,
            c.criterion,
            c.value
        );
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn verify(a: VerifyArgs) -> Result<(), Failure> {
    let mut cfg = load_config(&a.config)?;
    apply(&mut cfg, a.overrides);
    cfg.validate_for_rates()?;
    let report = run_experiment(&cfg)?;
    write_outputs(&report, &a.out_dir, true, !a.no_plots)?;
    print_report(&report)
}

fn report(a: ReportArgs) -> Result<(), Failure> {
    let cfg = load_config(&a.config)?;
    cfg.validate_for_rates()?;
    let file = File::open(&a.records).with_context(|| format!("opening {}", a.records.display()))?;
    let records = read_records_csv(BufReader::new(file))?;
    let report = summarize(&cfg, records)?;
    write_outputs(&report, &a.out_dir, false, !a.no_plots)?;
    print_report(&report)
}
