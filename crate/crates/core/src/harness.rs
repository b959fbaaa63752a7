//! Seeded Monte Carlo rate experiments.
//!
//! Each `(n, replication)` pair draws one censored NA sample from a seed
//! derived from the master seed, computes every requested sup statistic on
//! it, and the results are reduced in a fixed order, so reports do not depend
//! on thread scheduling. An almost-sure `O(rho_n)` claim is checked by two
//! finite-n surrogates: the least-squares slope of `ln median` on `ln rho_n`
//! and the growth of the 0.9-quantile ratio `q90 / rho_n` across `n`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::proof_terms;
use crate::error::{invalid, Error, Result};
use crate::estimators::{empirical_l, kaplan_meier, sub_dist_empirical};
use crate::generate::{gen_censored_dataset_seeded, mix_seed, SchemeKind};
use crate::kernel::{centred_curves, BandwidthSchedule, Kernel, SmoothTarget, Smoothed};
use crate::oracle::{ParametricModel, Remainder, RemainderEval};
use crate::sample::{CensoredSample, EvaluationGrid, StepFunction};

/// Smallest `1 - L(tau)` accepted by an experiment; keeps the `1/(1 - G)`
/// and `1/(1 - L)` factors of the centred statistics below 100.
pub const MIN_DENOMINATOR: f64 = 0.01;

/// Sup statistics the harness can track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Statistic {
    /// `sup |F̂_n - F|`
    #[serde(rename = "lemma1-F")]
    Lemma1F,
    /// `sup |Ĥ_n - H|`
    #[serde(rename = "lemma1-H")]
    Lemma1H,
    /// `sup |F_{*n} - F_*|`
    #[serde(rename = "lemma3-Fstar")]
    Lemma3Fstar,
    /// `sup |L_n - L|`
    #[serde(rename = "lemma3-L")]
    Lemma3L,
    /// `sup |r_1n|`
    #[serde(rename = "lemma2-r1")]
    Lemma2R1,
    /// `sup |r_2n|`
    #[serde(rename = "lemma2-r2")]
    Lemma2R2,
    /// centred density smoother
    #[serde(rename = "theorem1")]
    Theorem1,
    /// centred hazard smoother
    #[serde(rename = "theorem2")]
    Theorem2,
    /// `sup |I1 + (f*_n - E f*_n)/(1 - G)|`
    #[serde(rename = "diag-I1")]
    DiagI1,
    #[serde(rename = "diag-I2")]
    DiagI2,
    #[serde(rename = "diag-I3")]
    DiagI3,
}

impl Statistic {
    pub const ALL: [Statistic; 11] = [
        Statistic::Lemma1F,
        Statistic::Lemma1H,
        Statistic::Lemma3Fstar,
        Statistic::Lemma3L,
        Statistic::Lemma2R1,
        Statistic::Lemma2R2,
        Statistic::Theorem1,
        Statistic::Theorem2,
        Statistic::DiagI1,
        Statistic::DiagI2,
        Statistic::DiagI3,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Statistic::Lemma1F => "lemma1-F",
            Statistic::Lemma1H => "lemma1-H",
            Statistic::Lemma3Fstar => "lemma3-Fstar",
            Statistic::Lemma3L => "lemma3-L",
            Statistic::Lemma2R1 => "lemma2-r1",
            Statistic::Lemma2R2 => "lemma2-r2",
            Statistic::Theorem1 => "theorem1",
            Statistic::Theorem2 => "theorem2",
            Statistic::DiagI1 => "diag-I1",
            Statistic::DiagI2 => "diag-I2",
            Statistic::DiagI3 => "diag-I3",
        }
    }

    /// The claimed rate the statistic is compared against.
    pub fn rate_kind(&self) -> RateKind {
        match self {
            Statistic::Theorem1 | Statistic::Theorem2 | Statistic::DiagI3 => RateKind::Smoothed,
            _ => RateKind::Root,
        }
    }

    /// Needs a kernel and bandwidth.
    pub fn is_smoothed(&self) -> bool {
        matches!(
            self,
            Statistic::Theorem1 | Statistic::Theorem2 | Statistic::DiagI1 | Statistic::DiagI2 | Statistic::DiagI3
        )
    }

    fn is_diagnostic(&self) -> bool {
        matches!(self, Statistic::DiagI1 | Statistic::DiagI2 | Statistic::DiagI3)
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Statistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Statistic::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown statistic {s:?}")))
    }
}

/// `rho(n)`: `(ln n / n)^{1/2}` or `b_n^-1 (ln n / n)^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateKind {
    Root,
    Smoothed,
}

impl RateKind {
    pub fn value(&self, n: usize, b: Option<f64>) -> f64 {
        let nf = n as f64;
        let root = (nf.ln() / nf).sqrt();
        match self {
            RateKind::Root => root,
            RateKind::Smoothed => root / b.expect("smoothed rate needs a bandwidth"),
        }
    }
}

/// Pass/fail thresholds attached to one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Check {
    pub statistic: Statistic,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope_max: Option<f64>,
    /// Bound on `max_n q90_ratio(n) / q90_ratio(n_min)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_ratio_growth: Option<f64>,
    /// Allowed relative increase of the median between adjacent `n`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub monotone_slack: Option<f64>,
}

fn default_tau_quantile() -> f64 {
    0.9
}
fn default_grid_size() -> usize {
    2048
}
fn default_diag_grid_size() -> usize {
    64
}
fn default_true() -> bool {
    true
}
fn default_centring() -> SmoothTarget {
    SmoothTarget::DensityF
}

/// One Monte Carlo experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ParametricModel,
    #[serde(default)]
    pub lifetime_scheme: SchemeKind,
    #[serde(default)]
    pub censoring_scheme: SchemeKind,
    pub n_grid: Vec<usize>,
    pub replications: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    #[serde(default)]
    pub bandwidth: BandwidthSchedule,
    #[serde(default = "default_tau_quantile")]
    pub tau_quantile: f64,
    pub statistics: Vec<Statistic>,
    pub master_seed: u64,
    #[serde(default = "default_centring")]
    pub centering: SmoothTarget,
    /// Equispaced points on `(0, tau]`.
    #[serde(default = "default_grid_size")]
    pub grid_size: usize,
    /// Add the sample's observation times to the grid.
    #[serde(default = "default_true")]
    pub include_sample_points: bool,
    /// Equispaced points used by the proof-term diagnostics.
    #[serde(default = "default_diag_grid_size")]
    pub diag_grid_size: usize,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl ExperimentConfig {
    /// Checks everything needed to run; rate fitting additionally needs
    /// [`ExperimentConfig::validate_for_rates`].
    pub fn validate(&self) -> Result<()> {
        self.model.lifetime.validate()?;
        self.model.censoring.validate()?;
        self.lifetime_scheme.validate()?;
        self.censoring_scheme.validate()?;
        if self.n_grid.is_empty() || self.n_grid[0] < 1 {
            return invalid("n_grid must contain positive sample sizes");
        }
        if self.n_grid.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("n_grid must be strictly increasing");
        }
        if self.replications < 1 {
            return invalid("replications must be at least 1");
        }
        if self.statistics.is_empty() {
            return invalid("no statistics selected");
        }
        if self.grid_size < 1 || self.diag_grid_size < 1 {
            return invalid("grid sizes must be positive");
        }
        self.bandwidth.validate()?;
        if !matches!(self.centering, SmoothTarget::DensityF | SmoothTarget::DensityFstar) {
            return invalid("centering must be density-F or density-Fstar");
        }
        if let Some(s) = self.statistics.iter().find(|s| s.is_smoothed()) {
            if self.kernel.is_none() {
                return invalid(format!("statistic {s} needs a kernel"));
            }
        }
        for c in &self.checks {
            if !self.statistics.contains(&c.statistic) {
                return invalid(format!("check refers to unselected statistic {}", c.statistic));
            }
        }
        let tau = self.tau()?;
        let denom = self.model.l_bar(tau);
        if denom < MIN_DENOMINATOR {
            return invalid(format!(
                "1 - L(tau) = {denom:.3e} at tau = {tau}: below the denominator guard {MIN_DENOMINATOR}"
            ));
        }
        Ok(())
    }

    /// The stricter requirements of a rate study: at least two sample sizes
    /// and at least ten replications.
    pub fn validate_for_rates(&self) -> Result<()> {
        self.validate()?;
        if self.n_grid.len() < 2 {
            return invalid("n_grid needs at least two entries for a rate fit");
        }
        if self.replications < 10 {
            return invalid("a rate study needs at least 10 replications");
        }
        Ok(())
    }

    pub fn tau(&self) -> Result<f64> {
        self.model.tau_for_quantile(self.tau_quantile)
    }

    fn bandwidth_for(&self, n: usize) -> Option<f64> {
        self.kernel.map(|_| self.bandwidth.bandwidth(n))
    }
}

/// Seed of replication `rep` at sample size `n`.
pub fn replication_seed(master_seed: u64, n: usize, rep: usize) -> u64 {
    mix_seed(mix_seed(master_seed, n as u64), rep as u64)
}

fn step_sup(step: &StepFunction, truth: impl Fn(f64) -> Result<f64>, grid: &EvaluationGrid) -> Result<f64> {
    let mut sup = 0.0f64;
    for &t in grid.points() {
        let v = truth(t)?;
        sup = sup
            .max((step.left_limit(t) - v).abs())
            .max((step.right_limit(t) - v).abs());
    }
    Ok(sup)
}

/// Sup over the grid of a lemma statistic, taking both one-sided limits of
/// the estimator at every grid point.
pub fn lemma_statistic(
    s: &CensoredSample,
    model: &ParametricModel,
    statistic: Statistic,
    grid: &EvaluationGrid,
) -> Result<f64> {
    match statistic {
        Statistic::Lemma1F => step_sup(&kaplan_meier(s).distribution(), |t| Ok(model.lifetime.cdf(t)), grid),
        Statistic::Lemma1H => step_sup(&kaplan_meier(s).cumhaz, |t| model.cum_hazard(t), grid),
        Statistic::Lemma3Fstar => step_sup(&sub_dist_empirical(s), |t| model.sub_dist(t), grid),
        Statistic::Lemma3L => step_sup(&empirical_l(s), |t| Ok(model.l(t)), grid),
        Statistic::Lemma2R1 | Statistic::Lemma2R2 => {
            let which = if statistic == Statistic::Lemma2R1 {
                Remainder::Distribution
            } else {
                Remainder::CumHazard
            };
            let eval = RemainderEval::new(s, model, grid.tau())?;
            let mut sup = 0.0f64;
            for &t in grid.points() {
                for side in [crate::sample::Side::Left, crate::sample::Side::Right] {
                    sup = sup.max(eval.eval(which, t, side)?.abs());
                }
            }
            Ok(sup)
        }
        other => invalid(format!("{other} is not a lemma statistic")),
    }
}

/// All requested sup statistics for one sample, in `cfg.statistics` order.
pub fn sample_statistics(cfg: &ExperimentConfig, s: &CensoredSample, tau: f64) -> Result<Vec<f64>> {
    let grid = if cfg.include_sample_points {
        EvaluationGrid::with_sample_points(tau, cfg.grid_size, s.x().iter().copied())?
    } else {
        EvaluationGrid::equispaced(tau, cfg.grid_size)?
    };
    let b = cfg.bandwidth_for(s.len());
    let curves = if cfg
        .statistics
        .iter()
        .any(|s| matches!(s, Statistic::Theorem1 | Statistic::Theorem2))
    {
        Some(centred_curves(
            s,
            &cfg.model,
            cfg.kernel.unwrap(),
            b.unwrap(),
            &grid,
            cfg.centering,
        )?)
    } else {
        None
    };
    let diag = if cfg.statistics.iter().any(|s| s.is_diagnostic()) {
        let g = EvaluationGrid::equispaced(tau, cfg.diag_grid_size)?;
        Some(proof_terms(s, &cfg.model, cfg.kernel.unwrap(), b.unwrap(), &g)?.sups())
    } else {
        None
    };
    cfg.statistics
        .iter()
        .map(|&stat| match stat {
            Statistic::Theorem1 => Ok(curves.as_ref().unwrap().sup(Smoothed::Density)),
            Statistic::Theorem2 => Ok(curves.as_ref().unwrap().sup(Smoothed::Hazard)),
            Statistic::DiagI1 => Ok(diag.unwrap().i1_residual),
            Statistic::DiagI2 => Ok(diag.unwrap().i2),
            Statistic::DiagI3 => Ok(diag.unwrap().i3),
            lemma => lemma_statistic(s, &cfg.model, lemma, &grid),
        })
        .collect()
}

/// One sup statistic of one replication.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub statistic: Statistic,
    pub n: usize,
    pub replication: usize,
    pub value: f64,
}

/// Replication summary at one sample size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bandwidth: Option<f64>,
    pub rate: f64,
    pub median: f64,
    pub mean: f64,
    pub q90: f64,
    pub median_ratio: f64,
    pub q90_ratio: f64,
}

/// Per-statistic summary across the `n` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSummary {
    pub statistic: Statistic,
    pub rate_kind: RateKind,
    pub sizes: Vec<SizeSummary>,
    /// `None` with fewer than two sample sizes.
    pub slope: Option<f64>,
    /// `None` unless at least three sample sizes leave a residual degree of
    /// freedom.
    pub slope_stderr: Option<f64>,
    /// `max_n q90_ratio(n) / q90_ratio(n_min)`
    pub q90_ratio_growth: f64,
    /// `max_n q90_ratio(n) / min_n q90_ratio(n)`
    pub q90_ratio_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub statistic: Statistic,
    pub criterion: String,
    pub value: f64,
    pub passed: bool,
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub config: ExperimentConfig,
    pub tau: f64,
    #[serde(skip)]
    pub records: Vec<Record>,
    pub summaries: Vec<StatisticSummary>,
    pub checks: Vec<CheckOutcome>,
}

impl RateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn summary(&self, statistic: Statistic) -> Option<&StatisticSummary> {
        self.summaries.iter().find(|s| s.statistic == statistic)
    }

    /// Values of one statistic at one sample size, in replication order.
    pub fn values(&self, statistic: Statistic, n: usize) -> Vec<f64> {
        self.records
            .iter()
            .filter(|r| r.statistic == statistic && r.n == n)
            .map(|r| r.value)
            .collect()
    }
}

/// Runs every `(n, replication)` pair in parallel and summarises.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RateReport> {
    cfg.validate()?;
    let tau = cfg.tau()?;
    let jobs: Vec<(usize, usize)> = cfg
        .n_grid
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |r| (n, r)))
        .collect();
    let values: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(n, rep)| {
            let s = gen_censored_dataset_seeded(
                cfg.lifetime_scheme,
                &cfg.model.lifetime,
                cfg.censoring_scheme,
                &cfg.model.censoring,
                n,
                replication_seed(cfg.master_seed, n, rep),
            )?;
            sample_statistics(cfg, &s, tau)
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(jobs.len() * cfg.statistics.len());
    for (k, &statistic) in cfg.statistics.iter().enumerate() {
        for (&(n, replication), v) in jobs.iter().zip(&values) {
            records.push(Record {
                statistic,
                n,
                replication,
                value: v[k],
            });
        }
    }
    summarize(cfg, records)
}

/// Type-7 (linear interpolation) sample quantile.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = (v.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Least-squares slope of `ln y` on `ln x`, with its standard error when
/// at least three points are available.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<(f64, Option<f64>)> {
    if x.len() != y.len() || x.len() < 2 {
        return invalid("a slope fit needs at least two points");
    }
    if x.iter().chain(y).any(|&v| !(v > 0.0 && v.is_finite())) {
        return invalid("log-log fit needs positive finite values");
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx <= 1e-12 * lx.iter().map(|a| a * a).sum::<f64>().max(1e-300) {
        return invalid("degenerate regression: all rates are equal");
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let stderr = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
            .sum();
        Some((rss / (k - 2.0) / sxx).sqrt())
    } else {
        None
    };
    Ok((slope, stderr))
}

/// Slope of `ln median` on `ln rho(n)` for one summary.
pub fn fit_rate_slope(summary: &StatisticSummary) -> Result<(f64, Option<f64>)> {
    let x: Vec<f64> = summary.sizes.iter().map(|s| s.rate).collect();
    let y: Vec<f64> = summary.sizes.iter().map(|s| s.median).collect();
    log_log_slope(&x, &y)
}

fn summarize_statistic(cfg: &ExperimentConfig, statistic: Statistic, records: &[Record]) -> Result<StatisticSummary> {
    let kind = statistic.rate_kind();
    let mut sizes = Vec::with_capacity(cfg.n_grid.len());
    for &n in &cfg.n_grid {
        let v: Vec<f64> = records
            .iter()
            .filter(|r| r.statistic == statistic && r.n == n)
            .map(|r| r.value)
            .collect();
        if v.is_empty() {
            return invalid(format!("no records for {statistic} at n = {n}"));
        }
        let b = cfg.bandwidth_for(n);
        let rate = kind.value(n, b);
        let median = quantile(&v, 0.5);
        let q90 = quantile(&v, 0.9);
        sizes.push(SizeSummary {
            n,
            bandwidth: if kind == RateKind::Smoothed || statistic.is_smoothed() {
                b
            } else {
                None
            },
            rate,
            median,
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q90,
            median_ratio: median / rate,
            q90_ratio: q90 / rate,
        });
    }
    let first = sizes[0].q90_ratio;
    let max = sizes.iter().map(|s| s.q90_ratio).fold(f64::MIN, f64::max);
    let min = sizes.iter().map(|s| s.q90_ratio).fold(f64::MAX, f64::min);
    let mut summary = StatisticSummary {
        statistic,
        rate_kind: kind,
        sizes,
        slope: None,
        slope_stderr: None,
        q90_ratio_growth: max / first,
        q90_ratio_spread: max / min,
    };
    if summary.sizes.len() >= 2 {
        let (slope, stderr) = fit_rate_slope(&summary)?;
        summary.slope = Some(slope);
        summary.slope_stderr = stderr;
    }
    Ok(summary)
}

fn evaluate_check(check: &Check, s: &StatisticSummary) -> Vec<CheckOutcome> {
    let mut out = Vec::new();
    let stat = check.statistic;
    let slope = s.slope.unwrap_or(f64::NAN);
    if let Some(lo) = check.slope_min {
        out.push(CheckOutcome {
            statistic: stat,
            criterion: format!("slope >= {lo}"),
            value: slope,
            passed: slope >= lo,
        });
    }
    if let Some(hi) = check.slope_max {
        out.push(CheckOutcome {
            statistic: stat,
            criterion: format!("slope <= {hi}"),
            value: slope,
            passed: slope <= hi,
        });
    }
    if let Some(g) = check.max_ratio_growth {
        out.push(CheckOutcome {
            statistic: stat,
            criterion: format!("q90 ratio growth <= {g}"),
            value: s.q90_ratio_growth,
            passed: s.q90_ratio_growth <= g,
        });
    }
    if let Some(slack) = check.monotone_slack {
        let worst = s
            .sizes
            .windows(2)
            .map(|w| w[1].median / w[0].median)
            .fold(0.0, f64::max);
        out.push(CheckOutcome {
            statistic: stat,
            criterion: format!("adjacent median ratio <= {}", 1.0 + slack),
            value: worst,
            passed: worst <= 1.0 + slack,
        });
    }
    out
}

/// Builds a report from raw records; used by [`run_experiment`] and to
/// recompute summaries from a saved long-format CSV.
pub fn summarize(cfg: &ExperimentConfig, records: Vec<Record>) -> Result<RateReport> {
    let tau = cfg.tau()?;
    let summaries = cfg
        .statistics
        .iter()
        .map(|&s| summarize_statistic(cfg, s, &records))
        .collect::<Result<Vec<_>>>()?;
    let checks = cfg
        .checks
        .iter()
        .flat_map(|c| {
            let s = summaries
                .iter()
                .find(|s| s.statistic == c.statistic)
                .expect("validated");
            evaluate_check(c, s)
        })
        .collect();
    Ok(RateReport {
        config: cfg.clone(),
        tau,
        records,
        summaries,
        checks,
    })
}

/// Long-format CSV: `statistic,n,replication,value`.
pub fn write_records_csv<W: Write>(report: &RateReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["statistic", "n", "replication", "value"])?;
    for r in &report.records {
        w.write_record([
            r.statistic.name().to_string(),
            r.n.to_string(),
            r.replication.to_string(),
            r.value.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: std::io::Read>(reader: R) -> Result<Vec<Record>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out = Vec::new();
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse {
            line,
            message: format!("invalid {what}"),
        };
        if row.len() != 4 {
            return Err(bad("row length"));
        }
        out.push(Record {
            statistic: row[0].parse().map_err(|_| bad("statistic"))?,
            n: row[1].parse().map_err(|_| bad("n"))?,
            replication: row[2].parse().map_err(|_| bad("replication"))?,
            value: row[3].parse().map_err(|_| bad("value"))?,
        });
    }
    Ok(out)
}

/// Pretty JSON summary (config, per-n summaries, slopes, checks).
pub fn write_summary_json<W: Write>(report: &RateReport, mut writer: W) -> Result<()> {
    #[derive(Serialize)]
    struct View<'a> {
        #[serde(flatten)]
        report: &'a RateReport,
        passed: bool,
    }
    serde_json::to_writer_pretty(
        &mut writer,
        &View {
            report,
            passed: report.passed(),
        },
    )?;
    writer.write_all(b"\n")?;
    Ok(())
}

/// Log-log plot of median and 0.9-quantile against `rho(n)` with the fitted
/// line.
pub fn write_svg<W: Write>(summary: &StatisticSummary, mut w: W) -> Result<()> {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 60.0;
    let xs: Vec<f64> = summary.sizes.iter().map(|s| s.rate.ln()).collect();
    let ys: Vec<f64> = summary
        .sizes
        .iter()
        .flat_map(|s| [s.median, s.q90])
        .filter(|v| *v > 0.0)
        .map(f64::ln)
        .collect();
    let span = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let pad = ((hi - lo) * 0.1).max(0.1);
        (lo - pad, hi + pad)
    };
    let (x0, x1) = span(&xs);
    let (y0, y1) = if ys.is_empty() { (-1.0, 1.0) } else { span(&ys) };
    let px = |x: f64| M + (x - x0) / (x1 - x0) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y0) / (y1 - y0) * (H - 2.0 * M);
    writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    )?;
    writeln!(w, r#"<rect width="{W}" height="{H}" fill="white"/>"#)?;
    writeln!(
        w,
        r#"<rect x="{M}" y="{M}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        W - 2.0 * M,
        H - 2.0 * M
    )?;
    let title = match summary.slope {
        Some(s) => format!("{}: slope {:.3}", summary.statistic, s),
        None => summary.statistic.to_string(),
    };
    writeln!(
        w,
        r#"<text x="{:.1}" y="30" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        W / 2.0
    )?;
    writeln!(
        w,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12">ln rate</text>"#,
        W / 2.0,
        H - 20.0
    )?;
    writeln!(
        w,
        r#"<text x="20" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="12" transform="rotate(-90 20 {:.1})">ln statistic</text>"#,
        H / 2.0,
        H / 2.0
    )?;
    for (x, s) in xs.iter().zip(&summary.sizes) {
        writeln!(
            w,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-family="sans-serif" font-size="10">n={}</text>"#,
            px(*x),
            H - M + 14.0,
            s.n
        )?;
        if s.median > 0.0 {
            writeln!(
                w,
                r#"<circle cx="{:.1}" cy="{:.1}" r="4" fill="steelblue"/>"#,
                px(*x),
                py(s.median.ln())
            )?;
        }
        if s.q90 > 0.0 {
            writeln!(
                w,
                r#"<rect x="{:.1}" y="{:.1}" width="7" height="7" fill="none" stroke="firebrick"/>"#,
                px(*x) - 3.5,
                py(s.q90.ln()) - 3.5
            )?;
        }
    }
    if let Some(slope) = summary.slope {
        let k = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / k;
        let my = summary.sizes.iter().map(|s| s.median.ln()).sum::<f64>() / k;
        let (a, b) = (xs[0], xs[xs.len() - 1]);
        writeln!(
            w,
            r#"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="steelblue" stroke-dasharray="4 3"/>"#,
            px(a),
            py(my + slope * (a - mx)),
            px(b),
            py(my + slope * (b - mx))
        )?;
    }
    writeln!(w, "</svg>")?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::Marginal;

    fn config() -> ExperimentConfig {
        serde_json::from_str(
            r#"{
                "model": {
                    "lifetime": {"family": "exponential", "rate": 1.0},
                    "censoring": {"family": "exponential", "rate": 0.5}
                },
                "n_grid": [50, 200],
                "replications": 10,
                "statistics": ["lemma1-F", "lemma3-L"],
                "master_seed": 3
            }"#,
        )
        .unwrap()
    }

    fn synthetic(f: impl Fn(f64) -> f64) -> StatisticSummary {
        let sizes = [100usize, 1000, 10000]
            .iter()
            .map(|&n| {
                let rate = RateKind::Root.value(n, None);
                SizeSummary {
                    n,
                    bandwidth: None,
                    rate,
                    median: f(rate),
                    mean: f(rate),
                    q90: f(rate),
                    median_ratio: f(rate) / rate,
                    q90_ratio: f(rate) / rate,
                }
            })
            .collect();
        StatisticSummary {
            statistic: Statistic::Lemma1F,
            rate_kind: RateKind::Root,
            sizes,
            slope: None,
            slope_stderr: None,
            q90_ratio_growth: 1.0,
            q90_ratio_spread: 1.0,
        }
    }

    #[test]
    fn exact_power_laws() {
        let (slope, se) = fit_rate_slope(&synthetic(|r| 2.0 * r)).unwrap();
        assert!((slope - 1.0).abs() < 1e-12);
        assert!(se.unwrap() < 1e-12);
        let (slope, _) = fit_rate_slope(&synthetic(|r| r.sqrt())).unwrap();
        assert!((slope - 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_regression_rejected() {
        assert!(log_log_slope(&[0.1, 0.1], &[1.0, 2.0]).is_err());
        assert!(log_log_slope(&[0.1], &[1.0]).is_err());
        let (_, se) = log_log_slope(&[0.1, 0.2], &[1.0, 2.0]).unwrap();
        assert!(se.is_none());
    }

    #[test]
    fn quantiles() {
        let v = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert!((quantile(&v, 0.9) - 4.6).abs() < 1e-12);
        assert_eq!(quantile(&[7.0], 0.9), 7.0);
    }

    #[test]
    fn statistic_names_round_trip() {
        for s in Statistic::ALL {
            assert_eq!(s.name().parse::<Statistic>().unwrap(), s);
            assert_eq!(serde_json::to_string(&s).unwrap(), format!("\"{}\"", s.name()));
        }
    }

    #[test]
    fn config_validation() {
        let mut c = config();
        c.validate_for_rates().unwrap();
        c.n_grid = vec![200, 50];
        assert!(c.validate().is_err());
        let mut c = config();
        c.statistics.push(Statistic::Theorem1);
        assert!(c.validate().is_err(), "theorem statistic without a kernel");
        c.kernel = Some(Kernel::Epanechnikov);
        c.validate().unwrap();
        c.bandwidth.beta = 0.6;
        assert!(c.validate().is_err());
        let mut c = config();
        c.tau_quantile = 0.999;
        assert!(c.validate().is_err());
        let mut c = config();
        c.replications = 5;
        c.validate().unwrap();
        assert!(c.validate_for_rates().is_err());
    }

    #[test]
    fn experiment_is_deterministic() {
        let mut c = config();
        c.n_grid = vec![80];
        c.replications = 1;
        let a = run_experiment(&c).unwrap();
        let b = run_experiment(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records, b.records);
        assert!(a.summaries[0].slope.is_none());
    }

    #[test]
    fn uncensored_l_statistic_is_ks_distance() {
        let m = ParametricModel::new(
            Marginal::Exponential { rate: 1.0 },
            Marginal::Exponential { rate: 1e-12 },
        )
        .unwrap();
        let s =
            gen_censored_dataset_seeded(SchemeKind::Iid, &m.lifetime, SchemeKind::Iid, &m.censoring, 300, 5).unwrap();
        assert_eq!(s.uncensored_count(), 300);
        let tau = 50.0;
        let grid = EvaluationGrid::with_sample_points(tau, 16, s.x().iter().copied()).unwrap();
        let stat = lemma_statistic(&s, &m, Statistic::Lemma3L, &grid).unwrap();
        // classical two-sided Kolmogorov-Smirnov statistic
        let mut x = s.x().to_vec();
        x.sort_by(f64::total_cmp);
        let nf = x.len() as f64;
        let ks = x
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let f = 1.0 - (-v).exp();
                ((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
            })
            .fold(0.0, f64::max);
        assert!((stat - ks).abs() < 1e-9, "{stat} vs {ks}");
    }

    #[test]
    fn report_files_are_stable() {
        let report = run_experiment(&config()).unwrap();
        let mut csv1 = Vec::new();
        write_records_csv(&report, &mut csv1).unwrap();
        let records = read_records_csv(csv1.as_slice()).unwrap();
        let again = summarize(&config(), records).unwrap();
        let (mut j1, mut j2) = (Vec::new(), Vec::new());
        write_summary_json(&report, &mut j1).unwrap();
        write_summary_json(&again, &mut j2).unwrap();
        assert_eq!(j1, j2);
        let mut svg = Vec::new();
        write_svg(&report.summaries[0], &mut svg).unwrap();
        let svg = String::from_utf8(svg).unwrap();
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    }
}
