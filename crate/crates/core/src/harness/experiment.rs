//! Seeded experiment fan-out and CSV output.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::baselines::{run_baseline, BaselineOptions, BaselineResult, Scheme};
use crate::channel::synth_channel_set;
use crate::error::{Error, Result};
use crate::par;
use crate::system::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    /// One row per outer iteration; the sweep runs over IRS element counts.
    Convergence,
    SweepN,
    SweepK,
    SweepRf,
}

impl ExperimentKind {
    pub fn id(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::SweepN => "sweep-n",
            ExperimentKind::SweepK => "sweep-k",
            ExperimentKind::SweepRf => "sweep-rf",
        }
    }

    /// The scenario value a sweep replaces, used when no sweep is given.
    fn current(self, s: &Scenario) -> usize {
        match self {
            ExperimentKind::Convergence | ExperimentKind::SweepN => s.n_elements,
            ExperimentKind::SweepK => s.k_users,
            ExperimentKind::SweepRf => s.n_rf,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            ExperimentKind::Convergence,
            ExperimentKind::SweepN,
            ExperimentKind::SweepK,
            ExperimentKind::SweepRf,
        ]
        .into_iter()
        .find(|k| k.id() == s)
        .ok_or_else(|| Error::config("experiment", format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub kind: ExperimentKind,
    /// Positive integers in increasing order; empty means the scenario value.
    pub sweep: Vec<usize>,
    pub schemes: Vec<Scheme>,
    pub seeds: Vec<u64>,
    pub out_dir: PathBuf,
    pub parallel: bool,
    /// Write measured run times; otherwise the column is zero and output is
    /// byte-identical across runs.
    pub record_wallclock: bool,
    pub options: BaselineOptions,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, kind: ExperimentKind, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            scenario,
            kind,
            sweep: Vec::new(),
            schemes: vec![Scheme::Proposed],
            seeds: vec![0],
            out_dir: out_dir.into(),
            parallel: true,
            record_wallclock: false,
            options: BaselineOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::config("seeds", "need at least one seed"));
        }
        if self.schemes.is_empty() {
            return Err(Error::config("schemes", "need at least one scheme"));
        }
        if self.sweep.contains(&0) {
            return Err(Error::config("sweep", "values must be positive"));
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("sweep", "values must be strictly increasing"));
        }
        for &v in &self.sweep_values() {
            apply_sweep(self.kind, &self.scenario, v)?;
        }
        Ok(())
    }

    pub fn sweep_values(&self) -> Vec<usize> {
        if self.sweep.is_empty() {
            vec![self.kind.current(&self.scenario)]
        } else {
            self.sweep.clone()
        }
    }
}

/// The scenario for one sweep point.
pub fn apply_sweep(kind: ExperimentKind, base: &Scenario, value: usize) -> Result<Scenario> {
    let s = match kind {
        ExperimentKind::Convergence | ExperimentKind::SweepN => Scenario {
            n_elements: value,
            ..base.clone()
        },
        ExperimentKind::SweepK => base.with_users(value),
        ExperimentKind::SweepRf => Scenario {
            n_rf: value,
            ..base.clone()
        },
    };
    s.validate().map_err(|e| match e {
        Error::Config { path, msg } => Error::config(format!("sweep={value}: {path}"), msg),
        other => other,
    })?;
    Ok(s)
}

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunRow {
    pub seed: u64,
    pub sweep_value: usize,
    pub iter: usize,
    pub ee_per_hz: f64,
    pub se_per_hz: f64,
    pub power_w: f64,
    pub min_sinr_margin_db: f64,
    pub wallclock_s: f64,
}

pub const RUN_COLUMNS: [&str; 8] = [
    "seed",
    "sweep_value",
    "iter",
    "ee_per_hz",
    "se_per_hz",
    "power_w",
    "min_sinr_margin_db",
    "wallclock_s",
];

pub const SUMMARY_COLUMNS: [&str; 10] = [
    "sweep_value",
    "runs",
    "failed",
    "ee_mean",
    "ee_stderr",
    "se_mean",
    "se_stderr",
    "power_mean",
    "power_stderr",
    "margin_db_min",
];

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Outcome of one (scheme, sweep value, seed) tuple.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scheme: Scheme,
    pub sweep_value: usize,
    pub seed: u64,
    pub result: std::result::Result<BaselineResult, String>,
    pub wallclock_s: f64,
}

/// Synthesizes the channels for `seed` and runs one scheme.
pub fn run_single(scheme: Scheme, scenario: &Scenario, seed: u64, opts: &BaselineOptions) -> Result<BaselineResult> {
    let channels = synth_channel_set(scenario, seed)?;
    run_baseline(scheme, &channels, scenario, opts)
}

fn rows_of(kind: ExperimentKind, out: &RunOutcome, record_wallclock: bool) -> Vec<RunRow> {
    let wallclock_s = if record_wallclock { out.wallclock_s } else { 0.0 };
    let base = RunRow {
        seed: out.seed,
        sweep_value: out.sweep_value,
        iter: 0,
        ee_per_hz: f64::NAN,
        se_per_hz: f64::NAN,
        power_w: f64::NAN,
        min_sinr_margin_db: f64::NAN,
        wallclock_s,
    };
    let Ok(res) = &out.result else {
        return vec![base];
    };
    let recs = res.trace.records();
    if kind == ExperimentKind::Convergence && !recs.is_empty() {
        return recs
            .iter()
            .map(|r| RunRow {
                iter: r.iteration,
                ee_per_hz: r.ee,
                se_per_hz: r.sum_rate,
                power_w: r.total_power,
                min_sinr_margin_db: r.min_sinr_margin_db,
                ..base
            })
            .collect();
    }
    vec![RunRow {
        iter: recs.last().map_or(0, |r| r.iteration),
        ee_per_hz: res.ee,
        se_per_hz: res.se,
        power_w: res.total_power,
        min_sinr_margin_db: res.min_sinr_margin_db,
        ..base
    }]
}

fn write_runs(path: &Path, rows: &[RunRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RUN_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.seed.to_string(),
            r.sweep_value.to_string(),
            r.iter.to_string(),
            num(r.ee_per_hz),
            num(r.se_per_hz),
            num(r.power_w),
            num(r.min_sinr_margin_db),
            num(r.wallclock_s),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-sweep-value statistics of the terminal row of every run.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub scheme: Scheme,
    pub sweep_value: usize,
    pub runs: usize,
    pub failed: usize,
    pub ee: (f64, f64),
    pub se: (f64, f64),
    pub power: (f64, f64),
    pub margin_db_min: f64,
}

pub fn summarize(scheme: Scheme, outcomes: &[RunOutcome]) -> Vec<SummaryRow> {
    let mut values: Vec<usize> = outcomes.iter().map(|o| o.sweep_value).collect();
    values.sort_unstable();
    values.dedup();
    values
        .into_iter()
        .map(|v| {
            let ok: Vec<&BaselineResult> = outcomes
                .iter()
                .filter(|o| o.sweep_value == v)
                .filter_map(|o| o.result.as_ref().ok())
                .collect();
            let runs = outcomes.iter().filter(|o| o.sweep_value == v).count();
            let col = |f: fn(&BaselineResult) -> f64| mean_stderr(&ok.iter().map(|r| f(r)).collect::<Vec<_>>());
            SummaryRow {
                scheme,
                sweep_value: v,
                runs,
                failed: runs - ok.len(),
                ee: col(|r| r.ee),
                se: col(|r| r.se),
                power: col(|r| r.total_power),
                margin_db_min: ok.iter().map(|r| r.min_sinr_margin_db).fold(f64::INFINITY, f64::min),
            }
        })
        .collect()
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["scheme"];
    header.extend(SUMMARY_COLUMNS);
    w.write_record(&header)?;
    for r in rows {
        w.write_record([
            r.scheme.id().to_string(),
            r.sweep_value.to_string(),
            r.runs.to_string(),
            r.failed.to_string(),
            num(r.ee.0),
            num(r.ee.1),
            num(r.se.0),
            num(r.se.1),
            num(r.power.0),
            num(r.power.1),
            num(r.margin_db_min),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    /// Per-scheme CSVs in scheme order, then the summary.
    pub files: Vec<PathBuf>,
    pub outcomes: Vec<RunOutcome>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    pub fn failures(&self) -> impl Iterator<Item = &RunOutcome> {
        self.outcomes.iter().filter(|o| o.result.is_err())
    }
}

/// Runs every (scheme, sweep value, seed) tuple and writes one CSV per
/// scheme as soon as that scheme finishes, then the summary. Failed runs
/// appear as a single NaN row.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    let values = cfg.sweep_values();
    let scenarios: Vec<Scenario> = values
        .iter()
        .map(|&v| apply_sweep(cfg.kind, &cfg.scenario, v))
        .collect::<Result<_>>()?;
    let mut files = Vec::new();
    let mut all = Vec::new();
    let mut summary = Vec::new();
    for &scheme in &cfg.schemes {
        let tuples: Vec<(usize, u64)> = (0..values.len())
            .flat_map(|vi| cfg.seeds.iter().map(move |&s| (vi, s)))
            .collect();
        let mut outcomes = par::map(&tuples, cfg.parallel, |&(vi, seed)| {
            let start = Instant::now();
            let result = run_single(scheme, &scenarios[vi], seed, &cfg.options).map_err(|e| e.to_string());
            RunOutcome {
                scheme,
                sweep_value: values[vi],
                seed,
                result,
                wallclock_s: start.elapsed().as_secs_f64(),
            }
        });
        outcomes.sort_by_key(|o| (o.sweep_value, o.seed));
        let mut rows: Vec<RunRow> = outcomes
            .iter()
            .flat_map(|o| rows_of(cfg.kind, o, cfg.record_wallclock))
            .collect();
        rows.sort_by_key(|r| (r.sweep_value, r.seed, r.iter));
        let path = cfg.out_dir.join(format!("{}_{}.csv", cfg.kind, scheme));
        write_runs(&path, &rows)?;
        files.push(path);
        summary.extend(summarize(scheme, &outcomes));
        all.extend(outcomes);
    }
    let path = cfg.out_dir.join(format!("{}_summary.csv", cfg.kind));
    write_summary(&path, &summary)?;
    files.push(path);
    Ok(ExperimentOutput {
        files,
        outcomes: all,
        summary,
    })
}
