use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use lensirs::baselines::Scheme;
use lensirs::harness::{load_scenario_over, run_experiment, ExperimentConfig, ExperimentKind};
use lensirs::system::Scenario;

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

/// Runs seeded energy-efficiency experiments and writes CSV results.
#[derive(Debug, Parser)]
#[command(name = "lensirs", version)]
struct Args {
    /// JSON scenario overrides, applied on top of the profile.
    #[arg(long)]
    scenario: Option<PathBuf>,

    /// convergence, sweep-n, sweep-k or sweep-rf.
    #[arg(long, value_parser = parse_kind)]
    experiment: ExperimentKind,

    /// Comma-separated sweep values; defaults to the scenario's own value.
    #[arg(long, value_delimiter = ',')]
    sweep: Vec<usize>,

    /// Comma-separated schemes: proposed, zf-rbf, tbf-maxirs, fully-digital.
    #[arg(long, value_delimiter = ',', value_parser = parse_scheme, default_value = "proposed")]
    schemes: Vec<Scheme>,

    /// Seed range `a..b` (half-open) or a single seed.
    #[arg(long, value_parser = parse_seeds, default_value = "0..1")]
    seeds: SeedRange,

    #[arg(long, default_value = "results")]
    out: PathBuf,

    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,

    /// Run every tuple on the calling thread.
    #[arg(long)]
    sequential: bool,

    /// Record per-run wall-clock seconds. Output is no longer reproducible.
    #[arg(long)]
    timing: bool,

    /// Starts per phase optimization; extra starts use seeded random phases.
    #[arg(long)]
    reflect_starts: Option<usize>,
}

#[derive(Debug, Clone)]
struct SeedRange(Vec<u64>);

fn parse_kind(s: &str) -> Result<ExperimentKind, String> {
    s.parse().map_err(|e: lensirs::Error| e.to_string())
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    s.parse().map_err(|e: lensirs::Error| e.to_string())
}

fn parse_seeds(s: &str) -> Result<SeedRange, String> {
    let num = |t: &str| t.trim().parse::<u64>().map_err(|e| format!("bad seed `{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => {
            let (a, b) = (num(a)?, num(b)?);
            if a >= b {
                return Err(format!("empty seed range {a}..{b}"));
            }
            Ok(SeedRange((a..b).collect()))
        }
        None => Ok(SeedRange(vec![num(s)?])),
    }
}

fn exit_code(class: &str) -> u8 {
    match class {
        "config" => 2,
        "domain" => 3,
        "infeasible" => 4,
        "budget" => 5,
        _ => 6,
    }
}

fn run(args: Args) -> lensirs::Result<()> {
    let base = match args.profile {
        Profile::Desk => Scenario::desk(),
        Profile::Full => Scenario::full(),
    };
    let scenario = match &args.scenario {
        Some(path) => load_scenario_over(path, base)?,
        None => {
            base.validate()?;
            base
        }
    };
    let mut cfg = ExperimentConfig::new(scenario, args.experiment, args.out);
    cfg.sweep = args.sweep;
    cfg.schemes = args.schemes;
    cfg.seeds = args.seeds.0;
    cfg.parallel = !args.sequential;
    cfg.record_wallclock = args.timing;
    if let Some(n) = args.reflect_starts {
        cfg.options.alternating.reflect.multi_start = n.max(1);
    }

    let out = run_experiment(&cfg)?;
    for f in out.failures() {
        if let Err(e) = &f.result {
            eprintln!("warning: {} seed {} sweep {}: {e}", f.scheme, f.seed, f.sweep_value);
        }
    }
    for path in &out.files {
        println!("{}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error [{}]: {e}", e.class());
            ExitCode::from(exit_code(e.class()))
        }
    }
}
