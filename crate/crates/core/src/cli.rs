//! Command line front end: argument definitions and the subcommands.
//!
//! Every subcommand reads a [`RunConfig`] file; flags override individual
//! fields. Fields are written as grid files, everything meant for plotting
//! as CSV, and run summaries as JSON.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::aware::{solve_aware_into, FileSink, PolicyField, SliceSink, ValueField};
use crate::config::{Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::gridfile::{FieldKind, GridFile, GridHeader};
use crate::model::{SimState, Tack};
use crate::neutral::{solve_neutral_with, NeutralField};
use crate::output::{
    write_compare_csv, write_ecdf_csv, write_json, write_path_csv, write_slice_csv, CompareRow,
};
use crate::simulate::{monte_carlo, Controller, Fallback, FallbackTrigger, MonteCarlo, Summary};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "SAILRISK_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "sailrisk",
    version,
    about = "Risk-aware sailboat routing under an uncertain wind"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the expected-time-optimal policy.
    SolveNeutral(SolveNeutralArgs),
    /// Solve for the deadline-aware policy on every budget slice.
    SolveAware(SolveAwareArgs),
    /// Monte Carlo simulation of one policy from a start state.
    Simulate(SimulateArgs),
    /// Simulate both policies and tabulate their arrival-time distributions.
    Compare(CompareArgs),
    /// Describe a grid file.
    Info(InfoArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Run configuration (JSON).
    #[arg(long, short)]
    pub config: PathBuf,
    /// Overrides the configured output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveNeutralArgs {
    #[command(flatten)]
    pub common: Common,
    /// Also write the solution as `neutral_slice.csv`.
    #[arg(long)]
    pub emit_csv: bool,
}

#[derive(Debug, Args)]
pub struct SolveAwareArgs {
    #[command(flatten)]
    pub common: Common,
    /// Budget slice indices to write as `slice_k<k>.csv`.
    #[arg(long, value_delimiter = ',')]
    pub emit_slices: Vec<usize>,
}

/// Start state `r,theta,q` with `theta` in radians and `q` in {1, 2}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Start {
    pub r: f64,
    pub theta: f64,
    pub tack: Tack,
}

impl FromStr for Start {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let [r, theta, q] = parts.as_slice() else {
            return Err(format!("expected r,theta,q, got `{s}`"));
        };
        let num = |x: &str| x.parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
        let q: u8 = q.parse().map_err(|e| format!("`{q}`: {e}"))?;
        Ok(Start {
            r: num(r)?,
            theta: num(theta)?,
            tack: Tack::from_q(q).map_err(|e| e.to_string())?,
        })
    }
}

impl Start {
    fn state(&self, deadline: f64) -> SimState {
        SimState::new(self.r, self.theta, self.tack, deadline, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyChoice {
    /// Minimize expected arrival time.
    Neutral,
    /// Maximize the probability of arriving by the deadline.
    Aware,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FallbackChoice {
    /// Switch to the risk-neutral policy.
    Neutral,
    /// Stop sailing.
    Idle,
}

#[derive(Debug, Clone, Args)]
pub struct SimFlags {
    /// Start state `r,theta,q`.
    #[arg(long)]
    pub start: Start,
    /// Deadline `s_hat`.
    #[arg(long)]
    pub deadline: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Write the first `n` paths as CSV.
    #[arg(long)]
    pub save_paths: Option<usize>,
    /// What the aware policy does once the deadline is lost.
    #[arg(long, value_enum, default_value = "neutral")]
    pub fallback: FallbackChoice,
    /// Give up on the deadline once `w` is zero instead of once the budget is
    /// spent.
    #[arg(long)]
    pub zero_probability_trigger: bool,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimFlags,
    #[arg(long, value_enum)]
    pub policy: PolicyChoice,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub sim: SimFlags,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    pub path: PathBuf,
    /// Scan the payload for its range and switch count.
    #[arg(long)]
    pub stats: bool,
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::SolveNeutral(args) => solve_neutral_cmd(&args),
        Command::SolveAware(args) => solve_aware_cmd(&args),
        Command::Simulate(args) => simulate_cmd(&args),
        Command::Compare(args) => compare_cmd(&args),
        Command::Info(args) => info_cmd(&args),
    }
}

fn load(common: &Common) -> Result<Resolved> {
    let mut resolved = RunConfig::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        resolved.config.paths.output_dir = dir.clone();
    }
    Ok(resolved)
}

fn create_output_dir(run: &Resolved) -> Result<()> {
    let dir = run.output_dir();
    std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))
}

fn solve_neutral_cmd(args: &SolveNeutralArgs) -> Result<()> {
    let run = load(&args.common)?;
    create_output_dir(&run)?;
    let options = run.config.solver.neutral;
    let field = solve_neutral_with(&run.grid, &run.params, &options, |iteration, residual| {
        println!("iteration {iteration} residual {residual:e}");
    })?;
    let (value_path, policy_path) = run.neutral_paths();
    field.write(&value_path, &policy_path, &run.neutral_hash())?;
    if args.emit_csv {
        let path = run.output_dir().join("neutral_slice.csv");
        write_slice_csv(&path, &run.grid, field.values(), field.encoded_policy())?;
    }
    println!(
        "wrote {} and {} ({} capped cells)",
        value_path.display(),
        policy_path.display(),
        field.capped_count()
    );
    Ok(())
}

/// Streams slices to the grid files and copies requested ones to CSV.
struct EmittingSink<'a> {
    files: FileSink,
    emit: BTreeSet<usize>,
    run: &'a Resolved,
    report_every: usize,
}

impl SliceSink for EmittingSink<'_> {
    fn accept(&mut self, k: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        self.files.accept(k, values, policy)?;
        if self.emit.contains(&k) {
            let path = self.run.output_dir().join(format!("slice_k{k}.csv"));
            write_slice_csv(&path, &self.run.grid, values, policy)?;
        }
        if k.is_multiple_of(self.report_every) {
            println!("slice {k}/{}", self.run.grid.n_s);
        }
        Ok(())
    }
}

fn solve_aware_cmd(args: &SolveAwareArgs) -> Result<()> {
    let run = load(&args.common)?;
    if let Some(&k) = args.emit_slices.iter().find(|&&k| k > run.grid.n_s) {
        return Err(Error::Config(format!(
            "slice {k} is beyond the last slice {}",
            run.grid.n_s
        )));
    }
    create_output_dir(&run)?;
    let (value_path, policy_path) = run.aware_paths();
    let files = FileSink::create(
        &value_path,
        &policy_path,
        &run.grid,
        &run.params,
        &run.aware_hash(),
    )?;
    let mut sink = EmittingSink {
        files,
        emit: args.emit_slices.iter().copied().collect(),
        run: &run,
        report_every: (run.grid.n_s / 20).max(1),
    };
    let stats = solve_aware_into(&run.grid, &run.params, &run.config.solver.aware, &mut sink)?;
    sink.files.finish()?;
    println!(
        "wrote {} and {} ({} cells searched, {} pruned, {} switches)",
        value_path.display(),
        policy_path.display(),
        stats.searched,
        stats.pruned,
        stats.switches
    );
    Ok(())
}

/// Opens a grid file's header and checks it came from this configuration.
fn check_origin(path: &Path, kind: FieldKind, hash: &str) -> Result<GridHeader> {
    let header = GridFile::read_header(path)?;
    if header.kind != kind {
        return Err(Error::Data(format!(
            "{}: expected a {kind:?} file",
            path.display()
        )));
    }
    if header.config_hash != hash {
        return Err(Error::Data(format!(
            "{} was produced by a different configuration; solve again",
            path.display()
        )));
    }
    Ok(header)
}

fn open_neutral(run: &Resolved) -> Result<NeutralField> {
    let (value_path, policy_path) = run.neutral_paths();
    let hash = run.neutral_hash();
    check_origin(&value_path, FieldKind::NeutralValue, &hash)?;
    check_origin(&policy_path, FieldKind::NeutralPolicy, &hash)?;
    NeutralField::open(&value_path, &policy_path)
}

fn open_aware(run: &Resolved) -> Result<(ValueField, PolicyField)> {
    let (value_path, policy_path) = run.aware_paths();
    let hash = run.aware_hash();
    check_origin(&value_path, FieldKind::AwareValue, &hash)?;
    check_origin(&policy_path, FieldKind::AwarePolicy, &hash)?;
    Ok((
        ValueField::open(&value_path)?,
        PolicyField::open(&policy_path)?,
    ))
}

fn apply_flags(run: &mut Resolved, flags: &SimFlags) -> Result<()> {
    let sim = &mut run.config.sim;
    if let Some(seed) = flags.seed {
        sim.seed = seed;
    }
    if let Some(n) = flags.samples {
        sim.n_samples = n;
    }
    if let Some(dt) = flags.dt {
        sim.dt = dt;
    }
    if let Some(n) = flags.save_paths {
        sim.save_paths = n;
    }
    if flags.zero_probability_trigger {
        sim.trigger = FallbackTrigger::ZeroProbability;
    }
    sim.validate(&run.params, run.grid.s_max)
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    config_hash: String,
    start: [f64; 3],
    #[serde(flatten)]
    summary: &'a Summary,
}

fn write_outputs(
    run: &Resolved,
    name: &str,
    hash: String,
    start: &Start,
    mc: &MonteCarlo,
) -> Result<()> {
    let dir = run.output_dir();
    write_ecdf_csv(&dir.join(format!("{name}_ecdf.csv")), &mc.ecdf)?;
    let report = Report {
        config_hash: hash,
        start: [start.r, start.theta, f64::from(start.tack.q())],
        summary: &mc.summary,
    };
    write_json(&dir.join(format!("{name}_summary.json")), &report)?;
    for (n, record) in mc
        .records
        .iter()
        .take(run.config.sim.save_paths)
        .enumerate()
    {
        write_path_csv(&dir.join(format!("{name}_path_{n}.csv")), &record.path)?;
    }
    let s = &mc.summary;
    println!(
        "{name}: success by {} = {:.4}, mean arrival {}, {} censored of {}",
        s.deadline,
        s.success_fraction,
        s.mean_arrival_time
            .map_or("n/a".into(), |t| format!("{t:.3}")),
        s.n_censored,
        s.n_samples
    );
    Ok(())
}

fn simulate_cmd(args: &SimulateArgs) -> Result<()> {
    let mut run = load(&args.common)?;
    apply_flags(&mut run, &args.sim)?;
    let start = args.sim.start.state(args.sim.deadline);
    match args.policy {
        PolicyChoice::Neutral => {
            let neutral = open_neutral(&run)?;
            let mc = monte_carlo(Controller::RiskNeutral(&neutral), &start, &run.config.sim)?;
            write_outputs(&run, "neutral", run.neutral_hash(), &args.sim.start, &mc)
        }
        PolicyChoice::Aware => {
            let (value, policy) = open_aware(&run)?;
            let neutral;
            let fallback = match args.sim.fallback {
                FallbackChoice::Neutral => {
                    neutral = open_neutral(&run)?;
                    Fallback::RiskNeutral(&neutral)
                }
                FallbackChoice::Idle => Fallback::Idle,
            };
            let controller = Controller::ThresholdAware {
                value: &value,
                policy: &policy,
                fallback,
            };
            let mc = monte_carlo(controller, &start, &run.config.sim)?;
            write_outputs(&run, "aware", run.aware_hash(), &args.sim.start, &mc)
        }
    }
}

fn compare_cmd(args: &CompareArgs) -> Result<()> {
    let mut run = load(&args.common)?;
    apply_flags(&mut run, &args.sim)?;
    let start = args.sim.start.state(args.sim.deadline);
    let neutral = open_neutral(&run)?;
    let (value, policy) = open_aware(&run)?;
    let fallback = match args.sim.fallback {
        FallbackChoice::Neutral => Fallback::RiskNeutral(&neutral),
        FallbackChoice::Idle => Fallback::Idle,
    };
    let risk_neutral = monte_carlo(Controller::RiskNeutral(&neutral), &start, &run.config.sim)?;
    let aware = monte_carlo(
        Controller::ThresholdAware {
            value: &value,
            policy: &policy,
            fallback,
        },
        &start,
        &run.config.sim,
    )?;
    write_outputs(
        &run,
        "neutral",
        run.neutral_hash(),
        &args.sim.start,
        &risk_neutral,
    )?;
    write_outputs(&run, "aware", run.aware_hash(), &args.sim.start, &aware)?;
    let grid = value.grid();
    let curve = value.budget_curve(
        start.tack,
        grid.nearest_r(start.r),
        grid.nearest_theta(start.theta),
    );
    let rows: Vec<CompareRow> = curve
        .iter()
        .enumerate()
        .map(|(k, &w)| {
            let s = grid.s(k);
            CompareRow {
                s,
                w,
                ecdf_neutral: risk_neutral.ecdf.at(s),
                ecdf_aware: aware.ecdf.at(s),
            }
        })
        .collect();
    let path = run.output_dir().join("compare.csv");
    write_compare_csv(&path, &rows)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn info_cmd(args: &InfoArgs) -> Result<()> {
    let header = GridFile::read_header(&args.path)?;
    println!("{}", serde_json::to_string_pretty(&header)?);
    println!("payload values: {}", header.payload_len());
    if args.stats {
        let file = GridFile::open(&args.path)?;
        let (mut lo, mut hi, mut switches) = (f64::INFINITY, f64::NEG_INFINITY, 0usize);
        for &v in file.data.iter() {
            if header.kind.is_policy() && v < 0.0 {
                switches += 1;
                continue;
            }
            lo = lo.min(v);
            hi = hi.max(v);
        }
        println!("range: [{lo}, {hi}]");
        if header.kind.is_policy() {
            println!("switch cells: {switches}");
        }
    }
    Ok(())
}

/// Configures the global thread pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot start {threads} threads: {e}")))
}
