//! Closed-loop Monte Carlo. Euler-Maruyama paths of the reduced dynamics are
//! driven by a tabulated policy, read at the nearest gridpoint.
//!
//! All paths of a batch advance together, a block of steps at a time. With a
//! memory-mapped policy every path then reads from the same few budget
//! slices, which keeps page-cache traffic local even when the field is far
//! larger than memory.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aware::{PolicyField, ValueField};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Rounding};
use crate::model::{drift_with_speed, to_xy, wrap_angle, Action, ModelParams, SimState};
use crate::neutral::NeutralField;
use crate::survival::{kaplan_meier, EcdfCurve, Sample};

/// `w` at or above this counts as certain success for the deadline upgrade.
pub const CERTAIN: f64 = 1.0 - 1e-6;

/// Steps every path takes before the batch moves on.
const BLOCK: u64 = 64;

/// When a threshold-aware run gives up on the deadline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackTrigger {
    /// Once the remaining budget is negative.
    #[default]
    BudgetExhausted,
    /// Once `w` at the nearest gridpoint is zero.
    ZeroProbability,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimConfig {
    pub dt: f64,
    pub n_samples: usize,
    /// Paths still sailing at this time are censored; `4 * s_max` when unset.
    pub t_max: Option<f64>,
    pub seed: u64,
    /// How the remaining budget is mapped onto a slice.
    pub rounding: Rounding,
    pub trigger: FallbackTrigger,
    /// Number of leading paths whose states are kept.
    pub save_paths: usize,
    /// Keep every `path_stride`-th state of a saved path.
    pub path_stride: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            dt: 0.005,
            n_samples: 10_000,
            t_max: None,
            seed: 0,
            rounding: Rounding::Nearest,
            trigger: FallbackTrigger::BudgetExhausted,
            save_paths: 0,
            path_stride: 20,
        }
    }
}

impl SimConfig {
    pub fn t_max(&self, s_max: f64) -> f64 {
        self.t_max.unwrap_or(4.0 * s_max)
    }

    pub fn validate(&self, params: &ModelParams, s_max: f64) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!(
                "time step must be positive, got {}",
                self.dt
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::Config("need at least one sample".into()));
        }
        let t_max = self.t_max(s_max);
        if !(t_max >= s_max) || !t_max.is_finite() {
            return Err(Error::Config(format!(
                "simulation cap {t_max} is below the largest deadline {s_max}"
            )));
        }
        if self.path_stride == 0 {
            return Err(Error::Config("path stride must be at least 1".into()));
        }
        freeze_steps(params.switch_time, self.dt).map(|_| ())
    }
}

fn freeze_steps(switch_time: f64, dt: f64) -> Result<u32> {
    let n = (switch_time / dt).round();
    if n < 1.0 || (n * dt - switch_time).abs() > 1e-9 * switch_time {
        return Err(Error::Config(format!(
            "switch time {switch_time} is not a whole number of time steps {dt}"
        )));
    }
    Ok(n as u32)
}

/// What a threshold-aware run does once it gives up on the deadline.
#[derive(Debug, Clone, Copy)]
pub enum Fallback<'a> {
    /// Follow the risk-neutral policy.
    RiskNeutral(&'a NeutralField),
    /// Hold the bow into the wind and do nothing.
    Idle,
}

/// The feedback law a simulation follows.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    RiskNeutral(&'a NeutralField),
    ThresholdAware {
        value: &'a ValueField,
        policy: &'a PolicyField,
        fallback: Fallback<'a>,
    },
}

impl<'a> Controller<'a> {
    pub fn params(&self) -> &'a ModelParams {
        match self {
            Controller::RiskNeutral(f) => f.params(),
            Controller::ThresholdAware { value, .. } => value.params(),
        }
    }

    /// Largest deadline the driving field covers.
    pub fn s_max(&self) -> f64 {
        match self {
            Controller::RiskNeutral(f) => f.grid().s_max,
            Controller::ThresholdAware { value, .. } => value.grid().s_max,
        }
    }

    fn validate(&self) -> Result<()> {
        if let Controller::ThresholdAware {
            value,
            policy,
            fallback,
        } = self
        {
            if value.grid() != policy.grid() {
                return Err(Error::Config(
                    "value and policy fields are on different grids".into(),
                ));
            }
            if let Fallback::RiskNeutral(f) = fallback {
                if f.params() != value.params() {
                    return Err(Error::Config(
                        "risk-neutral and risk-aware fields come from different models".into(),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// A simulated boat: its state plus any tack switch in progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boat {
    pub state: SimState,
    /// Steps left in the current tack switch; zero while sailing.
    pub freeze_steps: u32,
}

impl Boat {
    pub fn new(state: SimState) -> Self {
        Boat {
            state,
            freeze_steps: 0,
        }
    }

    pub fn is_switching(&self) -> bool {
        self.freeze_steps > 0
    }
}

/// Advances `boat` by one Euler-Maruyama step of length `dt`.
///
/// `Steer(u)` moves the boat and spends `dt` of budget. `Switch` spends the
/// switch time `C` at once, then holds the boat in place for `C / dt` steps
/// while the wind keeps moving; the tack flips on the last of them. `action`
/// is ignored while a switch is in progress. Every step draws one standard
/// normal, shared by `theta` and `phi`.
pub fn step_euler_maruyama(
    boat: &Boat,
    action: Action,
    dt: f64,
    params: &ModelParams,
    rng: &mut impl Rng,
) -> Result<Boat> {
    let z: f64 = rng.sample(StandardNormal);
    let noise = params.wind.sigma * dt.sqrt() * z;
    let a = params.wind.drift;
    let mut next = *boat;
    next.state.phi += a * dt + noise;
    if !boat.is_switching() {
        match action {
            Action::Steer(u) => {
                let s = &boat.state;
                let (r_d, theta_d) =
                    drift_with_speed(params.polar.speed(u)?, s.r, s.theta, s.tack.sign() * u, a);
                next.state.r += dt * r_d;
                next.state.theta = wrap_angle(s.theta + dt * theta_d + noise);
                next.state.budget -= dt;
                return Ok(next);
            }
            Action::Switch => {
                next.state.budget -= params.switch_time;
                next.freeze_steps = freeze_steps(params.switch_time, dt)?;
            }
        }
    }
    next.state.theta = wrap_angle(boat.state.theta + a * dt + noise);
    next.freeze_steps -= 1;
    if next.freeze_steps == 0 {
        next.state.tack = next.state.tack.opposite();
    }
    Ok(next)
}

/// Smallest grid budget at which success from `start` is already certain, if
/// it is below `s_hat`; otherwise `s_hat`.
pub fn deadline_upgrade(field: &ValueField, start: &SimState, s_hat: f64) -> Result<f64> {
    let grid = field.grid();
    if !(0.0..=grid.s_max).contains(&s_hat) {
        return Err(Error::Domain {
            what: "deadline",
            value: s_hat,
            domain: "[0, s_max]",
        });
    }
    let curve = field.budget_curve(
        start.tack,
        grid.nearest_r(start.r),
        grid.nearest_theta(start.theta),
    );
    Ok(upgrade_from_curve(&curve, grid.ds(), s_hat))
}

fn upgrade_from_curve(curve: &[f64], ds: f64, s_hat: f64) -> f64 {
    match curve.iter().position(|&w| w >= CERTAIN) {
        Some(k) if (k as f64) * ds < s_hat => k as f64 * ds,
        _ => s_hat,
    }
}

/// One saved state along a path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub t: f64,
    pub r: f64,
    pub theta: f64,
    pub q: u8,
    pub s: f64,
    pub phi: f64,
    pub x: f64,
    pub y: f64,
}

impl PathPoint {
    fn new(t: f64, state: &SimState) -> Self {
        let (x, y) = to_xy(state);
        PathPoint {
            t,
            r: state.r,
            theta: state.theta,
            q: state.tack.q(),
            s: state.budget,
            phi: state.phi,
            x,
            y,
        }
    }
}

/// Outcome of one simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    /// Arrival time, or the censoring time when `censored`.
    pub time: f64,
    pub censored: bool,
    pub switches: u32,
    /// Saved states; empty unless requested.
    pub path: Vec<PathPoint>,
}

impl TrajectoryRecord {
    pub fn arrival(&self) -> Option<f64> {
        (!self.censored).then_some(self.time)
    }
}

/// Per-path state of a running batch.
struct Walker {
    boat: Boat,
    start_budget: f64,
    steps: u64,
    sail_steps: u64,
    switches: u32,
    fallen_back: bool,
    rng: ChaCha8Rng,
    done: Option<bool>,
    path: Option<Vec<PathPoint>>,
}

/// Shared read-only inputs of a batch.
struct Context<'a> {
    controller: Controller<'a>,
    params: &'a ModelParams,
    config: &'a SimConfig,
    max_steps: u64,
}

impl Context<'_> {
    fn decide(&self, w: &mut Walker) -> Action {
        let s = &w.boat.state;
        match self.controller {
            Controller::RiskNeutral(f) => neutral_action(f, s),
            Controller::ThresholdAware {
                value,
                policy,
                fallback,
            } => {
                let grid = policy.grid();
                let (i, j) = lookup(grid, self.params, s);
                let k = grid.budget_index(s.budget, self.config.rounding);
                if !w.fallen_back {
                    w.fallen_back = match self.config.trigger {
                        FallbackTrigger::BudgetExhausted => s.budget < 0.0,
                        FallbackTrigger::ZeroProbability => value.get(k, s.tack, i, j) <= 0.0,
                    };
                }
                if !w.fallen_back {
                    return policy.action(k, s.tack, i, j);
                }
                match fallback {
                    Fallback::RiskNeutral(f) => neutral_action(f, s),
                    Fallback::Idle => Action::Steer(0.0),
                }
            }
        }
    }

    fn advance(&self, w: &mut Walker) -> Result<()> {
        let dt = self.config.dt;
        let action = if w.boat.is_switching() {
            Action::Switch
        } else {
            let action = self.decide(w);
            match action {
                Action::Switch => w.switches += 1,
                Action::Steer(_) => w.sail_steps += 1,
            }
            action
        };
        w.boat = step_euler_maruyama(&w.boat, action, dt, self.params, &mut w.rng)?;
        w.steps += 1;
        // recomputed from the counters so the bookkeeping carries no drift
        w.boat.state.budget = w.start_budget
            - w.sail_steps as f64 * dt
            - f64::from(w.switches) * self.params.switch_time;
        let t = w.steps as f64 * dt;
        if w.boat.state.r <= self.params.target_radius {
            w.done = Some(true);
        } else if w.steps >= self.max_steps {
            w.done = Some(false);
        }
        if let Some(path) = &mut w.path {
            if w.done.is_some() || w.steps.is_multiple_of(self.config.path_stride as u64) {
                path.push(PathPoint::new(t, &w.boat.state));
            }
        }
        Ok(())
    }

    fn walker(&self, start: &SimState, budget: f64, index: usize) -> Walker {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(index as u64);
        let mut state = *start;
        state.budget = budget;
        let arrived = state.r <= self.params.target_radius;
        Walker {
            boat: Boat::new(state),
            start_budget: budget,
            steps: 0,
            sail_steps: 0,
            switches: 0,
            fallen_back: false,
            rng,
            done: arrived.then_some(true),
            path: (index < self.config.save_paths).then(|| vec![PathPoint::new(0.0, &state)]),
        }
    }

    fn record(&self, w: Walker) -> TrajectoryRecord {
        TrajectoryRecord {
            time: w.steps as f64 * self.config.dt,
            censored: w.done != Some(true),
            switches: w.switches,
            path: w.path.unwrap_or_default(),
        }
    }
}

/// Nearest gridpoint to a boat that has not arrived. Target nodes carry no
/// meaningful action (often a zero-speed heading), so a boat whose nearest
/// node lies inside the target uses the innermost node outside it.
fn lookup(grid: &GridSpec, params: &ModelParams, s: &SimState) -> (usize, usize) {
    let mut i = grid.nearest_r(s.r);
    while i < grid.n_r && grid.r(i) <= params.target_radius {
        i += 1;
    }
    (i, grid.nearest_theta(s.theta))
}

fn neutral_action(field: &NeutralField, s: &SimState) -> Action {
    let (i, j) = lookup(field.grid(), field.params(), s);
    field.action(s.tack, i, j)
}

/// Budget a controller starts from: the deadline upgrade for threshold-aware
/// control, the deadline itself otherwise.
fn starting_budget(controller: &Controller<'_>, start: &SimState) -> Result<f64> {
    match controller {
        Controller::RiskNeutral(_) => Ok(start.budget),
        Controller::ThresholdAware { value, .. } => deadline_upgrade(value, start, start.budget),
    }
}

fn setup<'a>(
    controller: Controller<'a>,
    start: &SimState,
    config: &'a SimConfig,
) -> Result<(Context<'a>, f64)> {
    controller.validate()?;
    let params = controller.params();
    params.validate()?;
    config.validate(params, controller.s_max())?;
    if !(start.r >= 0.0) || !start.theta.is_finite() || !start.phi.is_finite() {
        return Err(Error::Config(format!(
            "start state (r {}, theta {}, phi {}) is not a valid state",
            start.r, start.theta, start.phi
        )));
    }
    let budget = starting_budget(&controller, start)?;
    let max_steps = (config.t_max(controller.s_max()) / config.dt).ceil() as u64;
    Ok((
        Context {
            controller,
            params,
            config,
            max_steps,
        },
        budget,
    ))
}

/// Simulates one path from `start`, whose budget is the deadline.
///
/// `index` selects the random stream, so this reproduces path `index` of
/// [`monte_carlo`] with the same configuration.
pub fn run_trajectory(
    controller: Controller<'_>,
    start: &SimState,
    config: &SimConfig,
    index: usize,
) -> Result<TrajectoryRecord> {
    let (ctx, budget) = setup(controller, start, config)?;
    let mut w = ctx.walker(start, budget, index);
    if w.path.is_none() {
        w.path = Some(vec![PathPoint::new(0.0, &w.boat.state)]);
    }
    while w.done.is_none() {
        ctx.advance(&mut w)?;
    }
    Ok(ctx.record(w))
}

/// Aggregate statistics of a batch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub policy: String,
    pub seed: u64,
    pub dt: f64,
    pub t_max: f64,
    pub n_samples: usize,
    pub n_censored: usize,
    /// The deadline, taken from the start state's budget.
    pub deadline: f64,
    /// Budget actually used after the deadline upgrade.
    pub upgraded_deadline: Option<f64>,
    /// Fraction of paths that arrived by the deadline.
    pub success_fraction: f64,
    /// Mean arrival time over the paths that arrived.
    pub mean_arrival_time: Option<f64>,
    pub switch_histogram: BTreeMap<u32, usize>,
}

impl Summary {
    /// Most frequent switch count; ties go to the smaller count.
    pub fn modal_switches(&self) -> Option<u32> {
        let mut best: Option<(u32, usize)> = None;
        for (&count, &n) in &self.switch_histogram {
            if best.is_none_or(|(_, m)| n > m) {
                best = Some((count, n));
            }
        }
        best.map(|b| b.0)
    }
}

/// Everything a batch produces.
#[derive(Debug, Clone)]
pub struct MonteCarlo {
    pub ecdf: EcdfCurve,
    pub summary: Summary,
    pub records: Vec<TrajectoryRecord>,
}

/// Runs `config.n_samples` paths from `start`, whose budget is the deadline.
///
/// Path `n` uses stream `n` of a ChaCha8 generator seeded with
/// `config.seed`, and aggregation follows path order, so results do not
/// depend on the number of threads.
pub fn monte_carlo(
    controller: Controller<'_>,
    start: &SimState,
    config: &SimConfig,
) -> Result<MonteCarlo> {
    let (ctx, budget) = setup(controller, start, config)?;
    let mut walkers: Vec<Walker> = (0..config.n_samples)
        .map(|n| ctx.walker(start, budget, n))
        .collect();
    let mut step = 0;
    while step < ctx.max_steps && walkers.iter().any(|w| w.done.is_none()) {
        let end = (step + BLOCK).min(ctx.max_steps);
        walkers.par_iter_mut().try_for_each(|w| {
            while w.done.is_none() && w.steps < end {
                ctx.advance(w)?;
            }
            Ok::<_, Error>(())
        })?;
        step = end;
    }
    let records: Vec<TrajectoryRecord> = walkers.into_iter().map(|w| ctx.record(w)).collect();

    let samples: Vec<Sample> = records
        .iter()
        .map(|r| Sample {
            time: r.time,
            censored: r.censored,
        })
        .collect();
    let ecdf = kaplan_meier(&samples)?;
    let deadline = start.budget;
    let arrived: Vec<f64> = records
        .iter()
        .filter_map(TrajectoryRecord::arrival)
        .collect();
    let on_time = arrived.iter().filter(|&&t| t <= deadline + 1e-9).count();
    let mut switch_histogram = BTreeMap::new();
    for r in &records {
        *switch_histogram.entry(r.switches).or_insert(0) += 1;
    }
    let summary = Summary {
        policy: match controller {
            Controller::RiskNeutral(_) => "risk_neutral".into(),
            Controller::ThresholdAware { .. } => "threshold_aware".into(),
        },
        seed: config.seed,
        dt: config.dt,
        t_max: config.t_max(controller.s_max()),
        n_samples: records.len(),
        n_censored: records.len() - arrived.len(),
        deadline,
        upgraded_deadline: matches!(controller, Controller::ThresholdAware { .. })
            .then_some(budget),
        success_fraction: on_time as f64 / records.len() as f64,
        mean_arrival_time: (!arrived.is_empty())
            .then(|| arrived.iter().sum::<f64>() / arrived.len() as f64),
        switch_histogram,
    };
    Ok(MonteCarlo {
        ecdf,
        summary,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use crate::gridfile::FieldData;
    use crate::model::{reduced_drift, PolarCurve, Tack, WindParams};

    fn params(a: f64, sigma: f64) -> ModelParams {
        ModelParams {
            wind: WindParams::new(a, sigma).unwrap(),
            polar: PolarCurve::racing_default(0.05).unwrap(),
            switch_time: 2.0,
            target_radius: 0.1,
            outer_radius: 2.0,
        }
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn calm_steer_step_is_the_drift() {
        let p = params(0.0, 0.0);
        let boat = Boat::new(SimState::new(1.3, 0.9, Tack::Starboard, 10.0, 0.0));
        let next = step_euler_maruyama(&boat, Action::Steer(1.1), 0.005, &p, &mut rng()).unwrap();
        let (r_d, theta_d) = reduced_drift(&p, 1.3, 0.9, Tack::Starboard, 1.1).unwrap();
        assert!((next.state.r - (1.3 + 0.005 * r_d)).abs() < 1e-15);
        assert!((next.state.theta - (0.9 + 0.005 * theta_d)).abs() < 1e-15);
        assert_eq!(next.state.budget, 10.0 - 0.005);
        assert_eq!(next.state.phi, 0.0);
    }

    #[test]
    fn calm_switch_only_flips_the_tack() {
        let p = params(0.0, 0.0);
        let mut boat = Boat::new(SimState::new(1.3, 0.9, Tack::Port, 10.0, 0.0));
        let mut rng = rng();
        boat = step_euler_maruyama(&boat, Action::Switch, 0.01, &p, &mut rng).unwrap();
        assert_eq!(boat.state.budget, 8.0);
        let mut steps = 1;
        while boat.is_switching() {
            assert_eq!(boat.state.tack, Tack::Port);
            // the action is ignored during the switch
            boat = step_euler_maruyama(&boat, Action::Steer(1.0), 0.01, &p, &mut rng).unwrap();
            steps += 1;
        }
        assert_eq!(steps, 200);
        assert_eq!(boat.state.tack, Tack::Starboard);
        assert_eq!(
            (boat.state.r, boat.state.theta, boat.state.budget),
            (1.3, 0.9, 8.0)
        );
    }

    #[test]
    fn radius_is_frozen_while_switching_in_wind() {
        let p = params(0.1, 0.05);
        let mut boat = Boat::new(SimState::new(0.7, 2.0, Tack::Starboard, 10.0, 0.3));
        let mut rng = rng();
        boat = step_euler_maruyama(&boat, Action::Switch, 0.005, &p, &mut rng).unwrap();
        let theta0 = boat.state.theta;
        while boat.is_switching() {
            boat = step_euler_maruyama(&boat, Action::Switch, 0.005, &p, &mut rng).unwrap();
            assert!((boat.state.r - 0.7).abs() < 1e-15);
        }
        assert_ne!(boat.state.theta, theta0);
    }

    #[test]
    fn zero_heading_only_moves_the_wind() {
        let p = params(0.05, 0.05);
        let boat = Boat::new(SimState::new(1.0, 1.0, Tack::Starboard, 10.0, 0.5));
        let next = step_euler_maruyama(&boat, Action::Steer(0.0), 0.01, &p, &mut rng()).unwrap();
        let z: f64 = rng().sample(StandardNormal);
        let moved = 0.05 * 0.01 + 0.05 * 0.1 * z;
        assert_eq!(next.state.r, 1.0);
        assert!((next.state.theta - (1.0 + moved)).abs() < 1e-15);
        assert!((next.state.phi - (0.5 + moved)).abs() < 1e-15);
    }

    #[test]
    fn switch_time_must_be_whole_steps() {
        let p = params(0.0, 0.05);
        let bad = SimConfig {
            dt: 0.003,
            ..SimConfig::default()
        };
        assert!(bad.validate(&p, 50.0).is_err());
        assert!(SimConfig::default().validate(&p, 50.0).is_ok());
        let short = SimConfig {
            t_max: Some(10.0),
            ..SimConfig::default()
        };
        assert!(short.validate(&p, 50.0).is_err());
    }

    fn synthetic_value(certain_from: usize) -> ValueField {
        let grid = GridSpec::with_budget_step(10, 12, 2.0, 10.0, 0.25).unwrap();
        let mut data = vec![0.0; (grid.n_s + 1) * 2 * grid.slice_len()];
        for k in 0..=grid.n_s {
            for q in 0..2 {
                let plane =
                    &mut data[(2 * k + q) * grid.slice_len()..(2 * k + q + 1) * grid.slice_len()];
                for i in 0..=grid.n_r {
                    let w = if grid.r(i) <= 0.1 || k >= certain_from {
                        1.0
                    } else {
                        0.4
                    };
                    plane[i * grid.n_theta..(i + 1) * grid.n_theta].fill(w);
                }
            }
        }
        ValueField::new(grid, params(0.0, 0.05), FieldData::Owned(data)).unwrap()
    }

    #[test]
    fn deadline_upgrade_cases() {
        let field = synthetic_value(17);
        let start = SimState::new(1.0, 0.3, Tack::Starboard, 0.0, 0.0);
        assert_eq!(deadline_upgrade(&field, &start, 8.0).unwrap(), 17.0 * 0.25);
        assert_eq!(deadline_upgrade(&field, &start, 4.0).unwrap(), 4.0);
        let never = synthetic_value(usize::MAX);
        assert_eq!(deadline_upgrade(&never, &start, 8.0).unwrap(), 8.0);
        let home = SimState::new(0.05, 0.3, Tack::Starboard, 0.0, 0.0);
        assert_eq!(deadline_upgrade(&never, &home, 8.0).unwrap(), 0.0);
        assert!(deadline_upgrade(&field, &start, 11.0).is_err());
    }

    #[test]
    fn modal_switch_count_prefers_fewer_on_ties() {
        let mut summary = Summary {
            policy: String::new(),
            seed: 0,
            dt: 0.1,
            t_max: 1.0,
            n_samples: 6,
            n_censored: 0,
            deadline: 1.0,
            upgraded_deadline: None,
            success_fraction: 0.0,
            mean_arrival_time: None,
            switch_histogram: BTreeMap::from([(0, 1), (1, 3), (3, 3)]),
        };
        assert_eq!(summary.modal_switches(), Some(1));
        summary.switch_histogram.clear();
        assert_eq!(summary.modal_switches(), None);
    }
}
