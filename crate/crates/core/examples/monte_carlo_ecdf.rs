//! Monte Carlo comparison of both controllers from one start, with the
//! Kaplan-Meier arrival-time distribution of each.
//!
//! Where the solved probability is zero every heading ties and the aware
//! policy holds still until its budget runs out. On a grid this coarse the
//! solved probabilities are pessimistic, so the run is repeated with the
//! fallback triggered as soon as the probability reaches zero.
//!
//! `cargo run --release --example monte_carlo_ecdf`

use sailrisk::simulate::{monte_carlo, Controller, Fallback, FallbackTrigger, SimConfig};
use sailrisk::{
    solve_aware, solve_neutral, AwareOptions, GridSpec, ModelParams, NeutralOptions, PolarCurve,
    SimState, Tack, WindParams,
};

fn main() -> sailrisk::Result<()> {
    let params = ModelParams {
        wind: WindParams::new(0.05, 0.05)?,
        polar: PolarCurve::racing_default(0.05)?,
        switch_time: 2.0,
        target_radius: 0.1,
        outer_radius: 2.0,
    };
    let grid = GridSpec::with_budget_step(40, 48, 2.0, 50.0, 0.25)?;
    let neutral = solve_neutral(&grid, &params, &NeutralOptions::default())?;
    let (value, policy, _) = solve_aware(&grid, &params, &AwareOptions::default())?;

    let deadline = 29.5;
    let start = SimState::new(1.4, 0.5, Tack::Port, deadline, 0.0);
    let config = SimConfig {
        n_samples: 2000,
        seed: 11,
        ..SimConfig::default()
    };
    let eager = SimConfig {
        trigger: FallbackTrigger::ZeroProbability,
        ..config
    };
    let aware = Controller::ThresholdAware {
        value: &value,
        policy: &policy,
        fallback: Fallback::RiskNeutral(&neutral),
    };
    let runs = [
        ("neutral", Controller::RiskNeutral(&neutral), &config),
        ("aware", aware, &config),
        ("eager", aware, &eager),
    ];
    for (name, controller, config) in runs {
        let mc = monte_carlo(controller, &start, config)?;
        let s = &mc.summary;
        println!(
            "{name:>7}: P(T <= {deadline}) = {:.3}, mean T = {:.2}, switches {:?}",
            s.success_fraction,
            s.mean_arrival_time.unwrap_or(f64::NAN),
            s.switch_histogram
        );
        for t in [26.0, 28.0, 30.0, 32.0, 34.0] {
            print!("  F({t}) = {:.3}", mc.ecdf.at(t));
        }
        println!();
    }
    Ok(())
}
