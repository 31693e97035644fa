//! Expected-time-optimal routing on a coarse grid.
//!
//! `cargo run --release --example risk_neutral_solve`

use sailrisk::neutral::solve_neutral_with;
use sailrisk::{Action, GridSpec, ModelParams, NeutralOptions, PolarCurve, Tack, WindParams};

fn main() -> sailrisk::Result<()> {
    let params = ModelParams {
        wind: WindParams::new(0.05, 0.05)?,
        polar: PolarCurve::racing_default(0.05)?,
        switch_time: 2.0,
        target_radius: 0.1,
        outer_radius: 2.0,
    };
    let grid = GridSpec::with_budget_step(60, 72, 2.0, 60.0, 0.25)?;
    let field = solve_neutral_with(&grid, &params, &NeutralOptions::default(), |n, residual| {
        println!("greedy sweep {n}: residual {residual:.3e}");
    })?;

    println!("\n  r     theta   q  expected time  action");
    for i in [12, 30, 48, 60] {
        for j in [0, 18, 54] {
            for tack in [Tack::Starboard, Tack::Port] {
                let action = match field.action(tack, i, j) {
                    Action::Steer(u) => format!("steer {:.1} deg", u.to_degrees()),
                    Action::Switch => "switch".to_string(),
                };
                println!(
                    "{:.2}  {:>6.1}  {}  {:>13.3}  {action}",
                    grid.r(i),
                    grid.theta(j).to_degrees(),
                    tack.q(),
                    field.value(tack, i, j)
                );
            }
        }
    }
    Ok(())
}
