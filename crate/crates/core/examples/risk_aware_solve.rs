//! Probability of arriving by each deadline, and the deadline upgrade that
//! the extra budget buys.
//!
//! `cargo run --release --example risk_aware_solve`

use sailrisk::simulate::deadline_upgrade;
use sailrisk::{
    solve_aware, AwareOptions, GridSpec, ModelParams, PolarCurve, SimState, Tack, WindParams,
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
    let (value, policy, stats) = solve_aware(&grid, &params, &AwareOptions::default())?;
    println!("{stats:?}");

    let (i, j, tack) = (grid.nearest_r(1.4), grid.nearest_theta(0.5), Tack::Port);
    println!(
        "\nstart r = {:.2}, theta = {:.2}, q = {}",
        grid.r(i),
        grid.theta(j),
        tack.q()
    );
    let curve = value.budget_curve(tack, i, j);
    for k in (0..=grid.n_s).step_by(grid.n_s / 10) {
        println!(
            "  w(s = {:>5.1}) = {:.4}  {:?}",
            grid.s(k),
            curve[k],
            policy.action(k, tack, i, j)
        );
    }

    let start = SimState::new(grid.r(i), grid.theta(j), tack, 0.0, 0.0);
    for s_hat in [35.0, 42.0, 48.0] {
        println!(
            "budget needed for deadline {s_hat}: {:.3}",
            deadline_upgrade(&value, &start, s_hat)?
        );
    }
    Ok(())
}
