//! Boat polar, best upwind angle and the reduced dynamics in polar
//! coordinates around the target.
//!
//! `cargo run --example polar_and_dynamics`

use sailrisk::model::{from_xy, reduced_drift, to_xy};
use sailrisk::{ModelParams, PolarCurve, SimState, Tack, WindParams};

fn main() -> sailrisk::Result<()> {
    let polar = PolarCurve::racing_default(0.05)?;
    println!("angle_deg  speed   vmg");
    for deg in (0..=180).step_by(15) {
        let u = f64::from(deg).to_radians();
        let f = polar.speed(u)?;
        println!("{deg:>9}  {f:.4}  {:+.4}", f * u.cos());
    }

    let best = (0..=18_000)
        .map(|n| f64::from(n) * std::f64::consts::PI / 18_000.0)
        .map(|u| (u, polar.speed(u).unwrap() * u.cos()))
        .fold(
            (0.0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
    println!(
        "best upwind angle {:.2} deg, vmg {:.5}",
        best.0.to_degrees(),
        best.1
    );

    let params = ModelParams {
        wind: WindParams::new(0.02, 0.05)?,
        polar,
        switch_time: 2.0,
        target_radius: 0.1,
        outer_radius: 2.0,
    };
    let state = SimState::new(1.5, 0.4, Tack::Starboard, 40.0, 0.1);
    for tack in [Tack::Starboard, Tack::Port] {
        let (r_dot, theta_dot) = reduced_drift(&params, state.r, state.theta, tack, best.0)?;
        println!("{tack:?}: r' = {r_dot:+.5}, theta' = {theta_dot:+.5}");
    }
    let (x, y) = to_xy(&state);
    let (r, theta) = from_xy(x, y, state.phi);
    println!("position ({x:.4}, {y:.4}) maps back to r = {r:.4}, theta = {theta:.4}");
    Ok(())
}
