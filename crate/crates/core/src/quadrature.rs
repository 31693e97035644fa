//! Gauss-Hermite rules for the two expectations of the scheme: the two-point
//! average over one budget step of diffusion and the three-point average over
//! the `C`-long drift and diffusion of a tack switch.

use std::f64::consts::PI;

use crate::error::Result;
use crate::model::{reduced_drift, ModelParams, Tack, WindParams};

/// Three-node Gauss-Hermite rule for the weight `exp(-x^2)`.
#[derive(Debug, Clone, Copy)]
pub struct Gh3;

impl Gh3 {
    /// Roots of `H_3(x) = 8x^3 - 12x`.
    pub const NODES: [f64; 3] = [-1.224_744_871_391_589, 0.0, 1.224_744_871_391_589];

    pub fn weights() -> [f64; 3] {
        let sqrt_pi = PI.sqrt();
        [sqrt_pi / 6.0, 2.0 * sqrt_pi / 3.0, sqrt_pi / 6.0]
    }

    /// Weights divided by `sqrt(pi)`, i.e. probabilities `1/6, 2/3, 1/6`.
    pub const PROBABILITIES: [f64; 3] = [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0];
}

/// The three angles at which a switch expectation samples the opposite tack.
pub fn switch_nodes(theta: f64, wind: &WindParams, switch_time: f64) -> [f64; 3] {
    let mean = theta + wind.drift * switch_time;
    let spread = wind.sigma * (2.0 * switch_time).sqrt();
    Gh3::NODES.map(|x| mean + spread * x)
}

/// Expectation of `sampler(theta(C))` where `theta` drifts and diffuses for
/// the switch duration with the boat stationary.
pub fn switch_expectation(
    mut sampler: impl FnMut(f64) -> f64,
    theta: f64,
    wind: &WindParams,
    switch_time: f64,
) -> f64 {
    let nodes = switch_nodes(theta, wind, switch_time);
    Gh3::PROBABILITIES[0] * sampler(nodes[0])
        + Gh3::PROBABILITIES[1] * sampler(nodes[1])
        + Gh3::PROBABILITIES[2] * sampler(nodes[2])
}

/// Foot point `(r, theta)` of a characteristic.
pub type Foot = (f64, f64);

/// The two feet `(r + tau r_d, theta + tau theta_d +- sigma sqrt(tau))`.
///
/// Feet are not clamped or wrapped.
pub fn diffusion_feet(
    r: f64,
    theta: f64,
    u: f64,
    tack: Tack,
    tau: f64,
    params: &ModelParams,
) -> Result<(Foot, Foot)> {
    let (rd, td) = reduced_drift(params, r, theta, tack, u)?;
    let r_foot = r + tau * rd;
    let theta_mean = theta + tau * td;
    let spread = params.wind.sigma * tau.sqrt();
    Ok(((r_foot, theta_mean + spread), (r_foot, theta_mean - spread)))
}
