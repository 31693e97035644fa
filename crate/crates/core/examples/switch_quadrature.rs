//! The three-point Gauss-Hermite average used for a tack switch, checked
//! against the closed form for a cosine and against sampling.
//!
//! `cargo run --example switch_quadrature`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sailrisk::quadrature::{switch_expectation, switch_nodes};
use sailrisk::WindParams;

fn main() -> sailrisk::Result<()> {
    let wind = WindParams::new(0.1, 0.2)?;
    let c = 2.0;
    let theta = 0.7;
    println!("nodes {:?}", switch_nodes(theta, &wind, c));

    let mean = theta + wind.drift * c;
    let sd = wind.sigma * c.sqrt();
    for k in [1.0, 2.0, 4.0] {
        let exact = (k * mean).cos() * (-(k * sd).powi(2) / 2.0).exp();
        let quad = switch_expectation(|z| (k * z).cos(), theta, &wind, c);
        let normal = Normal::new(mean, sd).expect("positive spread");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 200_000;
        let sampled = (0..n)
            .map(|_| (k * normal.sample(&mut rng)).cos())
            .sum::<f64>()
            / n as f64;
        println!("cos({k} theta): exact {exact:.6}, quadrature {quad:.6}, sampled {sampled:.6}");
    }
    Ok(())
}
