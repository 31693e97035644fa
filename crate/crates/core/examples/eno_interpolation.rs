//! Periodic ENO cubic interpolation: convergence on a smooth row and no
//! overshoot next to a jump.
//!
//! `cargo run --example eno_interpolation`

use std::f64::consts::TAU;

use sailrisk::interp::eno_cubic_1d_periodic;

fn main() -> sailrisk::Result<()> {
    let smooth = |t: f64| (t).sin() + 0.5 * (2.0 * t).cos();
    println!("nodes  max error");
    for n in [16, 32, 64, 128] {
        let row: Vec<f64> = (0..n).map(|j| smooth(TAU * j as f64 / n as f64)).collect();
        let mut err: f64 = 0.0;
        for m in 0..997 {
            let t = TAU * m as f64 / 997.0;
            err = err.max((eno_cubic_1d_periodic(&row, t)? - smooth(t)).abs());
        }
        println!("{n:>5}  {err:.3e}");
    }

    let step: Vec<f64> = (0..32).map(|j| if j < 16 { 0.0 } else { 1.0 }).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for m in 0..1000 {
        let v = eno_cubic_1d_periodic(&step, TAU * m as f64 / 1000.0)?;
        lo = lo.min(v);
        hi = hi.max(v);
    }
    println!("step data in [0, 1], interpolant in [{lo:.4}, {hi:.4}]");
    Ok(())
}
