//! Steering-angle search: a coarse scan over an equispaced angle grid
//! followed by golden-section refinement around the best scanned angle.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `1 / phi`, the golden-section shrink factor.
const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Equispaced steering angles covering `[0, pi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    angles: Vec<f64>,
}

impl AngleGrid {
    pub fn new(count: usize) -> Result<Self> {
        if count < 3 {
            return Err(Error::Config(format!(
                "the steering scan needs at least 3 angles, got {count}"
            )));
        }
        let step = PI / (count - 1) as f64;
        let mut angles: Vec<f64> = (0..count).map(|n| n as f64 * step).collect();
        angles[count - 1] = PI;
        Ok(AngleGrid { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn step(&self) -> f64 {
        PI / (self.angles.len() - 1) as f64
    }
}

/// Golden-section search for a maximizer of `f` on `[lo, hi]`, stopping once
/// the bracket is narrower than `tol`. Ties keep the left part.
pub fn golden_section_max(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> f64 {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    0.5 * (lo + hi)
}

/// Outcome of a steering maximization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleChoice {
    pub angle: f64,
    pub value: f64,
}

/// Maximizes over `[0, pi]`: scan `grid`, then refine by golden section on
/// `(u* - du, u* + du)` clipped to `[0, pi]`.
///
/// `scan(n)` must equal `eval(grid.angles()[n])`; it exists so callers can
/// reuse per-angle precomputation during the scan. Scan ties go to the
/// smaller angle, and a scan that is exactly flat returns the first angle
/// without refinement. If refinement lands below the scanned maximum (the
/// objective need not be unimodal) the scanned angle is kept.
pub fn maximize_angle(
    grid: &AngleGrid,
    tol: f64,
    mut scan: impl FnMut(usize) -> f64,
    mut eval: impl FnMut(f64) -> f64,
) -> AngleChoice {
    let first = scan(0);
    let mut best = 0;
    let mut best_value = first;
    let mut flat = true;
    for n in 1..grid.len() {
        let v = scan(n);
        flat &= v == first;
        if v > best_value {
            best = n;
            best_value = v;
        }
    }
    let scanned = AngleChoice {
        angle: grid.angles()[best],
        value: best_value,
    };
    if flat {
        return scanned;
    }
    let du = grid.step();
    let lo = (scanned.angle - du).max(0.0);
    let hi = (scanned.angle + du).min(PI);
    let angle = golden_section_max(&mut eval, lo, hi, tol);
    let value = eval(angle);
    if value >= best_value {
        AngleChoice { angle, value }
    } else {
        scanned
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(grid: &AngleGrid, tol: f64, f: impl Fn(f64) -> f64) -> AngleChoice {
        maximize_angle(grid, tol, |n| f(grid.angles()[n]), &f)
    }

    #[test]
    fn flat_objective_picks_zero() {
        let grid = AngleGrid::new(65).unwrap();
        let c = run(&grid, 1e-4, |_| 0.3);
        assert_eq!(
            c,
            AngleChoice {
                angle: 0.0,
                value: 0.3
            }
        );
    }

    #[test]
    fn unimodal_objective() {
        let grid = AngleGrid::new(65).unwrap();
        let c = run(&grid, 1e-4, |u| 1.0 - (u - 0.7).powi(2));
        assert!((c.angle - 0.7).abs() < 1e-4);
        assert!((c.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn global_hump_found() {
        // Two bumps of half-width 0.12 (> pi/64); the taller one is at 2.3.
        let bump = |u: f64, c: f64, h: f64| {
            let x = (u - c) / 0.12;
            if x.abs() < 1.0 {
                h * (1.0 - x * x)
            } else {
                0.0
            }
        };
        let f = |u: f64| bump(u, 0.9, 0.8) + bump(u, 2.3, 1.0);
        let grid = AngleGrid::new(65).unwrap();
        let c = run(&grid, 1e-4, f);
        assert!((c.angle - 2.3).abs() < 1e-4, "{}", c.angle);
    }

    #[test]
    fn maximum_at_boundary() {
        let grid = AngleGrid::new(65).unwrap();
        let c = run(&grid, 1e-4, |u| u);
        assert!((PI - c.angle) < 1e-4);
        let c = run(&grid, 1e-4, |u| -u);
        assert!(c.angle < 1e-4);
    }

    #[test]
    fn never_worse_than_scan() {
        let grid = AngleGrid::new(9).unwrap();
        // spike between scan points fools golden section; the scan value is kept
        let f = |u: f64| {
            if (u - grid.angles()[4]).abs() < 1e-12 {
                1.0
            } else {
                0.5 + 0.01 * (u * 40.0).sin()
            }
        };
        let c = run(&grid, 1e-4, f);
        assert_eq!(c.value, 1.0);
    }

    #[test]
    fn grid_requires_three_angles() {
        assert!(AngleGrid::new(2).is_err());
        let g = AngleGrid::new(3).unwrap();
        assert_eq!(g.angles(), &[0.0, PI / 2.0, PI]);
    }
}
