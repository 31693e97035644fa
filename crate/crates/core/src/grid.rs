use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::wrap_angle;

/// Uniform discretization of `(r, theta, s)`.
///
/// Radii are `r_i = i * dr` for `i = 0..=n_r`, angles `theta_j = j * dtheta`
/// for `j = 0..n_theta` (periodic, so `j = n_theta` aliases `j = 0`), and
/// budgets `s_k = k * ds` for `k = 0..=n_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_r: usize,
    pub n_theta: usize,
    pub n_s: usize,
    pub r_max: f64,
    /// Largest deadline `s_bar`.
    pub s_max: f64,
}

impl GridSpec {
    /// Grid with the budget step fixed instead of the slice count.
    pub fn with_budget_step(
        n_r: usize,
        n_theta: usize,
        r_max: f64,
        s_max: f64,
        ds: f64,
    ) -> Result<Self> {
        let slices = s_max / ds;
        let n_s = slices.round();
        if (slices - n_s).abs() > 1e-9 * slices.max(1.0) || n_s < 1.0 {
            return Err(Error::Config(format!(
                "budget step {ds} does not divide the maximum deadline {s_max}"
            )));
        }
        let grid = GridSpec {
            n_r,
            n_theta,
            n_s: n_s as usize,
            r_max,
            s_max,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_theta < 4 {
            return Err(Error::Config(format!(
                "need at least 4 angular cells, got {}",
                self.n_theta
            )));
        }
        if self.n_r < 1 || self.n_s < 1 {
            return Err(Error::Config(
                "grid needs at least one radial and one budget cell".into(),
            ));
        }
        if !(self.r_max > 0.0)
            || !(self.s_max > 0.0)
            || !self.r_max.is_finite()
            || !self.s_max.is_finite()
        {
            return Err(Error::Config(
                "grid extents must be positive and finite".into(),
            ));
        }
        Ok(())
    }

    /// Number of budget steps in one tack switch, i.e. `l` with `s_k - C = s_{k-l}`.
    pub fn switch_offset(&self, switch_time: f64) -> Result<usize> {
        let ratio = switch_time / self.ds();
        let steps = ratio.round();
        if steps < 1.0 || (ratio - steps).abs() > 1e-9 * ratio.max(1.0) {
            return Err(Error::Config(format!(
                "budget step {} must divide the switch time C = {switch_time} so that s_k - C = s_l on the grid",
                self.ds()
            )));
        }
        Ok(steps as usize)
    }

    pub fn dr(&self) -> f64 {
        self.r_max / self.n_r as f64
    }

    pub fn dtheta(&self) -> f64 {
        TAU / self.n_theta as f64
    }

    pub(crate) fn inv_dr(&self) -> f64 {
        self.n_r as f64 / self.r_max
    }

    pub(crate) fn inv_dtheta(&self) -> f64 {
        self.n_theta as f64 / TAU
    }

    pub fn ds(&self) -> f64 {
        self.s_max / self.n_s as f64
    }

    pub fn r(&self, i: usize) -> f64 {
        i as f64 * self.dr()
    }

    pub fn theta(&self, j: usize) -> f64 {
        j as f64 * self.dtheta()
    }

    pub fn s(&self, k: usize) -> f64 {
        k as f64 * self.ds()
    }

    /// Points per `(r, theta)` slice.
    pub fn slice_len(&self) -> usize {
        (self.n_r + 1) * self.n_theta
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_theta + j
    }

    /// Nearest radial index, clamped to the grid.
    pub fn nearest_r(&self, r: f64) -> usize {
        let i = (r / self.dr()).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_r)
        }
    }

    /// Nearest angular index, modulo the period.
    pub fn nearest_theta(&self, theta: f64) -> usize {
        let j = (wrap_angle(theta) / self.dtheta()).round() as usize;
        j % self.n_theta
    }

    /// Slice index for a budget, rounded as requested and clamped to `0..=n_s`.
    pub fn budget_index(&self, s: f64, rounding: Rounding) -> usize {
        let x = s / self.ds();
        let k = match rounding {
            Rounding::Nearest => x.round(),
            Rounding::Floor => (x + 1e-9).floor(),
            Rounding::Ceil => (x - 1e-9).ceil(),
        };
        if k <= 0.0 {
            0
        } else {
            (k as usize).min(self.n_s)
        }
    }
}

/// How a continuous budget is mapped onto a slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rounding {
    #[default]
    Nearest,
    Floor,
    Ceil,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_and_offsets() {
        let g = GridSpec::with_budget_step(800, 800, 2.0, 56.0, 0.025).unwrap();
        assert_eq!(g.n_s, 2240);
        assert_eq!(g.switch_offset(2.0).unwrap(), 80);
        assert!(g.switch_offset(2.01).is_err());
        assert!(GridSpec::with_budget_step(10, 10, 2.0, 1.0, 0.3).is_err());
    }

    #[test]
    fn nearest_lookup_wraps() {
        let g = GridSpec::with_budget_step(10, 8, 2.0, 1.0, 0.5).unwrap();
        assert_eq!(g.nearest_theta(TAU - 1e-6), 0);
        assert_eq!(g.nearest_theta(-g.dtheta()), 7);
        assert_eq!(g.nearest_r(-1.0), 0);
        assert_eq!(g.nearest_r(5.0), 10);
        assert_eq!(g.budget_index(0.74, Rounding::Nearest), 1);
        assert_eq!(g.budget_index(0.74, Rounding::Floor), 1);
        assert_eq!(g.budget_index(0.51, Rounding::Ceil), 2);
        assert_eq!(g.budget_index(0.5, Rounding::Ceil), 1);
        assert_eq!(g.budget_index(9.0, Rounding::Nearest), 2);
    }

    #[test]
    fn rejects_small_theta_axis() {
        let g = GridSpec {
            n_r: 4,
            n_theta: 3,
            n_s: 4,
            r_max: 1.0,
            s_max: 1.0,
        };
        assert!(g.validate().is_err());
    }
}
