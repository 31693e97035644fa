//! Semi-Lagrangian building blocks shared by both solvers.

use crate::grid::GridSpec;
use crate::interp::{eno_bicubic, BilinearSlice, GridSlice2D, SlicePatches};
use crate::model::{ModelParams, PolarCurve};
use crate::search::AngleGrid;

/// Anything a foot point can be evaluated against.
pub(crate) trait Sampler {
    fn sample(&self, r: f64, theta: f64) -> f64;

    /// Two-node average over the feet.
    #[inline]
    fn average(&self, feet: Feet) -> f64 {
        0.5 * (self.sample(feet.0, feet.1) + self.sample(feet.0, feet.2))
    }
}

impl Sampler for SlicePatches {
    #[inline]
    fn sample(&self, r: f64, theta: f64) -> f64 {
        self.eval(r, theta)
    }

    #[inline]
    fn average(&self, feet: Feet) -> f64 {
        let (a, b) = self.eval_pair(feet.0, feet.1, feet.2);
        0.5 * (a + b)
    }
}

impl Sampler for BilinearSlice<'_> {
    #[inline]
    fn sample(&self, r: f64, theta: f64) -> f64 {
        self.eval(r, theta)
    }
}

impl Sampler for GridSlice2D<'_> {
    fn sample(&self, r: f64, theta: f64) -> f64 {
        eno_bicubic(self, r, theta)
    }
}

/// Characteristic feet for one budget step, with per-angle and per-node
/// trigonometry precomputed.
pub(crate) struct SteerKernel {
    polar: PolarCurve,
    tau: f64,
    spread: f64,
    drift: f64,
    radii: Vec<f64>,
    inv_radii: Vec<f64>,
    thetas: Vec<f64>,
    cos_theta: Vec<f64>,
    sin_theta: Vec<f64>,
    scan_speed: Vec<f64>,
    scan_cos: Vec<f64>,
    scan_sin: Vec<f64>,
}

/// `(r, theta_plus, theta_minus)`.
pub(crate) type Feet = (f64, f64, f64);

impl SteerKernel {
    pub(crate) fn new(params: &ModelParams, grid: &GridSpec, angles: &AngleGrid, tau: f64) -> Self {
        let (sin_theta, cos_theta) = (0..grid.n_theta).map(|j| grid.theta(j).sin_cos()).unzip();
        let (scan_sin, scan_cos) = angles.angles().iter().map(|u| u.sin_cos()).unzip();
        SteerKernel {
            polar: params.polar.clone(),
            tau,
            spread: params.wind.sigma * tau.sqrt(),
            drift: params.wind.drift,
            radii: (0..=grid.n_r).map(|i| grid.r(i)).collect(),
            inv_radii: (0..=grid.n_r).map(|i| 1.0 / grid.r(i)).collect(),
            thetas: (0..grid.n_theta).map(|j| grid.theta(j)).collect(),
            cos_theta,
            sin_theta,
            scan_speed: angles
                .angles()
                .iter()
                .map(|&u| params.polar.speed_unchecked(u))
                .collect(),
            scan_cos,
            scan_sin,
        }
    }

    #[inline]
    fn feet_from(&self, i: usize, j: usize, sign: f64, f: f64, cos_u: f64, sin_u: f64) -> Feet {
        let r = self.radii[i];
        let (ct, st) = (self.cos_theta[j], self.sin_theta[j]);
        // cos and sin of theta - sign * u
        let c = ct * cos_u + sign * st * sin_u;
        let s = st * cos_u - sign * ct * sin_u;
        let r_foot = r - self.tau * f * c;
        let theta_mid = self.thetas[j] + self.tau * (f * self.inv_radii[i] * s + self.drift);
        (r_foot, theta_mid + self.spread, theta_mid - self.spread)
    }

    /// Feet for the `n`-th scan angle.
    #[inline]
    pub(crate) fn scan_feet(&self, i: usize, j: usize, sign: f64, n: usize) -> Feet {
        self.feet_from(
            i,
            j,
            sign,
            self.scan_speed[n],
            self.scan_cos[n],
            self.scan_sin[n],
        )
    }

    #[inline]
    pub(crate) fn feet(&self, i: usize, j: usize, sign: f64, u: f64) -> Feet {
        let (sin_u, cos_u) = u.sin_cos();
        self.feet_from(i, j, sign, self.polar.speed_unchecked(u), cos_u, sin_u)
    }
}
