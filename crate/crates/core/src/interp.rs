//! Essentially non-oscillatory cubic interpolation.
//!
//! The stencil for the cell `[x_0, x_1]` grows one node at a time, always
//! towards the side whose next divided difference is smaller in magnitude,
//! until four nodes are used. The result is kept in Newton form on unit
//! spacing:
//!
//! ```text
//! p(t) = y0 + d1 t + d2 t (t - 1) + d3 t (t - 1) (t - x2)
//! ```
//!
//! where `x2` is the third node picked (`-1` or `2`). The choice depends only
//! on the data and the cell, never on where inside the cell the query sits,
//! which lets the solvers precompute the per-row cubics once per slice.
//!
//! Along `theta` the data are periodic. Along `r` queries are clamped into
//! `[0, r_max]` and the stencil becomes one-sided next to either end.

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Snap distance (in cells) under which a query is treated as a node.
const NODE_SNAP: f64 = 1e-10;

const ONE_SIXTH: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub(crate) struct NewtonCubic {
    y0: f64,
    d1: f64,
    d2: f64,
    d3: f64,
    x2: f64,
}

impl NewtonCubic {
    #[inline]
    pub(crate) fn eval(&self, t: f64) -> f64 {
        self.y0 + t * (self.d1 + (t - 1.0) * (self.d2 + (t - self.x2) * self.d3))
    }
}

/// ENO stencil selection on unit-spaced data around the cell `[0, 1]`.
///
/// `lo..=hi` are the admissible node offsets; `get` reads the node at an
/// offset and is called at most five times.
#[inline]
fn eno_select(lo: isize, hi: isize, mut get: impl FnMut(isize) -> f64) -> NewtonCubic {
    let y0 = get(0);
    let y1 = get(1);
    let d1 = y1 - y0;
    let left_ok = lo <= -1;
    let right_ok = hi >= 2;
    if !left_ok && !right_ok {
        return NewtonCubic {
            y0,
            d1,
            ..NewtonCubic::default()
        };
    }
    let ym1 = if left_ok { get(-1) } else { 0.0 };
    let y2 = if right_ok { get(2) } else { 0.0 };
    let left2 = 0.5 * (y1 - 2.0 * y0 + ym1);
    let right2 = 0.5 * (y2 - 2.0 * y1 + y0);
    // dd3 over offsets -1..=2 is shared by both branches
    let middle3 = || (y2 - 3.0 * y1 + 3.0 * y0 - ym1) * ONE_SIXTH;

    if left_ok && (!right_ok || left2.abs() <= right2.abs()) {
        let outer = (lo <= -2).then(|| {
            let ym2 = get(-2);
            (y1 - 3.0 * y0 + 3.0 * ym1 - ym2) * ONE_SIXTH
        });
        let inner = right_ok.then(middle3);
        NewtonCubic {
            y0,
            d1,
            d2: left2,
            d3: pick_smaller(outer, inner),
            x2: -1.0,
        }
    } else {
        let inner = left_ok.then(middle3);
        let outer = (hi >= 3).then(|| {
            let y3 = get(3);
            (y3 - 3.0 * y2 + 3.0 * y1 - y0) * ONE_SIXTH
        });
        NewtonCubic {
            y0,
            d1,
            d2: right2,
            d3: pick_smaller(inner, outer),
            x2: 2.0,
        }
    }
}

/// [`eno_select`] with all six nodes `-2..=3` available, written without
/// data-dependent branches. Produces bit-identical coefficients.
#[inline]
fn eno_interior(y: [f64; 6]) -> NewtonCubic {
    let [ym2, ym1, y0, y1, y2, y3] = y;
    let d1 = y1 - y0;
    let left2 = 0.5 * (y1 - 2.0 * y0 + ym1);
    let right2 = 0.5 * (y2 - 2.0 * y1 + y0);
    let middle3 = (y2 - 3.0 * y1 + 3.0 * y0 - ym1) * ONE_SIXTH;
    let outer_left = (y1 - 3.0 * y0 + 3.0 * ym1 - ym2) * ONE_SIXTH;
    let outer_right = (y3 - 3.0 * y2 + 3.0 * y1 - y0) * ONE_SIXTH;
    let go_left = left2.abs() <= right2.abs();
    let d3_left = if outer_left.abs() <= middle3.abs() {
        outer_left
    } else {
        middle3
    };
    let d3_right = if middle3.abs() <= outer_right.abs() {
        middle3
    } else {
        outer_right
    };
    NewtonCubic {
        y0,
        d1,
        d2: if go_left { left2 } else { right2 },
        d3: if go_left { d3_left } else { d3_right },
        x2: if go_left { -1.0 } else { 2.0 },
    }
}

/// Smaller-magnitude divided difference; ties go to the left candidate.
#[inline]
fn pick_smaller(left: Option<f64>, right: Option<f64>) -> f64 {
    match (left, right) {
        (Some(l), Some(r)) => {
            if l.abs() <= r.abs() {
                l
            } else {
                r
            }
        }
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (None, None) => 0.0,
    }
}

/// Cell index and fractional offset of a periodic coordinate, given the
/// inverse spacing `inv_h`.
///
/// Written with integer truncation instead of `floor`/`round` so the hot
/// path stays free of libm calls.
#[inline]
pub(crate) fn locate_periodic(x: f64, inv_h: f64, n: usize) -> (usize, f64) {
    let nf = n as f64;
    let mut t = x * inv_h;
    if !(0.0..nf).contains(&t) {
        t = t.rem_euclid(nf);
    }
    let nearest = (t + 0.5) as usize;
    if (t - nearest as f64).abs() < NODE_SNAP {
        return (if nearest >= n { nearest - n } else { nearest }, 0.0);
    }
    // rem_euclid can round up to exactly n
    let cell = (t as usize).min(n - 1);
    (cell, t - cell as f64)
}

/// Cell index and fractional offset of a coordinate clamped to `[0, n h]`.
///
/// A query on the last node returns `(n, 0.0)`.
#[inline]
pub(crate) fn locate_clamped(x: f64, inv_h: f64, n: usize) -> (usize, f64) {
    let t = (x * inv_h).clamp(0.0, n as f64);
    let nearest = (t + 0.5) as usize;
    if (t - nearest as f64).abs() < NODE_SNAP {
        return (nearest, 0.0);
    }
    let cell = t as usize;
    (cell, t - cell as f64)
}

/// ENO cubic for cell `j0` of a periodic row.
#[inline]
pub(crate) fn periodic_cubic(row: &[f64], j0: usize) -> NewtonCubic {
    let n = row.len();
    if j0 >= 2 && j0 + 3 < n {
        let w = &row[j0 - 2..j0 + 4];
        return eno_interior([w[0], w[1], w[2], w[3], w[4], w[5]]);
    }
    let (n, j0) = (n as isize, j0 as isize);
    eno_select(-2, 3, |o| row[(j0 + o).rem_euclid(n) as usize])
}

/// Periodic ENO interpolation of a row of `n >= 4` equispaced samples over
/// `[0, 2pi)`. Queries are wrapped modulo `2pi`.
pub fn eno_cubic_1d_periodic(row: &[f64], theta: f64) -> Result<f64> {
    if row.len() < 4 {
        return Err(Error::Config(format!(
            "periodic ENO needs at least 4 samples, got {}",
            row.len()
        )));
    }
    Ok(periodic_eval(row, theta))
}

#[inline]
pub(crate) fn periodic_eval(row: &[f64], theta: f64) -> f64 {
    let n = row.len();
    let (j0, t) = locate_periodic(theta, n as f64 / std::f64::consts::TAU, n);
    if t == 0.0 {
        row[j0]
    } else {
        periodic_cubic(row, j0).eval(t)
    }
}

/// One `(r, theta)` slice of a grid function, row-major with `theta` fastest.
#[derive(Debug, Clone, Copy)]
pub struct GridSlice2D<'a> {
    values: &'a [f64],
    grid: &'a GridSpec,
}

impl<'a> GridSlice2D<'a> {
    pub fn new(values: &'a [f64], grid: &'a GridSpec) -> Result<Self> {
        if values.len() != grid.slice_len() {
            return Err(Error::Data(format!(
                "slice has {} values, grid needs {}",
                values.len(),
                grid.slice_len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!(
                "non-finite slice value at (i, j) = ({}, {})",
                pos / grid.n_theta,
                pos % grid.n_theta
            )));
        }
        Ok(GridSlice2D { values, grid })
    }

    pub fn grid(&self) -> &GridSpec {
        self.grid
    }

    pub fn values(&self) -> &'a [f64] {
        self.values
    }

    pub fn row(&self, i: usize) -> &'a [f64] {
        let n = self.grid.n_theta;
        &self.values[i * n..(i + 1) * n]
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[self.grid.index(i, j)]
    }
}

/// Tensor-product ENO interpolation: periodic cubic along `theta` on each
/// needed row, then ENO along `r` through those row values.
pub fn eno_bicubic(slice: &GridSlice2D<'_>, r: f64, theta: f64) -> f64 {
    let grid = slice.grid;
    let (j0, ft) = locate_periodic(theta, grid.inv_dtheta(), grid.n_theta);
    let along_theta = |i: usize| {
        let row = slice.row(i);
        if ft == 0.0 {
            row[j0]
        } else {
            periodic_cubic(row, j0).eval(ft)
        }
    };
    radial_eno(grid.inv_dr(), grid.n_r, r, along_theta)
}

#[inline]
fn radial_eno(inv_dr: f64, n_r: usize, r: f64, along_theta: impl FnMut(usize) -> f64) -> f64 {
    let (i0, fr) = locate_clamped(r, inv_dr, n_r);
    radial_at(i0, fr, n_r, along_theta)
}

#[inline]
fn radial_at(i0: usize, fr: f64, n_r: usize, mut along_theta: impl FnMut(usize) -> f64) -> f64 {
    if fr == 0.0 {
        return along_theta(i0);
    }
    let lo = -(i0 as isize);
    let hi = (n_r - i0) as isize;
    eno_select(lo, hi, |o| along_theta((i0 as isize + o) as usize)).eval(fr)
}

/// Per-row `theta` cubics of a slice, precomputed for repeated queries.
///
/// Evaluation is algebraically identical to [`eno_bicubic`] on the same data.
#[derive(Debug, Clone)]
pub(crate) struct SlicePatches {
    grid: GridSpec,
    inv_dr: f64,
    inv_dtheta: f64,
    cubics: Vec<NewtonCubic>,
}

impl SlicePatches {
    pub(crate) fn new(grid: &GridSpec) -> Self {
        SlicePatches {
            grid: *grid,
            inv_dr: grid.inv_dr(),
            inv_dtheta: grid.inv_dtheta(),
            cubics: vec![NewtonCubic::default(); grid.slice_len()],
        }
    }

    pub(crate) fn from_values(grid: &GridSpec, values: &[f64]) -> Self {
        let mut patches = Self::new(grid);
        patches.rebuild(values);
        patches
    }

    pub(crate) fn rebuild(&mut self, values: &[f64]) {
        for i in 0..=self.grid.n_r {
            self.rebuild_row(i, values);
        }
    }

    pub(crate) fn rebuild_row(&mut self, i: usize, values: &[f64]) {
        let n = self.grid.n_theta;
        let row = &values[i * n..(i + 1) * n];
        for (j0, c) in self.cubics[i * n..(i + 1) * n].iter_mut().enumerate() {
            *c = periodic_cubic(row, j0);
        }
    }

    /// Two queries sharing the same radius.
    #[inline]
    pub(crate) fn eval_pair(&self, r: f64, theta_a: f64, theta_b: f64) -> (f64, f64) {
        let n = self.grid.n_theta;
        let (ja, ta) = locate_periodic(theta_a, self.inv_dtheta, n);
        let (jb, tb) = locate_periodic(theta_b, self.inv_dtheta, n);
        let (i0, fr) = locate_clamped(r, self.inv_dr, self.grid.n_r);
        let a = radial_at(i0, fr, self.grid.n_r, |i| self.cubics[i * n + ja].eval(ta));
        let b = radial_at(i0, fr, self.grid.n_r, |i| self.cubics[i * n + jb].eval(tb));
        (a, b)
    }

    #[inline]
    pub(crate) fn eval(&self, r: f64, theta: f64) -> f64 {
        let n = self.grid.n_theta;
        let (j0, ft) = locate_periodic(theta, self.inv_dtheta, n);
        radial_eno(self.inv_dr, self.grid.n_r, r, |i| {
            self.cubics[i * n + j0].eval(ft)
        })
    }
}

/// Periodic linear interpolation of an equispaced row over `[0, 2pi)`.
#[inline]
pub(crate) fn periodic_linear(row: &[f64], theta: f64) -> f64 {
    let n = row.len();
    let (j0, t) = locate_periodic(theta, n as f64 / std::f64::consts::TAU, n);
    if t == 0.0 {
        return row[j0];
    }
    let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
    row[j0] + t * (row[j1] - row[j0])
}

/// Bilinear view of a slice: periodic in `theta`, clamped in `r`.
///
/// Weights are non-negative, so the interpolant is monotone in the data.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BilinearSlice<'a> {
    values: &'a [f64],
    n_r: usize,
    n_theta: usize,
    inv_dr: f64,
    inv_dtheta: f64,
}

impl<'a> BilinearSlice<'a> {
    pub(crate) fn new(grid: &GridSpec, values: &'a [f64]) -> Self {
        debug_assert_eq!(values.len(), grid.slice_len());
        BilinearSlice {
            values,
            n_r: grid.n_r,
            n_theta: grid.n_theta,
            inv_dr: grid.inv_dr(),
            inv_dtheta: grid.inv_dtheta(),
        }
    }

    #[inline]
    fn along(&self, i: usize, j0: usize, j1: usize, t: f64) -> f64 {
        let row = &self.values[i * self.n_theta..(i + 1) * self.n_theta];
        row[j0] + t * (row[j1] - row[j0])
    }

    #[inline]
    pub(crate) fn eval(&self, r: f64, theta: f64) -> f64 {
        let n = self.n_theta;
        let (j0, t) = locate_periodic(theta, self.inv_dtheta, n);
        let j1 = if j0 + 1 == n { 0 } else { j0 + 1 };
        let (i0, fr) = locate_clamped(r, self.inv_dr, self.n_r);
        let lo = self.along(i0, j0, j1, t);
        if fr == 0.0 {
            lo
        } else {
            lo + fr * (self.along(i0 + 1, j0, j1, t) - lo)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn grid(n_r: usize, n_theta: usize) -> GridSpec {
        GridSpec {
            n_r,
            n_theta,
            n_s: 1,
            r_max: 2.0,
            s_max: 1.0,
        }
    }

    fn sample(g: &GridSpec, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut v = Vec::with_capacity(g.slice_len());
        for i in 0..=g.n_r {
            for j in 0..g.n_theta {
                v.push(f(g.r(i), g.theta(j)));
            }
        }
        v
    }

    #[test]
    fn constant_row() {
        let row = vec![0.37; 16];
        for k in 0..50 {
            let q = -7.0 + 0.31 * k as f64;
            assert_eq!(eno_cubic_1d_periodic(&row, q).unwrap(), 0.37);
        }
    }

    #[test]
    fn cosine_row() {
        let n = 256;
        let row: Vec<f64> = (0..n).map(|j| (TAU * j as f64 / n as f64).cos()).collect();
        let v = eno_cubic_1d_periodic(&row, PI / 3.0).unwrap();
        assert!((v - 0.5).abs() < 1e-6, "{v}");
    }

    #[test]
    fn nodes_are_reproduced_exactly() {
        let n = 40;
        let row: Vec<f64> = (0..n).map(|j| ((j * 7919) % 13) as f64 * 0.1).collect();
        for j in 0..n {
            let theta = TAU / n as f64 * j as f64;
            assert_eq!(eno_cubic_1d_periodic(&row, theta).unwrap(), row[j]);
        }
    }

    #[test]
    fn too_short_row() {
        assert!(matches!(
            eno_cubic_1d_periodic(&[1.0, 2.0, 3.0], 0.5),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn cubic_data_reproduced_away_from_wrap() {
        let n = 64;
        let h = TAU / n as f64;
        let p = |x: f64| 0.3 * x * x * x - 1.1 * x * x + 0.7 * x - 2.0;
        let row: Vec<f64> = (0..n).map(|j| p(j as f64 * h)).collect();
        for k in 0..200 {
            let x = 4.0 * h + (n as f64 - 8.0) * h * k as f64 / 199.0;
            let got = eno_cubic_1d_periodic(&row, x).unwrap();
            assert!(
                (got - p(x)).abs() < 1e-9 * p(x).abs().max(1.0),
                "{x}: {got} vs {}",
                p(x)
            );
        }
    }

    #[test]
    fn bicubic_smooth_field() {
        let g = grid(400, 400);
        let f = |r: f64, t: f64| r * r * r + t.cos();
        let values = sample(&g, f);
        let slice = GridSlice2D::new(&values, &g).unwrap();
        let v = eno_bicubic(&slice, 0.73, 2.1);
        assert!((v - f(0.73, 2.1)).abs() < 1e-5);
    }

    #[test]
    fn bicubic_constant_and_nodes() {
        let g = grid(12, 10);
        let values = vec![0.25; g.slice_len()];
        let slice = GridSlice2D::new(&values, &g).unwrap();
        for (r, t) in [
            (0.0, 0.0),
            (1.99, 6.2),
            (0.37, -3.0),
            (5.0, 1.0),
            (-1.0, 2.0),
        ] {
            assert_eq!(eno_bicubic(&slice, r, t), 0.25);
        }
        let values = sample(&g, |r, t| (3.0 * r).sin() * (2.0 * t).cos() + r);
        let slice = GridSlice2D::new(&values, &g).unwrap();
        for i in 0..=g.n_r {
            for j in 0..g.n_theta {
                assert_eq!(eno_bicubic(&slice, g.r(i), g.theta(j)), slice.at(i, j));
            }
        }
    }

    #[test]
    fn non_finite_slice_rejected() {
        let g = grid(4, 4);
        let mut values = vec![0.0; g.slice_len()];
        values[7] = f64::NAN;
        assert!(matches!(GridSlice2D::new(&values, &g), Err(Error::Data(_))));
    }

    #[test]
    fn bicubic_reproduces_tensor_cubics() {
        let g = grid(30, 64);
        let p = |r: f64| 0.5 * r * r * r - r * r + 0.2;
        let q = |t: f64| 0.05 * t * t * t - 0.3 * t + 1.0;
        let values = sample(&g, |r, t| p(r) * q(t));
        let slice = GridSlice2D::new(&values, &g).unwrap();
        for k in 0..100 {
            let r = 0.013 + 1.97 * k as f64 / 99.0;
            let t = 0.6 + 5.0 * ((k * 37) % 100) as f64 / 100.0;
            let got = eno_bicubic(&slice, r.min(1.99), t);
            let want = p(r.min(1.99)) * q(t);
            assert!((got - want).abs() < 1e-10, "({r}, {t}): {got} vs {want}");
        }
    }

    #[test]
    fn step_overshoot_is_bounded() {
        let g = grid(40, 64);
        let values = sample(&g, |r, t| {
            if r > 0.9 && (1.0..3.0).contains(&t) {
                1.0
            } else {
                0.0
            }
        });
        let slice = GridSlice2D::new(&values, &g).unwrap();
        for a in 0..200 {
            for b in 0..200 {
                let v = eno_bicubic(&slice, 2.0 * a as f64 / 199.0, TAU * b as f64 / 199.0);
                assert!((-0.5..=1.5).contains(&v), "{v}");
            }
        }
    }

    #[test]
    fn periodicity() {
        let g = grid(20, 50);
        let values = sample(&g, |r, t| (r * 1.7).sin() * (t - 0.3).sin());
        let slice = GridSlice2D::new(&values, &g).unwrap();
        for k in 0..100 {
            let r = 0.02 * k as f64;
            let t = 0.0629 * k as f64;
            let a = eno_bicubic(&slice, r, t);
            let b = eno_bicubic(&slice, r, t + TAU);
            assert!((a - b).abs() < 1e-14, "{a} {b}");
        }
    }

    #[test]
    fn patches_match_direct_evaluation() {
        let g = grid(25, 36);
        let values = sample(&g, |r, t| {
            (r * 2.3).sin() * (3.0 * t).cos() + if t > 2.0 { 0.3 } else { 0.0 }
        });
        let slice = GridSlice2D::new(&values, &g).unwrap();
        let patches = SlicePatches::from_values(&g, &values);
        for k in 0..500 {
            let r = -0.1 + 2.2 * ((k * 7) % 500) as f64 / 500.0;
            let t = -1.0 + 9.0 * k as f64 / 500.0;
            assert_eq!(patches.eval(r, t), eno_bicubic(&slice, r, t));
        }
    }

    #[test]
    fn tiny_radial_axis_degrades() {
        // two radial nodes: linear in r
        let g = grid(1, 8);
        let values = sample(&g, |r, _| 3.0 * r + 1.0);
        let slice = GridSlice2D::new(&values, &g).unwrap();
        assert!((eno_bicubic(&slice, 0.5, 0.4) - 2.5).abs() < 1e-14);
    }

    #[test]
    fn bilinear_hits_nodes_and_is_exact_for_radial_lines() {
        let g = grid(10, 12);
        let values = sample(&g, |r, t| 2.0 * r - 1.0 + (3.0 * t).cos());
        let slice = BilinearSlice::new(&g, &values);
        for i in 0..=g.n_r {
            for j in 0..g.n_theta {
                assert_eq!(slice.eval(g.r(i), g.theta(j)), values[g.index(i, j)]);
            }
        }
        let line = sample(&g, |r, _| 2.0 * r - 1.0);
        let slice = BilinearSlice::new(&g, &line);
        assert!((slice.eval(0.73, 2.9) - 0.46).abs() < 1e-14);
        // clamped beyond the outer radius, wrapped in theta
        assert!((slice.eval(9.0, -40.0) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn periodic_linear_wraps() {
        let row = [0.0, 1.0, 2.0, 3.0];
        assert!((periodic_linear(&row, -FRAC_PI_4) - 1.5).abs() < 1e-14);
        assert!((periodic_linear(&row, FRAC_PI_4 + TAU) - 0.5).abs() < 1e-14);
    }

    proptest::proptest! {
        #[test]
        fn bilinear_stays_within_the_data(
            values in proptest::collection::vec(-5.0..5.0f64, 6 * 8),
            r in -1.0..3.0f64,
            t in -10.0..10.0f64,
        ) {
            let g = grid(5, 8);
            let v = BilinearSlice::new(&g, &values).eval(r, t);
            let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            proptest::prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
        }
    }

    mod interior {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn branchless_stencil_matches_general_selection(
                y in proptest::array::uniform6(-2.0..2.0f64),
                shape in 0..3usize,
            ) {
                let mut y = y;
                if shape == 1 {
                    y[0] = y[2];
                    y[1] = y[3];
                }
                if shape == 2 {
                    y = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
                }
                prop_assert_eq!(eno_interior(y), eno_select(-2, 3, |o| y[(o + 2) as usize]));
            }
        }
    }
}
