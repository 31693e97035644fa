//! Risk-neutral value function: the expected time to reach the target,
//! `v(r, theta, q)`, and the policy minimizing it.
//!
//! `v` is the fixed point of the semi-Lagrangian update
//!
//! ```text
//! v(x, q) <- min( min_u [ tau + (v(xi+) + v(xi-)) / 2 ],  C + G[v(., ., q')](x) )
//! ```
//!
//! with `v = 0` on the target, iterated until the sup-norm change drops below
//! the tolerance.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aware::expect_kind;
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::gridfile::{write_grid_file, FieldData, FieldKind, GridFile, GridHeader};
use crate::interp::{locate_periodic, periodic_eval, periodic_linear, BilinearSlice, SlicePatches};
use crate::model::{Action, ModelParams, Tack};
use crate::quadrature::{switch_expectation, switch_nodes};
use crate::scheme::{Feet, Sampler, SteerKernel};
use crate::search::{maximize_angle, AngleGrid};

/// Values are capped at this multiple of the grid's maximum deadline.
pub const CAP_FACTOR: f64 = 10.0;

/// Inner passes allowed per row in a Gauss-Seidel policy-evaluation sweep.
const ROW_PASSES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// In-place sweeps in increasing radius; sequential.
    #[default]
    GaussSeidel,
    /// Whole-grid updates from the previous iterate; parallel.
    Jacobi,
}

/// How foot values are read off the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interpolation {
    /// Bilinear, periodic in `theta`. Monotone, so the iteration converges.
    #[default]
    Linear,
    /// The ENO cubic used by the risk-aware solver. Stencil switching can
    /// leave the iteration cycling at a small residual.
    Eno,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeutralOptions {
    pub angles: usize,
    pub gss_tol: f64,
    /// Stop once the sup-norm change of a greedy update is below this.
    pub tol: f64,
    /// Limit on greedy updates.
    pub max_iters: usize,
    pub sweep: Sweep,
    /// Local time step of the update; the grid's budget step when unset.
    pub time_step: Option<f64>,
    pub interpolation: Interpolation,
    /// Fixed-policy sweeps after each greedy update. Zero gives plain value
    /// iteration.
    pub eval_sweeps: usize,
}

impl Default for NeutralOptions {
    fn default() -> Self {
        NeutralOptions {
            angles: 65,
            gss_tol: 1e-4,
            tol: 1e-7,
            max_iters: 5000,
            sweep: Sweep::GaussSeidel,
            time_step: None,
            interpolation: Interpolation::Linear,
            eval_sweeps: 20,
        }
    }
}

/// Expected arrival times and the minimizing actions on both tacks.
#[derive(Debug)]
pub struct NeutralField {
    grid: GridSpec,
    params: ModelParams,
    value: FieldData,
    policy: FieldData,
    residuals: Vec<f64>,
}

impl NeutralField {
    pub fn new(
        grid: GridSpec,
        params: ModelParams,
        value: FieldData,
        policy: FieldData,
    ) -> Result<Self> {
        let want = 2 * grid.slice_len();
        if value.len() != want || policy.len() != want {
            return Err(Error::Data(format!(
                "neutral field has {} values and {} actions, grid needs {want}",
                value.len(),
                policy.len()
            )));
        }
        Ok(NeutralField {
            grid,
            params,
            value,
            policy,
            residuals: Vec::new(),
        })
    }

    /// Opens a value file and its policy file.
    pub fn open(value_path: &Path, policy_path: &Path) -> Result<Self> {
        let v = GridFile::open(value_path)?;
        expect_kind(value_path, &v.header, FieldKind::NeutralValue)?;
        let p = GridFile::open(policy_path)?;
        expect_kind(policy_path, &p.header, FieldKind::NeutralPolicy)?;
        if p.header.grid != v.header.grid || p.header.config_hash != v.header.config_hash {
            return Err(Error::Data(format!(
                "{} and {} come from different solves",
                value_path.display(),
                policy_path.display()
            )));
        }
        Self::new(v.header.grid, v.header.model, v.data, p.data)
    }

    /// Writes the value and policy files.
    pub fn write(&self, value_path: &Path, policy_path: &Path, config_hash: &str) -> Result<()> {
        let mut header = GridHeader::new(
            FieldKind::NeutralValue,
            &self.grid,
            &self.params,
            config_hash,
        );
        header.metadata = serde_json::json!({
            "cap": self.cap(),
            "capped_cells": self.capped_count(),
            "iterations": self.residuals.len(),
            "final_residual": self.residuals.last(),
        });
        write_grid_file(value_path, &header, &self.value)?;
        header.kind = FieldKind::NeutralPolicy;
        write_grid_file(policy_path, &header, &self.policy)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.value
    }

    pub fn encoded_policy(&self) -> &[f64] {
        &self.policy
    }

    pub fn value(&self, tack: Tack, i: usize, j: usize) -> f64 {
        self.value[tack.index() * self.grid.slice_len() + self.grid.index(i, j)]
    }

    pub fn action(&self, tack: Tack, i: usize, j: usize) -> Action {
        Action::decode(self.policy[tack.index() * self.grid.slice_len() + self.grid.index(i, j)])
    }

    /// Sup-norm change of every greedy update; empty for fields read from
    /// disk.
    pub fn residuals(&self) -> &[f64] {
        &self.residuals
    }

    pub fn cap(&self) -> f64 {
        CAP_FACTOR * self.grid.s_max
    }

    pub fn is_capped(&self, tack: Tack, i: usize, j: usize) -> bool {
        self.value(tack, i, j) >= self.cap()
    }

    pub fn capped_count(&self) -> usize {
        let cap = self.cap();
        self.value.iter().filter(|&&v| v >= cap).count()
    }
}

/// Interpolant over both tack planes.
struct Surface {
    grid: GridSpec,
    patches: Option<[SlicePatches; 2]>,
}

impl Surface {
    fn new(grid: &GridSpec, interpolation: Interpolation, values: &[f64]) -> Self {
        let plane = grid.slice_len();
        let patches = match interpolation {
            Interpolation::Linear => None,
            Interpolation::Eno => Some([
                SlicePatches::from_values(grid, &values[..plane]),
                SlicePatches::from_values(grid, &values[plane..]),
            ]),
        };
        Surface {
            grid: *grid,
            patches,
        }
    }

    fn refresh(&mut self, values: &[f64]) {
        if let Some(p) = &mut self.patches {
            let plane = self.grid.slice_len();
            p[0].rebuild(&values[..plane]);
            p[1].rebuild(&values[plane..]);
        }
    }

    fn refresh_row(&mut self, i: usize, values: &[f64]) {
        if let Some(p) = &mut self.patches {
            let plane = self.grid.slice_len();
            p[0].rebuild_row(i, &values[..plane]);
            p[1].rebuild_row(i, &values[plane..]);
        }
    }

    #[inline]
    fn average(&self, q: usize, values: &[f64], feet: Feet) -> f64 {
        match &self.patches {
            Some(p) => p[q].average(feet),
            None => {
                let plane = self.grid.slice_len();
                BilinearSlice::new(&self.grid, &values[q * plane..(q + 1) * plane]).average(feet)
            }
        }
    }

    #[inline]
    fn along(&self, row: &[f64], theta: f64) -> f64 {
        match self.patches {
            Some(_) => periodic_eval(row, theta),
            None => periodic_linear(row, theta),
        }
    }

    /// Offsets, relative to the located cell, of the row nodes an
    /// interpolation in `theta` may read.
    fn stencil(&self) -> std::ops::Range<usize> {
        match self.patches {
            Some(_) => 0..6,
            None => 2..4,
        }
    }
}

struct Update<'a> {
    grid: &'a GridSpec,
    params: &'a ModelParams,
    kernel: SteerKernel,
    angles: AngleGrid,
    gss_tol: f64,
    tau: f64,
    cap: f64,
}

impl Update<'_> {
    /// Best value, encoded action and feet at `(tack, i, j)`.
    fn greedy(
        &self,
        surface: &Surface,
        values: &[f64],
        tack: Tack,
        i: usize,
        j: usize,
    ) -> (f64, f64, Feet) {
        let q = tack.index();
        let sign = tack.sign();
        let objective = |feet| -surface.average(q, values, feet);
        let choice = maximize_angle(
            &self.angles,
            self.gss_tol,
            |n| objective(self.kernel.scan_feet(i, j, sign, n)),
            |u| objective(self.kernel.feet(i, j, sign, u)),
        );
        let feet = self.kernel.feet(i, j, sign, choice.angle);
        let steer = (self.tau - choice.value).clamp(0.0, self.cap);
        match self.switch(surface, values, tack, i, j) {
            Some(switch) if switch < steer => (switch, Action::SWITCH_SENTINEL, feet),
            _ => (steer, choice.angle, feet),
        }
    }

    /// Greedy update that keeps the held action unless the search finds a
    /// strictly better one. The angle search is local, so without this it
    /// can alternate between two optima and stall the iteration.
    fn improve(
        &self,
        surface: &Surface,
        values: &[f64],
        tack: Tack,
        i: usize,
        j: usize,
        held: Option<(f64, Feet)>,
    ) -> (f64, f64, Feet) {
        let fresh = self.greedy(surface, values, tack, i, j);
        match held {
            Some((action, feet)) => {
                let kept = self.follow(surface, values, tack, i, j, action, feet);
                if kept <= fresh.0 {
                    (kept, action, feet)
                } else {
                    fresh
                }
            }
            None => fresh,
        }
    }

    /// Value at `(tack, i, j)` under a fixed action.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn follow(
        &self,
        surface: &Surface,
        values: &[f64],
        tack: Tack,
        i: usize,
        j: usize,
        action: f64,
        feet: Feet,
    ) -> f64 {
        if action < 0.0 {
            let row = self.opposite_row(values, tack, i);
            (self.params.switch_time + self.expect(surface, row, self.grid.theta(j)))
                .clamp(0.0, self.cap)
        } else {
            (self.tau + surface.average(tack.index(), values, feet)).clamp(0.0, self.cap)
        }
    }

    /// Switch branch, unless it would read a capped value.
    fn switch(
        &self,
        surface: &Surface,
        values: &[f64],
        tack: Tack,
        i: usize,
        j: usize,
    ) -> Option<f64> {
        let row = self.opposite_row(values, tack, i);
        let theta = self.grid.theta(j);
        let n = row.len();
        let stencil = surface.stencil();
        let reads_cap = switch_nodes(theta, &self.params.wind, self.params.switch_time)
            .iter()
            .any(|&z| {
                let (j0, _) = locate_periodic(z, self.grid.inv_dtheta(), n);
                stencil
                    .clone()
                    .any(|o| row[(j0 + n + o - 2) % n] >= self.cap)
            });
        (!reads_cap).then(|| (self.params.switch_time + self.expect(surface, row, theta)).max(0.0))
    }

    fn expect(&self, surface: &Surface, row: &[f64], theta: f64) -> f64 {
        switch_expectation(
            |z| surface.along(row, z),
            theta,
            &self.params.wind,
            self.params.switch_time,
        )
    }

    fn opposite_row<'v>(&self, values: &'v [f64], tack: Tack, i: usize) -> &'v [f64] {
        let n = self.grid.n_theta;
        let at = tack.opposite().index() * self.grid.slice_len() + i * n;
        &values[at..at + n]
    }
}

/// Working state of one solve.
struct Solver<'a> {
    update: Update<'a>,
    surface: Surface,
    value: Vec<f64>,
    policy: Vec<f64>,
    feet: Vec<Feet>,
    first_free: usize,
    rows: usize,
    /// Whether `policy` and `feet` hold actions from an earlier update.
    has_policy: bool,
}

impl Solver<'_> {
    fn n(&self) -> usize {
        self.update.grid.n_theta
    }

    fn plane(&self) -> usize {
        self.update.grid.slice_len()
    }

    /// Greedy update in place, row by row in increasing radius.
    fn greedy_in_place(&mut self) -> f64 {
        let (n, plane) = (self.n(), self.plane());
        let mut residual: f64 = 0.0;
        let mut fresh = vec![(0.0, 0.0, (0.0, 0.0, 0.0)); n];
        for i in self.first_free..self.rows {
            for tack in Tack::BOTH {
                let at = tack.index() * plane + i * n;
                for (j, cell) in fresh.iter_mut().enumerate() {
                    let held = self
                        .has_policy
                        .then(|| (self.policy[at + j], self.feet[at + j]));
                    *cell = self
                        .update
                        .improve(&self.surface, &self.value, tack, i, j, held);
                }
                for (k, &(v, a, f)) in fresh.iter().enumerate() {
                    residual = residual.max((self.value[at + k] - v).abs());
                    self.value[at + k] = v;
                    self.policy[at + k] = a;
                    self.feet[at + k] = f;
                }
                self.surface.refresh_row(i, &self.value);
            }
        }
        residual
    }

    /// Greedy update of every cell from the current iterate.
    fn greedy_jacobi(&mut self) -> f64 {
        let (n, rows, first_free) = (self.n(), self.rows, self.first_free);
        let mut next = self.value.clone();
        let (update, surface, value, has_policy) =
            (&self.update, &self.surface, &self.value, self.has_policy);
        let residual = next
            .par_chunks_mut(n)
            .zip(self.policy.par_chunks_mut(n))
            .zip(self.feet.par_chunks_mut(n))
            .enumerate()
            .filter(|(row, _)| row % rows >= first_free)
            .map(|(row, ((fresh, actions), feet))| {
                let (tack, i) = (Tack::BOTH[row / rows], row % rows);
                let mut residual: f64 = 0.0;
                for j in 0..n {
                    let held = has_policy.then(|| (actions[j], feet[j]));
                    let (v, a, f) = update.improve(surface, value, tack, i, j, held);
                    residual = residual.max((fresh[j] - v).abs());
                    (fresh[j], actions[j], feet[j]) = (v, a, f);
                }
                residual
            })
            .reduce(|| 0.0, f64::max);
        self.value = next;
        self.surface.refresh(&self.value);
        residual
    }

    /// Fixed-policy sweep in increasing radius. Each row pair is iterated
    /// until it settles, since most feet land in the row they start from.
    fn evaluate_in_place(&mut self, settle: f64) -> f64 {
        let (n, plane) = (self.n(), self.plane());
        let mut change: f64 = 0.0;
        let mut start = vec![0.0; 2 * n];
        let mut fresh = vec![0.0; 2 * n];
        for i in self.first_free..self.rows {
            for q in 0..2 {
                start[q * n..(q + 1) * n]
                    .copy_from_slice(&self.value[q * plane + i * n..q * plane + (i + 1) * n]);
            }
            for _ in 0..ROW_PASSES {
                for (q, tack) in Tack::BOTH.into_iter().enumerate() {
                    for j in 0..n {
                        let at = q * plane + i * n + j;
                        fresh[q * n + j] = self.update.follow(
                            &self.surface,
                            &self.value,
                            tack,
                            i,
                            j,
                            self.policy[at],
                            self.feet[at],
                        );
                    }
                }
                let mut delta: f64 = 0.0;
                for q in 0..2 {
                    let at = q * plane + i * n;
                    for (old, new) in self.value[at..at + n]
                        .iter_mut()
                        .zip(&fresh[q * n..(q + 1) * n])
                    {
                        delta = delta.max((*old - new).abs());
                        *old = *new;
                    }
                }
                self.surface.refresh_row(i, &self.value);
                if delta < settle {
                    break;
                }
            }
            for q in 0..2 {
                let at = q * plane + i * n;
                for (a, b) in self.value[at..at + n]
                    .iter()
                    .zip(&start[q * n..(q + 1) * n])
                {
                    change = change.max((a - b).abs());
                }
            }
        }
        change
    }

    /// Fixed-policy update of every cell from the current iterate.
    fn evaluate_jacobi(&mut self) -> f64 {
        let (n, rows, first_free) = (self.n(), self.rows, self.first_free);
        let mut next = self.value.clone();
        let (update, surface, value) = (&self.update, &self.surface, &self.value);
        let change = next
            .par_chunks_mut(n)
            .zip(self.policy.par_chunks(n))
            .zip(self.feet.par_chunks(n))
            .enumerate()
            .filter(|(row, _)| row % rows >= first_free)
            .map(|(row, ((fresh, actions), feet))| {
                let (tack, i) = (Tack::BOTH[row / rows], row % rows);
                let mut change: f64 = 0.0;
                for j in 0..n {
                    let v = update.follow(surface, value, tack, i, j, actions[j], feet[j]);
                    change = change.max((fresh[j] - v).abs());
                    fresh[j] = v;
                }
                change
            })
            .reduce(|| 0.0, f64::max);
        self.value = next;
        self.surface.refresh(&self.value);
        change
    }
}

/// Solves the stationary problem on the `(r, theta)` part of `grid`.
///
/// Greedy updates alternate with [`NeutralOptions::eval_sweeps`] sweeps that
/// hold the policy fixed (modified policy iteration). Both kinds of sweep
/// share the fixed point, and the residual is measured on greedy updates only.
pub fn solve_neutral(
    grid: &GridSpec,
    params: &ModelParams,
    options: &NeutralOptions,
) -> Result<NeutralField> {
    solve_neutral_with(grid, params, options, |_, _| {})
}

/// Like [`solve_neutral`], reporting `(iteration, residual)` after every
/// greedy update.
pub fn solve_neutral_with(
    grid: &GridSpec,
    params: &ModelParams,
    options: &NeutralOptions,
    mut progress: impl FnMut(usize, f64),
) -> Result<NeutralField> {
    params.validate()?;
    grid.validate()?;
    if (grid.r_max - params.outer_radius).abs() > 1e-12 * params.outer_radius {
        return Err(Error::Config(format!(
            "grid radius {} differs from the domain radius {}",
            grid.r_max, params.outer_radius
        )));
    }
    if !(options.tol > 0.0) || !(options.gss_tol > 0.0) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    let tau = options.time_step.unwrap_or(grid.ds());
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!(
            "time step must be positive, got {tau}"
        )));
    }
    let angles = AngleGrid::new(options.angles)?;
    let cap = CAP_FACTOR * grid.s_max;
    let plane = grid.slice_len();
    let rows = grid.n_r + 1;
    let r_tgt = params.target_radius;
    let f_max = params.f_max();

    let mut value = vec![0.0; 2 * plane];
    for (row, chunk) in value.chunks_exact_mut(grid.n_theta).enumerate() {
        let r = grid.r(row % rows);
        if r > r_tgt {
            chunk.fill(((r - r_tgt) / f_max).min(cap));
        }
    }
    let mut solver = Solver {
        update: Update {
            grid,
            params,
            kernel: SteerKernel::new(params, grid, &angles, tau),
            angles,
            gss_tol: options.gss_tol,
            tau,
            cap,
        },
        surface: Surface::new(grid, options.interpolation, &value),
        value,
        policy: vec![0.0; 2 * plane],
        feet: vec![(0.0, 0.0, 0.0); 2 * plane],
        first_free: (0..rows).find(|&i| grid.r(i) > r_tgt).unwrap_or(rows),
        rows,
        has_policy: false,
    };

    let mut residuals = Vec::new();
    for iteration in 1..=options.max_iters {
        let residual = match options.sweep {
            Sweep::GaussSeidel => solver.greedy_in_place(),
            Sweep::Jacobi => solver.greedy_jacobi(),
        };
        solver.has_policy = true;
        residuals.push(residual);
        progress(iteration, residual);
        if residual < options.tol {
            let mut field = NeutralField::new(
                *grid,
                params.clone(),
                FieldData::Owned(solver.value),
                FieldData::Owned(solver.policy),
            )?;
            field.residuals = residuals;
            return Ok(field);
        }
        let settle = 0.01 * residual.max(options.tol);
        for _ in 0..options.eval_sweeps {
            let change = match options.sweep {
                Sweep::GaussSeidel => solver.evaluate_in_place(settle),
                Sweep::Jacobi => solver.evaluate_jacobi(),
            };
            if change < settle {
                break;
            }
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iters,
        residual: residuals.last().copied().unwrap_or(f64::INFINITY),
    })
}
