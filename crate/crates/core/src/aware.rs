//! Risk-aware value function: the probability `w(r, theta, q, s)` of reaching
//! the target within the remaining budget `s`, computed by marching causally
//! from `s = 0` upwards one budget step at a time.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::gridfile::{FieldData, FieldKind, GridFile, GridFileWriter, GridHeader};
use crate::interp::{periodic_eval, GridSlice2D, SlicePatches};
use crate::model::{Action, ModelParams, Tack};
use crate::quadrature::switch_expectation;
use crate::scheme::{Sampler, SteerKernel};
use crate::search::{maximize_angle, AngleChoice, AngleGrid};

/// Numerical knobs of the risk-aware solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AwareOptions {
    /// Size of the coarse steering-angle scan.
    pub angles: usize,
    /// Golden-section bracket width at which refinement stops (radians).
    pub gss_tol: f64,
}

impl Default for AwareOptions {
    fn default() -> Self {
        AwareOptions {
            angles: 65,
            gss_tol: 1e-4,
        }
    }
}

/// Cell counts accumulated over a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwareStats {
    /// Cells where the angle search ran.
    pub searched: u64,
    /// Cells zeroed by the reachability bound.
    pub pruned: u64,
    /// Cells whose best action is a tack switch.
    pub switches: u64,
}

impl std::ops::AddAssign for AwareStats {
    fn add_assign(&mut self, o: Self) {
        self.searched += o.searched;
        self.pruned += o.pruned;
        self.switches += o.switches;
    }
}

fn check_field(kind: FieldKind, grid: &GridSpec, data: &[f64]) -> Result<()> {
    let want: usize = kind.dims(grid).iter().product();
    if data.len() != want {
        return Err(Error::Data(format!(
            "{kind:?} field has {} values, grid needs {want}",
            data.len()
        )));
    }
    Ok(())
}

fn plane_offset(grid: &GridSpec, k: usize, tack: Tack) -> usize {
    (2 * k + tack.index()) * grid.slice_len()
}

/// `W` on every `(s_k, q, r_i, theta_j)` gridpoint.
#[derive(Debug)]
pub struct ValueField {
    grid: GridSpec,
    params: ModelParams,
    data: FieldData,
}

impl ValueField {
    pub fn new(grid: GridSpec, params: ModelParams, data: FieldData) -> Result<Self> {
        check_field(FieldKind::AwareValue, &grid, &data)?;
        Ok(ValueField { grid, params, data })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let file = GridFile::open(path)?;
        expect_kind(path, &file.header, FieldKind::AwareValue)?;
        Self::new(file.header.grid, file.header.model, file.data)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }

    pub fn slice(&self, k: usize, tack: Tack) -> &[f64] {
        let start = plane_offset(&self.grid, k, tack);
        &self.data[start..start + self.grid.slice_len()]
    }

    pub fn get(&self, k: usize, tack: Tack, i: usize, j: usize) -> f64 {
        self.data[plane_offset(&self.grid, k, tack) + self.grid.index(i, j)]
    }

    /// `w` along the budget axis at one gridpoint.
    pub fn budget_curve(&self, tack: Tack, i: usize, j: usize) -> Vec<f64> {
        (0..=self.grid.n_s)
            .map(|k| self.get(k, tack, i, j))
            .collect()
    }
}

/// Optimal action on every gridpoint, aligned with a [`ValueField`].
#[derive(Debug)]
pub struct PolicyField {
    grid: GridSpec,
    data: FieldData,
}

impl PolicyField {
    pub fn new(grid: GridSpec, data: FieldData) -> Result<Self> {
        check_field(FieldKind::AwarePolicy, &grid, &data)?;
        Ok(PolicyField { grid, data })
    }

    pub fn open(path: &Path) -> Result<Self> {
        let file = GridFile::open(path)?;
        expect_kind(path, &file.header, FieldKind::AwarePolicy)?;
        Self::new(file.header.grid, file.data)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn encoded(&self) -> &[f64] {
        &self.data
    }

    pub fn slice(&self, k: usize, tack: Tack) -> &[f64] {
        let start = plane_offset(&self.grid, k, tack);
        &self.data[start..start + self.grid.slice_len()]
    }

    pub fn action(&self, k: usize, tack: Tack, i: usize, j: usize) -> Action {
        Action::decode(self.data[plane_offset(&self.grid, k, tack) + self.grid.index(i, j)])
    }
}

pub(crate) fn expect_kind(path: &Path, header: &GridHeader, kind: FieldKind) -> Result<()> {
    if header.kind != kind {
        return Err(Error::Data(format!(
            "{}: expected a {kind:?} file, found {:?}",
            path.display(),
            header.kind
        )));
    }
    Ok(())
}

/// Receives finished budget slices in increasing `k`.
///
/// `values` and `policy` hold both tacks, tack-major, in grid-file order.
pub trait SliceSink {
    fn accept(&mut self, k: usize, values: &[f64], policy: &[f64]) -> Result<()>;
}

impl<F: FnMut(usize, &[f64], &[f64]) -> Result<()>> SliceSink for F {
    fn accept(&mut self, k: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        self(k, values, policy)
    }
}

/// Collects the whole field in memory.
#[derive(Debug, Default)]
pub struct MemorySink {
    values: Vec<f64>,
    policy: Vec<f64>,
}

impl MemorySink {
    pub fn into_fields(
        self,
        grid: &GridSpec,
        params: &ModelParams,
    ) -> Result<(ValueField, PolicyField)> {
        Ok((
            ValueField::new(*grid, params.clone(), FieldData::Owned(self.values))?,
            PolicyField::new(*grid, FieldData::Owned(self.policy))?,
        ))
    }
}

impl SliceSink for MemorySink {
    fn accept(&mut self, _k: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        self.values.extend_from_slice(values);
        self.policy.extend_from_slice(policy);
        Ok(())
    }
}

/// Streams the field into a value file and a policy file.
pub struct FileSink {
    value: GridFileWriter,
    policy: GridFileWriter,
}

impl FileSink {
    pub fn create(
        value_path: &Path,
        policy_path: &Path,
        grid: &GridSpec,
        params: &ModelParams,
        config_hash: &str,
    ) -> Result<Self> {
        let header = |kind| GridHeader::new(kind, grid, params, config_hash);
        Ok(FileSink {
            value: GridFileWriter::create(value_path, &header(FieldKind::AwareValue))?,
            policy: GridFileWriter::create(policy_path, &header(FieldKind::AwarePolicy))?,
        })
    }

    pub fn finish(self) -> Result<()> {
        self.value.finish()?;
        self.policy.finish()
    }
}

impl SliceSink for FileSink {
    fn accept(&mut self, _k: usize, values: &[f64], policy: &[f64]) -> Result<()> {
        self.value.write(values)?;
        self.policy.write(policy)
    }
}

fn check_setup(grid: &GridSpec, params: &ModelParams) -> Result<usize> {
    params.validate()?;
    grid.validate()?;
    if (grid.r_max - params.outer_radius).abs() > 1e-12 * params.outer_radius {
        return Err(Error::Config(format!(
            "grid radius {} differs from the domain radius {}",
            grid.r_max, params.outer_radius
        )));
    }
    grid.switch_offset(params.switch_time)
}

fn steering_choice(
    kernel: &SteerKernel,
    angles: &AngleGrid,
    tol: f64,
    sampler: &impl Sampler,
    i: usize,
    j: usize,
    sign: f64,
) -> AngleChoice {
    let value = |feet| sampler.average(feet).clamp(0.0, 1.0);
    maximize_angle(
        angles,
        tol,
        |n| value(kernel.scan_feet(i, j, sign, n)),
        |u| value(kernel.feet(i, j, sign, u)),
    )
}

fn check_cell(grid: &GridSpec, i: usize, j: usize) -> Result<()> {
    if i == 0 {
        return Err(Error::Singular);
    }
    if i > grid.n_r || j >= grid.n_theta {
        return Err(Error::Data(format!(
            "gridpoint ({i}, {j}) is outside the grid"
        )));
    }
    Ok(())
}

/// Two-node expectation of the previous slice after steering at `u` for one
/// budget step from gridpoint `(i, j)`, clamped to `[0, 1]`.
pub fn steer_value(
    slice_prev: &GridSlice2D<'_>,
    i: usize,
    j: usize,
    u: f64,
    tack: Tack,
    params: &ModelParams,
) -> Result<f64> {
    let grid = slice_prev.grid();
    check_cell(grid, i, j)?;
    crate::model::polar_speed(&params.polar, u)?;
    let kernel = SteerKernel::new(params, grid, &AngleGrid::new(3)?, grid.ds());
    Ok(slice_prev
        .average(kernel.feet(i, j, tack.sign(), u))
        .clamp(0.0, 1.0))
}

/// Best steering angle at `(i, j)` against the previous slice.
pub fn maximize_steering(
    slice_prev: &GridSlice2D<'_>,
    i: usize,
    j: usize,
    tack: Tack,
    params: &ModelParams,
    angles: &AngleGrid,
    gss_tol: f64,
) -> Result<AngleChoice> {
    let grid = slice_prev.grid();
    check_cell(grid, i, j)?;
    let kernel = SteerKernel::new(params, grid, angles, grid.ds());
    Ok(steering_choice(
        &kernel,
        angles,
        gss_tol,
        slice_prev,
        i,
        j,
        tack.sign(),
    ))
}

/// Value of switching tack at `(s_k, q, r_i, theta_j)`: the Gaussian average of
/// the opposite tack's row at budget `s_k - C`, clamped to `[0, 1]`.
pub fn switch_value(field: &ValueField, k: usize, tack: Tack, i: usize, j: usize) -> Result<f64> {
    let grid = field.grid();
    let offset = grid.switch_offset(field.params.switch_time)?;
    if k < offset {
        return Err(Error::Domain {
            what: "budget s_k",
            value: grid.s(k),
            domain: "[C, s_max] (a switch needs at least C of budget)",
        });
    }
    if i > grid.n_r || j >= grid.n_theta || k > grid.n_s {
        return Err(Error::Data(format!(
            "gridpoint ({k}, {i}, {j}) is outside the grid"
        )));
    }
    let plane = field.slice(k - offset, tack.opposite());
    let n = grid.n_theta;
    Ok(switch_row(
        &plane[i * n..(i + 1) * n],
        grid.theta(j),
        &field.params,
    ))
}

#[inline]
fn switch_row(row: &[f64], theta: f64, params: &ModelParams) -> f64 {
    switch_expectation(
        |z| periodic_eval(row, z),
        theta,
        &params.wind,
        params.switch_time,
    )
    .clamp(0.0, 1.0)
}

/// Solves on `grid` and keeps the whole field in memory.
pub fn solve_aware(
    grid: &GridSpec,
    params: &ModelParams,
    options: &AwareOptions,
) -> Result<(ValueField, PolicyField, AwareStats)> {
    let mut sink = MemorySink::default();
    let stats = solve_aware_into(grid, params, options, &mut sink)?;
    let (value, policy) = sink.into_fields(grid, params)?;
    Ok((value, policy, stats))
}

/// Solves on `grid`, handing each finished budget slice to `sink`.
///
/// Only the last `C / ds + 1` slices are kept in memory.
pub fn solve_aware_into(
    grid: &GridSpec,
    params: &ModelParams,
    options: &AwareOptions,
    sink: &mut impl SliceSink,
) -> Result<AwareStats> {
    let offset = check_setup(grid, params)?;
    if !(options.gss_tol > 0.0) {
        return Err(Error::Config(format!(
            "gss_tol must be positive, got {}",
            options.gss_tol
        )));
    }
    let angles = AngleGrid::new(options.angles)?;
    let kernel = SteerKernel::new(params, grid, &angles, grid.ds());
    let plane = grid.slice_len();
    let n = grid.n_theta;
    let rows = grid.n_r + 1;
    let f_max = params.f_max();
    let r_tgt = params.target_radius;

    let mut ring: Vec<Vec<f64>> = vec![Vec::new(); offset + 1];
    let mut policy = vec![0.0; 2 * plane];
    let mut stats = AwareStats::default();

    let mut first = vec![0.0; 2 * plane];
    for (row, chunk) in first.chunks_exact_mut(n).enumerate() {
        if grid.r(row % rows) <= r_tgt {
            chunk.fill(1.0);
        }
    }
    sink.accept(0, &first, &policy)?;
    ring[0] = first;

    let mut patches = [SlicePatches::new(grid), SlicePatches::new(grid)];

    for k in 1..=grid.n_s {
        let s_k = grid.s(k);
        let prev = &ring[(k - 1) % (offset + 1)];
        for tack in Tack::BOTH {
            let q = tack.index();
            let values = &prev[q * plane..(q + 1) * plane];
            patches[q].rebuild(values);
        }
        let mut next = std::mem::take(&mut ring[k % (offset + 1)]);
        next.resize(2 * plane, 0.0);
        let switch_from = (k >= offset).then(|| &ring[(k - offset) % (offset + 1)]);

        let row_stats = next
            .par_chunks_mut(n)
            .zip(policy.par_chunks_mut(n))
            .enumerate()
            .map(|(row, (values, actions))| {
                let tack = Tack::BOTH[row / rows];
                let q = tack.index();
                let i = row % rows;
                let r = grid.r(i);
                let mut st = AwareStats::default();
                if r <= r_tgt {
                    values.fill(1.0);
                    actions.fill(0.0);
                    return st;
                }
                if (r - r_tgt) / f_max > s_k {
                    values.fill(0.0);
                    actions.fill(0.0);
                    st.pruned += n as u64;
                    return st;
                }
                let opposite = switch_from.map(|s| {
                    let p = tack.opposite().index() * plane + i * n;
                    &s[p..p + n]
                });
                for j in 0..n {
                    st.searched += 1;
                    let choice = steering_choice(
                        &kernel,
                        &angles,
                        options.gss_tol,
                        &patches[q],
                        i,
                        j,
                        tack.sign(),
                    );
                    values[j] = choice.value;
                    actions[j] = choice.angle;
                    if let Some(row) = opposite {
                        let w = switch_row(row, grid.theta(j), params);
                        if w > choice.value {
                            values[j] = w;
                            actions[j] = Action::SWITCH_SENTINEL;
                            st.switches += 1;
                        }
                    }
                }
                st
            })
            .reduce(AwareStats::default, |mut a, b| {
                a += b;
                a
            });
        stats += row_stats;
        sink.accept(k, &next, &policy)?;
        ring[k % (offset + 1)] = next;
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PolarCurve, WindParams};
    use std::f64::consts::PI;

    fn params(a: f64, sigma: f64) -> ModelParams {
        ModelParams {
            wind: WindParams::new(a, sigma).unwrap(),
            polar: PolarCurve::racing_default(0.05).unwrap(),
            switch_time: 2.0,
            target_radius: 0.1,
            outer_radius: 2.0,
        }
    }

    #[test]
    fn steer_value_on_constant_slices() {
        let grid = GridSpec::with_budget_step(20, 24, 2.0, 4.0, 0.025).unwrap();
        let p = params(0.05, 0.05);
        for c in [0.0, 1.0] {
            let values = vec![c; grid.slice_len()];
            let slice = GridSlice2D::new(&values, &grid).unwrap();
            for (i, j, u) in [(1, 0, 0.0), (7, 5, 1.3), (20, 23, PI)] {
                assert_eq!(steer_value(&slice, i, j, u, Tack::Port, &p).unwrap(), c);
            }
        }
    }

    #[test]
    fn steer_value_straight_into_target() {
        // theta_7 = 105 degrees is the top-speed angle, so on port at u = 105
        // degrees the boat heads straight in: r_dot = -0.05, and one step of
        // 0.4 carries r = 0.02 onto the origin. Both feet land in the target.
        let grid = GridSpec::with_budget_step(200, 24, 2.0, 0.8, 0.4).unwrap();
        let mut p = params(0.0, 0.05);
        p.target_radius = 0.005;
        let values: Vec<f64> = (0..=grid.n_r)
            .flat_map(|i| std::iter::repeat_n(if grid.r(i) <= 0.005 { 1.0 } else { 0.0 }, 24))
            .collect();
        let slice = GridSlice2D::new(&values, &grid).unwrap();
        let u = 105f64.to_radians();
        assert!((grid.theta(7) - u).abs() < 1e-12);
        let (plus, minus) =
            crate::quadrature::diffusion_feet(0.02, grid.theta(7), u, Tack::Port, 0.4, &p).unwrap();
        assert!(plus.0.abs() < 1e-12 && minus.0.abs() < 1e-12);
        assert_eq!(steer_value(&slice, 2, 7, u, Tack::Port, &p).unwrap(), 1.0);
        // no speed at u = 0: the boat stays outside
        assert_eq!(steer_value(&slice, 2, 7, 0.0, Tack::Port, &p).unwrap(), 0.0);
    }

    #[test]
    fn switch_value_closed_form() {
        let grid = GridSpec::with_budget_step(4, 256, 2.0, 4.0, 0.5).unwrap();
        let p = params(0.0, 0.05);
        let mut data = vec![0.0; FieldKind::AwareValue.dims(&grid).iter().product()];
        let n = grid.n_theta;
        for k in 0..=grid.n_s {
            for i in 0..=grid.n_r {
                for j in 0..n {
                    let at = plane_offset(&grid, k, Tack::Port) + grid.index(i, j);
                    data[at] = 0.5 * (1.0 + grid.theta(j).cos());
                }
            }
        }
        let field = ValueField::new(grid, p.clone(), FieldData::Owned(data)).unwrap();
        let got = switch_value(&field, 4, Tack::Starboard, 2, 0).unwrap();
        // three-node rule on (1 + cos z) / 2 with nodes 0, +-0.05 * 2 * sqrt(3/2)
        let h = 0.1 * 1.5f64.sqrt();
        let rule = (0.5 * (1.0 + h.cos()) * 2.0 + 4.0) / 6.0;
        assert!((got - rule).abs() < 1e-8, "{got} vs {rule}");
        let exact = 0.5 * (1.0 + (-0.5 * 2.0 * 0.05f64 * 0.05).exp());
        assert!((rule - exact).abs() < 1e-7);
        // rows of ones and zeros
        assert_eq!(switch_value(&field, 4, Tack::Port, 2, 9).unwrap(), 0.0);
        assert!(switch_value(&field, 3, Tack::Starboard, 2, 0).is_err());
    }

    #[test]
    fn early_slices_are_pruned() {
        let grid = GridSpec::with_budget_step(20, 16, 2.0, 4.0, 0.5).unwrap();
        let p = params(0.0, 0.05);
        let (w, a, stats) = solve_aware(&grid, &p, &AwareOptions::default()).unwrap();
        assert!(stats.pruned > 0);
        for tack in Tack::BOTH {
            for i in 0..=grid.n_r {
                for j in 0..grid.n_theta {
                    let target = grid.r(i) <= p.target_radius;
                    assert_eq!(w.get(0, tack, i, j), if target { 1.0 } else { 0.0 });
                    assert_eq!(
                        w.get(1, tack, i, j),
                        if target { 1.0 } else { 0.0 },
                        "{i} {j}"
                    );
                    for k in 0..4 {
                        assert_ne!(a.action(k, tack, i, j), Action::Switch);
                    }
                }
            }
        }
    }

    #[test]
    fn solver_matches_public_operations() {
        let grid = GridSpec::with_budget_step(30, 32, 2.0, 3.0, 0.25).unwrap();
        let p = params(0.1, 0.1);
        let opts = AwareOptions {
            angles: 17,
            ..AwareOptions::default()
        };
        let (w, a, _) = solve_aware(&grid, &p, &opts).unwrap();
        let angles = AngleGrid::new(17).unwrap();
        let offset = grid.switch_offset(p.switch_time).unwrap();
        let k = grid.n_s;
        let mut switched = 0;
        for tack in Tack::BOTH {
            let slice = GridSlice2D::new(w.slice(k - 1, tack), &grid).unwrap();
            for i in [3, 9, 17, 30] {
                for j in (0..32).step_by(5) {
                    let steer =
                        maximize_steering(&slice, i, j, tack, &p, &angles, opts.gss_tol).unwrap();
                    let sw = switch_value(&w, k, tack, i, j).unwrap();
                    assert!(k >= offset);
                    if sw > steer.value {
                        switched += 1;
                        assert_eq!(a.action(k, tack, i, j), Action::Switch);
                        assert_eq!(w.get(k, tack, i, j), sw);
                    } else {
                        assert_eq!(a.action(k, tack, i, j), Action::Steer(steer.angle));
                        assert_eq!(w.get(k, tack, i, j), steer.value);
                    }
                }
            }
        }
        let _ = switched;
    }

    #[test]
    fn rejects_misaligned_switch_time() {
        let grid = GridSpec::with_budget_step(10, 8, 2.0, 3.0, 0.3).unwrap();
        let err = solve_aware(&grid, &params(0.0, 0.05), &AwareOptions::default()).unwrap_err();
        assert!(err.to_string().contains("s_k - C = s_l"), "{err}");
    }
}
