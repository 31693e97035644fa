//! Streams a risk-aware solve to disk, then maps the files back and reads
//! values without loading the payload.
//!
//! `cargo run --release --example grid_files`

use sailrisk::aware::FileSink;
use sailrisk::gridfile::GridFile;
use sailrisk::{
    solve_aware_into, AwareOptions, GridSpec, ModelParams, PolarCurve, PolicyField, Tack,
    ValueField, WindParams,
};

fn main() -> sailrisk::Result<()> {
    let params = ModelParams {
        wind: WindParams::new(0.0, 0.05)?,
        polar: PolarCurve::racing_default(0.05)?,
        switch_time: 2.0,
        target_radius: 0.1,
        outer_radius: 2.0,
    };
    let grid = GridSpec::with_budget_step(30, 36, 2.0, 30.0, 0.25)?;
    let dir = tempfile::tempdir().expect("temporary directory");
    let (value_path, policy_path) = (
        dir.path().join("value.grid"),
        dir.path().join("policy.grid"),
    );

    let mut sink = FileSink::create(&value_path, &policy_path, &grid, &params, "example")?;
    solve_aware_into(&grid, &params, &AwareOptions::default(), &mut sink)?;
    sink.finish()?;

    let header = GridFile::read_header(&value_path)?;
    println!(
        "{:?} {:?}, hash {}",
        header.kind, header.dims, header.config_hash
    );
    let value = ValueField::open(&value_path)?;
    let policy = PolicyField::open(&policy_path)?;
    let k = grid.n_s;
    let (i, j) = (grid.nearest_r(1.0), 0);
    println!(
        "w(s = {}, q = 1, r = {}, theta = 0) = {:.4}, action {:?}",
        grid.s(k),
        grid.r(i),
        value.get(k, Tack::Starboard, i, j),
        policy.action(k, Tack::Starboard, i, j)
    );
    Ok(())
}
