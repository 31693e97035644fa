//! CSV and JSON writers for plot-ready outputs.
//!
//! Numbers are written with Rust's shortest round-trip formatting, so the
//! files read back to the same `f64` values.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::simulate::PathPoint;
use crate::survival::EcdfCurve;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::file(path, e))
}

fn finish(path: &Path, mut out: BufWriter<File>) -> Result<()> {
    out.flush().map_err(|e| Error::file(path, e))
}

/// `r,theta,q,value,policy` for both tacks of one slice. Each argument holds
/// the two tack planes back to back; switches are encoded as `-1`.
pub fn write_slice_csv(path: &Path, grid: &GridSpec, values: &[f64], policy: &[f64]) -> Result<()> {
    let want = 2 * grid.slice_len();
    if values.len() != want || policy.len() != want {
        return Err(Error::Data(format!(
            "slice has {} values and {} actions, grid needs {want}",
            values.len(),
            policy.len()
        )));
    }
    let mut out = create(path)?;
    let io = |e| Error::file(path, e);
    writeln!(out, "r,theta,q,value,policy").map_err(io)?;
    for q in 0..2 {
        for i in 0..=grid.n_r {
            for j in 0..grid.n_theta {
                let at = q * grid.slice_len() + grid.index(i, j);
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    grid.r(i),
                    grid.theta(j),
                    q + 1,
                    values[at],
                    policy[at]
                )
                .map_err(io)?;
            }
        }
    }
    finish(path, out)
}

/// `t,cdf` step points.
pub fn write_ecdf_csv(path: &Path, ecdf: &EcdfCurve) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::file(path, e);
    writeln!(out, "t,cdf").map_err(io)?;
    for &(t, p) in &ecdf.points {
        writeln!(out, "{t},{p}").map_err(io)?;
    }
    finish(path, out)
}

/// `t,r,theta,q,s,phi,x,y` per saved state.
pub fn write_path_csv(path: &Path, points: &[PathPoint]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::file(path, e);
    writeln!(out, "t,r,theta,q,s,phi,x,y").map_err(io)?;
    for p in points {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            p.t, p.r, p.theta, p.q, p.s, p.phi, p.x, p.y
        )
        .map_err(io)?;
    }
    finish(path, out)
}

/// One row of a policy comparison at budget `s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub s: f64,
    /// `w` at the start gridpoint.
    pub w: f64,
    pub ecdf_neutral: f64,
    pub ecdf_aware: f64,
}

/// `s,w,ecdf_neutral,ecdf_aware`.
pub fn write_compare_csv(path: &Path, rows: &[CompareRow]) -> Result<()> {
    let mut out = create(path)?;
    let io = |e| Error::file(path, e);
    writeln!(out, "s,w,ecdf_neutral,ecdf_aware").map_err(io)?;
    for r in rows {
        writeln!(out, "{},{},{},{}", r.s, r.w, r.ecdf_neutral, r.ecdf_aware).map_err(io)?;
    }
    finish(path, out)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out).map_err(|e| Error::file(path, e))?;
    finish(path, out)
}
