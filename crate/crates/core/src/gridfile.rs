//! Self-describing binary grid files.
//!
//! Layout:
//!
//! ```text
//! offset 0   8 bytes   magic "SAILGRID"
//! offset 8   u64 LE    header length H (bytes)
//! offset 16  H bytes   UTF-8 JSON header, space padded so 16 + H is a multiple of 8
//! 16 + H     ...       payload: little-endian f64, row-major in `dims` order
//! ```
//!
//! Four-dimensional fields use `dims = [n_s + 1, 2, n_r + 1, n_theta]`
//! (budget slice, tack, radius, angle); stationary fields drop the first axis.
//! Policy payloads store `Steer(u)` as `u` and `Switch` as `-1.0`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::ops::Deref;
use std::path::{Path, PathBuf};

use memmap2::Mmap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::model::ModelParams;

pub const MAGIC: &[u8; 8] = b"SAILGRID";
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    AwareValue,
    AwarePolicy,
    NeutralValue,
    NeutralPolicy,
}

impl FieldKind {
    pub fn is_policy(self) -> bool {
        matches!(self, FieldKind::AwarePolicy | FieldKind::NeutralPolicy)
    }

    pub fn dims(self, grid: &GridSpec) -> Vec<usize> {
        let plane = [2, grid.n_r + 1, grid.n_theta];
        match self {
            FieldKind::AwareValue | FieldKind::AwarePolicy => {
                std::iter::once(grid.n_s + 1).chain(plane).collect()
            }
            FieldKind::NeutralValue | FieldKind::NeutralPolicy => plane.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeader {
    pub schema_version: u32,
    pub kind: FieldKind,
    pub dims: Vec<usize>,
    pub grid: GridSpec,
    pub model: ModelParams,
    /// Hash of the configuration that produced the field.
    pub config_hash: String,
    /// Seconds since the Unix epoch at creation.
    pub created_unix: u64,
    #[serde(default)]
    pub metadata: serde_json::Value,
}

impl GridHeader {
    pub fn new(kind: FieldKind, grid: &GridSpec, model: &ModelParams, config_hash: &str) -> Self {
        let created_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        GridHeader {
            schema_version: SCHEMA_VERSION,
            kind,
            dims: kind.dims(grid),
            grid: *grid,
            model: model.clone(),
            config_hash: config_hash.to_string(),
            created_unix,
            metadata: serde_json::Value::Null,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.dims.iter().product()
    }

    fn encode(&self) -> Result<Vec<u8>> {
        let mut json = serde_json::to_vec(self)?;
        while (16 + json.len()) % 8 != 0 {
            json.push(b' ');
        }
        let mut out = Vec::with_capacity(16 + json.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        Ok(out)
    }
}

/// Streaming writer; payload values must arrive in storage order.
pub struct GridFileWriter {
    path: PathBuf,
    out: BufWriter<File>,
    expected: usize,
    written: usize,
}

impl GridFileWriter {
    pub fn create(path: &Path, header: &GridHeader) -> Result<Self> {
        if header.dims != header.kind.dims(&header.grid) {
            return Err(Error::Data(format!(
                "header dims {:?} do not match the grid for {:?}",
                header.dims, header.kind
            )));
        }
        let file = File::create(path).map_err(|e| Error::file(path, e))?;
        let mut out = BufWriter::with_capacity(1 << 20, file);
        out.write_all(&header.encode()?)
            .map_err(|e| Error::file(path, e))?;
        Ok(GridFileWriter {
            path: path.to_path_buf(),
            out,
            expected: header.payload_len(),
            written: 0,
        })
    }

    pub fn write(&mut self, values: &[f64]) -> Result<()> {
        if self.written + values.len() > self.expected {
            return Err(Error::Data(format!(
                "{}: payload overflow ({} > {})",
                self.path.display(),
                self.written + values.len(),
                self.expected
            )));
        }
        let mut buf = Vec::with_capacity(values.len() * 8);
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        self.out
            .write_all(&buf)
            .map_err(|e| Error::file(&self.path, e))?;
        self.written += values.len();
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        if self.written != self.expected {
            return Err(Error::Data(format!(
                "{}: wrote {} of {} payload values",
                self.path.display(),
                self.written,
                self.expected
            )));
        }
        self.out.flush().map_err(|e| Error::file(&self.path, e))?;
        Ok(())
    }
}

/// Writes a complete file in one call.
pub fn write_grid_file(path: &Path, header: &GridHeader, payload: &[f64]) -> Result<()> {
    let mut w = GridFileWriter::create(path, header)?;
    w.write(payload)?;
    w.finish()
}

/// Field payload, owned or memory-mapped from a grid file.
pub enum FieldData {
    Owned(Vec<f64>),
    Mapped {
        map: Mmap,
        offset: usize,
        len: usize,
    },
}

impl Deref for FieldData {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        match self {
            FieldData::Owned(v) => v,
            FieldData::Mapped { map, offset, len } => {
                let bytes = &map[*offset..*offset + *len * 8];
                // SAFETY: `open` only builds this variant on little-endian
                // targets after checking 8-byte alignment and length.
                unsafe { std::slice::from_raw_parts(bytes.as_ptr().cast::<f64>(), *len) }
            }
        }
    }
}

impl std::fmt::Debug for FieldData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldData::Owned(v) => write!(f, "Owned({} values)", v.len()),
            FieldData::Mapped { len, .. } => write!(f, "Mapped({len} values)"),
        }
    }
}

/// A grid file opened for reading.
#[derive(Debug)]
pub struct GridFile {
    pub header: GridHeader,
    pub data: FieldData,
}

fn parse_prefix(bytes: &[u8], path: &Path) -> Result<(GridHeader, usize)> {
    if bytes.len() < 16 || &bytes[..8] != MAGIC {
        return Err(Error::Data(format!("{}: not a grid file", path.display())));
    }
    let hlen = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    if bytes.len() < 16 + hlen {
        return Err(Error::Data(format!("{}: truncated header", path.display())));
    }
    let header: GridHeader = serde_json::from_slice(&bytes[16..16 + hlen])?;
    if header.schema_version != SCHEMA_VERSION {
        return Err(Error::Data(format!(
            "{}: unsupported schema version {}",
            path.display(),
            header.schema_version
        )));
    }
    if header.dims != header.kind.dims(&header.grid) {
        return Err(Error::Data(format!(
            "{}: dims {:?} inconsistent with the grid",
            path.display(),
            header.dims
        )));
    }
    Ok((header, 16 + hlen))
}

impl GridFile {
    /// Memory-maps the payload (falls back to a copy on big-endian hosts).
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::file(path, e))?;
        // SAFETY: grid files are treated as immutable while open.
        let map = unsafe { Mmap::map(&file) }.map_err(|e| Error::file(path, e))?;
        let (header, offset) = parse_prefix(&map, path)?;
        let len = header.payload_len();
        if map.len() != offset + len * 8 {
            return Err(Error::Data(format!(
                "{}: payload is {} bytes, header implies {}",
                path.display(),
                map.len() - offset,
                len * 8
            )));
        }
        let aligned = (map.as_ptr() as usize + offset).is_multiple_of(std::mem::align_of::<f64>());
        let data = if cfg!(target_endian = "little") && aligned {
            FieldData::Mapped { map, offset, len }
        } else {
            FieldData::Owned(decode(&map[offset..]))
        };
        Ok(GridFile { header, data })
    }

    /// Reads the whole file into memory.
    pub fn read(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::file(path, e))?;
        let (header, offset) = parse_prefix(&bytes, path)?;
        if bytes.len() != offset + header.payload_len() * 8 {
            return Err(Error::Data(format!(
                "{}: payload size mismatch",
                path.display()
            )));
        }
        let data = FieldData::Owned(decode(&bytes[offset..]));
        Ok(GridFile { header, data })
    }

    /// Header only, without touching the payload.
    pub fn read_header(path: &Path) -> Result<GridHeader> {
        let mut file = File::open(path).map_err(|e| Error::file(path, e))?;
        let mut prefix = [0u8; 16];
        file.read_exact(&mut prefix)
            .map_err(|e| Error::file(path, e))?;
        if &prefix[..8] != MAGIC {
            return Err(Error::Data(format!("{}: not a grid file", path.display())));
        }
        let hlen = u64::from_le_bytes(prefix[8..].try_into().unwrap()) as usize;
        let mut bytes = prefix.to_vec();
        bytes.resize(16 + hlen, 0);
        file.read_exact(&mut bytes[16..])
            .map_err(|e| Error::file(path, e))?;
        Ok(parse_prefix(&bytes, path)?.0)
    }
}

fn decode(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{PolarCurve, WindParams};

    fn setup() -> (GridSpec, ModelParams) {
        let grid = GridSpec::with_budget_step(3, 4, 2.0, 4.0, 2.0).unwrap();
        let model = ModelParams {
            wind: WindParams::new(0.0, 0.05).unwrap(),
            polar: PolarCurve::racing_default(0.05).unwrap(),
            switch_time: 2.0,
            target_radius: 0.1,
            outer_radius: 2.0,
        };
        (grid, model)
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, model) = setup();
        let header = GridHeader::new(FieldKind::AwarePolicy, &grid, &model, "abc");
        let payload: Vec<f64> = (0..header.payload_len())
            .map(|n| {
                if n % 7 == 0 {
                    -1.0
                } else {
                    (n as f64).sqrt() * 1e-3
                }
            })
            .collect();
        let path = dir.path().join("p.grid");
        write_grid_file(&path, &header, &payload).unwrap();
        for file in [
            GridFile::open(&path).unwrap(),
            GridFile::read(&path).unwrap(),
        ] {
            assert_eq!(file.header, header);
            let back: &[f64] = &file.data;
            assert_eq!(back.len(), payload.len());
            assert!(back
                .iter()
                .zip(&payload)
                .all(|(a, b)| a.to_bits() == b.to_bits()));
        }
        assert_eq!(GridFile::read_header(&path).unwrap(), header);
    }

    #[test]
    fn rejects_truncated_payload() {
        let dir = tempfile::tempdir().unwrap();
        let (grid, model) = setup();
        let header = GridHeader::new(FieldKind::NeutralValue, &grid, &model, "x");
        let path = dir.path().join("v.grid");
        let mut w = GridFileWriter::create(&path, &header).unwrap();
        w.write(&[1.0; 5]).unwrap();
        assert!(w.finish().is_err());
        assert!(GridFile::open(&path).is_err());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk");
        std::fs::write(&path, b"definitely not a grid").unwrap();
        assert!(matches!(GridFile::open(&path), Err(Error::Data(_))));
    }
}
