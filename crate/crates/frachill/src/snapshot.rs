//! Binary field snapshots.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   4 bytes  "FCHT"
//! version u32      1
//! dim     u32      1 or 2
//! n_axis  u32 × dim
//! time    f64
//! mu      f64 × N  (row-major)
//! phi     f64 × N
//! s       f64 × N
//! ```
//!
//! The reader rejects payloads whose length disagrees with the header.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
#[cfg(test)]
use crate::grid::Field;
use crate::stepper::SimState;

const MAGIC: &[u8; 4] = b"FCHT";
const VERSION: u32 = 1;

/// A snapshot as read back from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub dimension: u32,
    pub points: Vec<u32>,
    pub time: f64,
    pub mu: Vec<f64>,
    pub phi: Vec<f64>,
    pub s: Vec<f64>,
}

/// Write the three fields of a state at a given time.
pub fn write_snapshot(path: &Path, grid: &GridSpec, state: &SimState, time: f64) -> Result<()> {
    let mut out = Vec::with_capacity(4 + 4 + 4 + 4 * grid.dimension() + 8 + 24 * grid.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dimension() as u32).to_le_bytes());
    for a in 0..grid.dimension() {
        out.extend_from_slice(&(grid.points(a) as u32).to_le_bytes());
    }
    out.extend_from_slice(&time.to_le_bytes());
    for field in [&state.mu, &state.phi, &state.s] {
        for &v in field.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(&out)?;
    Ok(())
}

/// Read a snapshot back, validating the header against the payload length.
pub fn read_snapshot(path: &Path) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let mut cursor = 0usize;
    let take = |cursor: &mut usize, len: usize| -> Result<&[u8]> {
        if *cursor + len > bytes.len() {
            return Err(Error::config(format!(
                "snapshot '{}' truncated at byte {cursor}",
                path.display()
            )));
        }
        let slice = &bytes[*cursor..*cursor + len];
        *cursor += len;
        Ok(slice)
    };
    let u32_at = |cursor: &mut usize| -> Result<u32> {
        Ok(u32::from_le_bytes(take(cursor, 4)?.try_into().unwrap()))
    };
    let f64_at = |cursor: &mut usize| -> Result<f64> {
        Ok(f64::from_le_bytes(take(cursor, 8)?.try_into().unwrap()))
    };

    if take(&mut cursor, 4)? != MAGIC {
        return Err(Error::config(format!(
            "'{}' is not a field snapshot (bad magic)",
            path.display()
        )));
    }
    let version = u32_at(&mut cursor)?;
    if version != VERSION {
        return Err(Error::config(format!(
            "unsupported snapshot version {version}"
        )));
    }
    let dimension = u32_at(&mut cursor)?;
    if !(1..=2).contains(&dimension) {
        return Err(Error::config(format!("bad snapshot dimension {dimension}")));
    }
    let mut points = Vec::with_capacity(dimension as usize);
    for _ in 0..dimension {
        points.push(u32_at(&mut cursor)?);
    }
    let time = f64_at(&mut cursor)?;
    let n: usize = points.iter().map(|&p| p as usize).product();
    let expected = cursor + 3 * 8 * n;
    if bytes.len() != expected {
        return Err(Error::config(format!(
            "snapshot payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let read_field = |cursor: &mut usize| -> Result<Vec<f64>> {
        (0..n).map(|_| f64_at(cursor)).collect()
    };
    let mu = read_field(&mut cursor)?;
    let phi = read_field(&mut cursor)?;
    let s = read_field(&mut cursor)?;
    Ok(Snapshot {
        dimension,
        points,
        time,
        mu,
        phi,
        s,
    })
}
