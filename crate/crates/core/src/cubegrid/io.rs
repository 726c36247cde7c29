//! Cell-set files: a run-length encoded bit set plus a JSON sidecar.
//!
//! Binary layout: magic `DCS\0`, version byte, cell count (u64 LE), then
//! LEB128 run lengths alternating absent/present, starting with absent.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cellset::CellSet;
use super::grid::CubicalGrid;
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"DCS\0";
const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub format: String,
    pub version: u32,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub divisions: Vec<usize>,
    pub cells: usize,
    pub sha256: String,
}

fn push_leb128(out: &mut Vec<u8>, mut v: u64) {
    loop {
        let byte = (v & 0x7f) as u8;
        v >>= 7;
        if v == 0 {
            out.push(byte);
            return;
        }
        out.push(byte | 0x80);
    }
}

fn read_leb128(data: &[u8], pos: &mut usize) -> Result<u64> {
    let mut v = 0u64;
    let mut shift = 0;
    loop {
        let byte = *data.get(*pos).ok_or_else(|| Error::Io("truncated run length".into()))?;
        *pos += 1;
        if shift >= 64 {
            return Err(Error::Io("run length overflows".into()));
        }
        v |= u64::from(byte & 0x7f) << shift;
        if byte & 0x80 == 0 {
            return Ok(v);
        }
        shift += 7;
    }
}

pub fn encode(set: &CellSet) -> Vec<u8> {
    let n = set.grid().len();
    let mut out = Vec::with_capacity(16);
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    let mut state = false;
    let mut run = 0u64;
    for i in 0..n {
        if set.contains(i) == state {
            run += 1;
        } else {
            push_leb128(&mut out, run);
            state = !state;
            run = 1;
        }
    }
    push_leb128(&mut out, run);
    out
}

pub fn decode(grid: &Arc<CubicalGrid>, data: &[u8]) -> Result<CellSet> {
    if data.len() < 13 || &data[..4] != MAGIC {
        return Err(Error::Io("not a cell-set file".into()));
    }
    if data[4] != VERSION {
        return Err(Error::Io(format!("unsupported cell-set version {}", data[4])));
    }
    let n = u64::from_le_bytes(data[5..13].try_into().expect("8 bytes")) as usize;
    if n != grid.len() {
        return Err(Error::GridMismatch);
    }
    let mut set = CellSet::empty(grid);
    let mut pos = 13;
    let mut at = 0usize;
    let mut state = false;
    while pos < data.len() {
        let run = read_leb128(data, &mut pos)? as usize;
        if at + run > n {
            return Err(Error::Io("runs exceed the cell count".into()));
        }
        if state {
            for i in at..at + run {
                set.insert(i);
            }
        }
        at += run;
        state = !state;
    }
    if at != n {
        return Err(Error::Io("runs do not cover the grid".into()));
    }
    Ok(set)
}

fn hex(bytes: &[u8]) -> String {
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(s, "{b:02x}");
    }
    s
}

pub fn sidecar(set: &CellSet, encoded: &[u8]) -> Sidecar {
    let g = set.grid();
    Sidecar {
        format: "dissipa-cellset".into(),
        version: u32::from(VERSION),
        lo: g.lo().to_vec(),
        hi: g.hi().to_vec(),
        divisions: g.divisions().to_vec(),
        cells: set.len(),
        sha256: hex(&Sha256::digest(encoded)),
    }
}

/// Writes `<stem>.cells` and `<stem>.json` next to each other.
pub fn save(set: &CellSet, stem: &Path) -> Result<()> {
    let bin = encode(set);
    let meta = sidecar(set, &bin);
    std::fs::write(stem.with_extension("cells"), &bin)?;
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(stem.with_extension("json"), json + "\n")?;
    Ok(())
}

/// Reads a set written by [`save`], checking the grid and checksum.
pub fn load(stem: &Path) -> Result<CellSet> {
    let bin = std::fs::read(stem.with_extension("cells"))?;
    let text = std::fs::read_to_string(stem.with_extension("json"))?;
    let meta: Sidecar = serde_json::from_str(&text).map_err(|e| Error::Io(e.to_string()))?;
    if meta.sha256 != hex(&Sha256::digest(&bin)) {
        return Err(Error::Io("checksum mismatch".into()));
    }
    let grid = Arc::new(CubicalGrid::new(meta.lo, meta.hi, meta.divisions)?);
    let set = decode(&grid, &bin)?;
    if set.len() != meta.cells {
        return Err(Error::Io("cell count mismatch".into()));
    }
    Ok(set)
}

/// Cell centers as CSV with header `x1,...,xn`.
pub fn to_csv(set: &CellSet) -> String {
    let n = set.grid().dim();
    let mut s = (1..=n).map(|i| format!("x{i}")).collect::<Vec<_>>().join(",");
    s.push('\n');
    for c in set.centers() {
        let row: Vec<String> = c.iter().map(|v| format!("{v}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}
