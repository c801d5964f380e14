//! On-disk formats: binary mass files with a JSON sidecar, and CSV tables.
//!
//! Mass file layout (little-endian): magic `MCAS`, version `u32`, `b u32`,
//! `d u32`, `n u32`, seed `u64`, then `b^(d n)` `f64` masses in address order.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cascade::CascadeRealization;
use crate::error::{Error, Result};
use crate::fourier::DecaySampleSet;
use crate::weights::WeightModel;

pub const MAGIC: &[u8; 4] = b"MCAS";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 4 + 8;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn encode_masses(r: &CascadeRealization) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * r.masses().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&r.base().to_le_bytes());
    out.extend_from_slice(&r.dim().to_le_bytes());
    out.extend_from_slice(&r.depth().to_le_bytes());
    out.extend_from_slice(&r.seed().to_le_bytes());
    for m in r.masses() {
        out.extend_from_slice(&m.to_le_bytes());
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MassHeader {
    pub version: u32,
    pub b: u32,
    pub d: u32,
    pub n: u32,
    pub seed: u64,
}

pub fn decode_masses(bytes: &[u8]) -> Result<(MassHeader, Vec<f64>)> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing MCAS header".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let header = MassHeader {
        version: u32_at(4),
        b: u32_at(8),
        d: u32_at(12),
        n: u32_at(16),
        seed: u64::from_le_bytes(bytes[20..28].try_into().unwrap()),
    };
    if header.version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported version {}", header.version)));
    }
    let cells = u64::from(header.b)
        .checked_pow(header.d * header.n)
        .ok_or_else(|| Error::Format("cell count overflows".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() as u64 != 8 * cells {
        return Err(Error::Format(format!("expected {cells} masses, found {} bytes", payload.len())));
    }
    let masses = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((header, masses))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassSidecar {
    pub format_version: u32,
    pub model: WeightModel,
    pub depth: u32,
    pub seed: u64,
    pub cells: usize,
    pub total_mass: f64,
    pub sha256: String,
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `path` and a sidecar `path.with_extension("json")`; returns the
/// sidecar.
pub fn save_realization(path: &Path, r: &CascadeRealization) -> Result<MassSidecar> {
    let bytes = encode_masses(r);
    let sidecar = MassSidecar {
        format_version: FORMAT_VERSION,
        model: r.model().clone(),
        depth: r.depth(),
        seed: r.seed(),
        cells: r.masses().len(),
        total_mass: r.total_mass(),
        sha256: sha256_hex(&bytes),
    };
    atomic_write(path, &bytes)?;
    atomic_write(&sidecar_path(path), serde_json::to_string_pretty(&sidecar)?.as_bytes())?;
    Ok(sidecar)
}

/// Reads a mass file and its sidecar, checking the checksum and that the
/// header agrees with the recorded model.
pub fn load_realization(path: &Path) -> Result<CascadeRealization> {
    let bytes = fs::read(path)?;
    let sidecar: MassSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    if sha256_hex(&bytes) != sidecar.sha256 {
        return Err(Error::Format("checksum mismatch".into()));
    }
    let (h, masses) = decode_masses(&bytes)?;
    let m = &sidecar.model;
    if (h.b, h.d, h.n, h.seed) != (m.base(), m.dim(), sidecar.depth, sidecar.seed) {
        return Err(Error::Format("header disagrees with sidecar".into()));
    }
    CascadeRealization::from_masses(m, h.n, h.seed, masses)
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_table(header: &[&str], rows: &[Vec<f64>]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Columns `r, sup, sigma_<p>..., n_theta`.
pub fn profile_csv(set: &DecaySampleSet) -> String {
    let mut out = String::from("r,sup");
    for p in &set.p_values {
        if p.is_infinite() {
            out.push_str(",sigma_inf");
        } else {
            let _ = write!(out, ",sigma_{p}");
        }
    }
    out.push_str(",n_theta\n");
    for row in &set.rows {
        out.push_str(&format_float(row.radius));
        out.push(',');
        out.push_str(&format_float(row.sup));
        for s in &row.sigma {
            out.push(',');
            out.push_str(&format_float(*s));
        }
        let _ = writeln!(out, ",{}", row.n_directions);
    }
    out
}

/// Parses a table written by [`csv_table`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty table".into()))?
        .split(',')
        .map(str::to_string)
        .collect::<Vec<_>>();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|c| c.parse::<f64>().map_err(|e| Error::Format(format!("bad number '{c}': {e}"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((header, rows))
}
