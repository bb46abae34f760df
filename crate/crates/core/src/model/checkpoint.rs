//! Flat binary checkpoints.
//!
//! Layout: `b"LETS"`, version as little-endian `u32`, parameter count as
//! little-endian `u64`, then that many little-endian `f64`s. The parameter
//! layout goes to a text sidecar at `<path>.layout`.

use std::fs;
use std::path::{Path, PathBuf};

use super::ParameterLayout;
use crate::error::{Error, Result};
use crate::param::ParamVector;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"LETS";
pub const CHECKPOINT_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".layout");
    PathBuf::from(s)
}

pub fn encode_checkpoint(theta: &ParamVector) -> Vec<u8> {
    let mut bytes = Vec::with_capacity(HEADER_LEN + 8 * theta.len());
    bytes.extend_from_slice(CHECKPOINT_MAGIC);
    bytes.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    bytes.extend_from_slice(&(theta.len() as u64).to_le_bytes());
    for v in theta.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    bytes
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ParamVector> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::format(
            bytes.len() as u64,
            "truncated checkpoint header",
        ));
    }
    if &bytes[0..4] != CHECKPOINT_MAGIC {
        return Err(Error::format(0, "bad checkpoint magic"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != CHECKPOINT_VERSION {
        return Err(Error::format(
            4,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let d = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let body = &bytes[HEADER_LEN..];
    if body.len() != d.saturating_mul(8) {
        return Err(Error::format(
            (HEADER_LEN + body.len().min(d.saturating_mul(8))) as u64,
            format!(
                "expected {d} parameters, found {} bytes of payload",
                body.len()
            ),
        ));
    }
    let values = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok(ParamVector::from_vec_unchecked(values))
}

pub fn write_checkpoint(path: &Path, theta: &ParamVector, layout: &ParameterLayout) -> Result<()> {
    if layout.dim() != theta.len() {
        return Err(Error::Dimension {
            expected: layout.dim(),
            found: theta.len(),
        });
    }
    fs::write(path, encode_checkpoint(theta))?;
    fs::write(sidecar(path), layout.to_string())?;
    Ok(())
}

/// Reads a checkpoint and, when present, its layout sidecar.
pub fn read_checkpoint(path: &Path) -> Result<(ParamVector, Option<ParameterLayout>)> {
    let theta = decode_checkpoint(&fs::read(path)?)?;
    let side = sidecar(path);
    let layout = if side.exists() {
        let layout: ParameterLayout = fs::read_to_string(side)?.parse()?;
        if layout.dim() != theta.len() {
            return Err(Error::Dimension {
                expected: layout.dim(),
                found: theta.len(),
            });
        }
        Some(layout)
    } else {
        None
    };
    Ok((theta, layout))
}
