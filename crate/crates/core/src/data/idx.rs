//! IDX (MNIST-style) image and label files.
//!
//! Images: big-endian `0x00000803`, count, rows, cols, then `count*rows*cols`
//! unsigned bytes. Labels: big-endian `0x00000801`, count, then `count` bytes.

use std::fs;
use std::path::Path;

use super::{LabeledDataset, Provenance};
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_be_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::format(bytes.len() as u64, "truncated IDX header"))
}

/// Returns `(pixels scaled to [0, 1], rows, cols)` with one image per `rows*cols` run.
pub fn parse_idx_images(bytes: &[u8]) -> Result<(Vec<f64>, usize, usize)> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(
            0,
            format!("bad IDX image magic {magic:#010x}"),
        ));
    }
    let count = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let need = count * rows * cols;
    let body = &bytes[16..];
    if body.len() < need {
        return Err(Error::format(
            bytes.len() as u64,
            format!(
                "IDX images truncated: need {need} pixel bytes, have {}",
                body.len()
            ),
        ));
    }
    let pixels = body[..need].iter().map(|&p| p as f64 / 255.0).collect();
    Ok((pixels, rows, cols))
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<usize>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(
            0,
            format!("bad IDX label magic {magic:#010x}"),
        ));
    }
    let count = read_u32(bytes, 4)? as usize;
    let body = &bytes[8..];
    if body.len() < count {
        return Err(Error::format(
            bytes.len() as u64,
            format!(
                "IDX labels truncated: need {count} bytes, have {}",
                body.len()
            ),
        ));
    }
    Ok(body[..count].iter().map(|&b| b as usize).collect())
}

/// Encodes raw pixel bytes (`count` images of `rows x cols`).
pub fn write_idx_images(pixels: &[u8], rows: usize, cols: usize) -> Vec<u8> {
    let count = if rows * cols == 0 {
        0
    } else {
        pixels.len() / (rows * cols)
    };
    let mut out = Vec::with_capacity(16 + pixels.len());
    for v in [IMAGES_MAGIC, count as u32, rows as u32, cols as u32] {
        out.extend_from_slice(&v.to_be_bytes());
    }
    out.extend_from_slice(pixels);
    out
}

pub fn write_idx_labels(labels: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
    out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
    out.extend_from_slice(labels);
    out
}

/// Loads an image file and its label file into a dataset with `p = rows * cols`.
pub fn load_idx(images: &Path, labels: &Path) -> Result<LabeledDataset> {
    let (pixels, rows, cols) = parse_idx_images(&fs::read(images)?)?;
    let ys = parse_idx_labels(&fs::read(labels)?)?;
    let p = rows * cols;
    let n_images = if p == 0 { 0 } else { pixels.len() / p };
    if n_images != ys.len() {
        return Err(Error::format(
            4,
            format!("{n_images} images but {} labels", ys.len()),
        ));
    }
    let classes = ys.iter().max().map_or(1, |m| m + 1);
    LabeledDataset::new(
        pixels,
        ys,
        p,
        classes,
        Provenance::Idx {
            images: images.to_path_buf(),
            labels: labels.to_path_buf(),
        },
    )
}
