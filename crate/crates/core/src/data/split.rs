use std::str::FromStr;

use super::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::{Stream, SPLIT_STREAM};

/// Where validation batches come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationMode {
    /// A disjoint slice of the data is held out for validation.
    HeldOut,
    /// Validation batches are drawn from the training set with their own
    /// random stream, independently of the training batch of the same step.
    SampleFromTrain,
}

impl FromStr for ValidationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "held-out" => Ok(ValidationMode::HeldOut),
            "sample-from-train" => Ok(ValidationMode::SampleFromTrain),
            other => Err(Error::config(format!("unknown validation mode {other:?}"))),
        }
    }
}

/// Shuffled partition of `0..n` into `(kept, held)` with
/// `held.len() == round(fraction * n)`.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(0.0..1.0).contains(&fraction) {
        return Err(Error::config(format!(
            "split fraction must lie in [0, 1), got {fraction}"
        )));
    }
    let held = (fraction * n as f64).round() as usize;
    let mut idx: Vec<usize> = (0..n).collect();
    Stream::new(seed, SPLIT_STREAM).shuffle(&mut idx);
    let kept = idx.split_off(held);
    Ok((kept, idx))
}

/// Held-out split into `(train, val)`. With `fraction == 0` the validation set
/// is the training set itself, the shape used by sample-from-train runs.
pub fn split(
    ds: &LabeledDataset,
    fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if fraction == 0.0 {
        return Ok((ds.clone(), ds.clone()));
    }
    let (train, val) = split_indices(ds.len(), fraction, seed)?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::config(format!(
            "split of {} examples at fraction {fraction} leaves an empty side",
            ds.len()
        )));
    }
    Ok((ds.subset(&train, "train")?, ds.subset(&val, "val")?))
}
