use super::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::{Stream, Substream};

/// Symmetric label noise.
///
/// Exactly `round(rate * n)` examples, chosen uniformly without replacement,
/// receive a label drawn uniformly from the `C - 1` classes other than their
/// current one. Features are never touched.
pub fn corrupt_labels(ds: &LabeledDataset, rate: f64, seed: u64) -> Result<LabeledDataset> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(Error::config(format!(
            "noise rate must lie in [0, 1], got {rate}"
        )));
    }
    let n = ds.len();
    let count = (rate * n as f64).round() as usize;
    if count > 0 && ds.classes() < 2 {
        return Err(Error::config("label flipping needs at least two classes"));
    }
    let mut rng = Stream::substream(seed, Substream::Noise);
    let mut labels = ds.labels().to_vec();
    for i in rng.choose_distinct(n, count) {
        let draw = rng.below(ds.classes() as u64 - 1) as usize;
        labels[i] = if draw >= labels[i] { draw + 1 } else { draw };
    }
    Ok(ds.with_labels(
        labels,
        Provenance::Derived(format!("{}:noise({rate},seed={seed})", ds.provenance())),
    ))
}
