use std::f64::consts::{PI, TAU};

use super::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::rng::{Stream, DATA_STREAM};

fn check_sizes(n: usize, classes: usize) -> Result<()> {
    if classes < 2 || n < classes {
        return Err(Error::config(format!(
            "synthetic data needs n >= classes >= 2 (n={n}, classes={classes})"
        )));
    }
    Ok(())
}

/// Two-dimensional Gaussian blobs; see [`make_blobs_nd`].
pub fn make_blobs(n: usize, classes: usize, spread: f64, seed: u64) -> Result<LabeledDataset> {
    make_blobs_nd(n, classes, 2, spread, seed)
}

/// Isotropic unit-variance Gaussian blobs.
///
/// Class `k` is centred at `spread * (cos(2 pi k / C), sin(2 pi k / C), 0, ...)`,
/// so adjacent centroids sit `2 spread sin(pi / C)` apart. Example `i` has
/// label `i mod C`, which balances class counts to within one.
pub fn make_blobs_nd(
    n: usize,
    classes: usize,
    features: usize,
    spread: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    check_sizes(n, classes)?;
    if features < 2 {
        return Err(Error::config("blobs need at least two features"));
    }
    if !(spread >= 0.0) {
        return Err(Error::config(format!(
            "blob spread must be >= 0, got {spread}"
        )));
    }
    let mut rng = Stream::new(seed, DATA_STREAM);
    let mut x = Vec::with_capacity(n * features);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let k = i % classes;
        let angle = TAU * k as f64 / classes as f64;
        for j in 0..features {
            let center = match j {
                0 => spread * angle.cos(),
                1 => spread * angle.sin(),
                _ => 0.0,
            };
            x.push(center + rng.normal());
        }
        y.push(k);
    }
    LabeledDataset::new(x, y, features, classes, Provenance::Blobs { seed })
}

/// Interleaving half circles. Class 0 lies on `(cos t, sin t)` and class 1 on
/// `(1 - cos t, 1/2 - sin t)` for `t` evenly spaced over `[0, pi]`, then each
/// coordinate gets `noise * N(0, 1)`.
pub fn make_two_moons(n: usize, noise: f64, seed: u64) -> Result<LabeledDataset> {
    check_sizes(n, 2)?;
    if !(noise >= 0.0) {
        return Err(Error::config(format!(
            "two-moons noise must be >= 0, got {noise}"
        )));
    }
    let n0 = n.div_ceil(2);
    let n1 = n - n0;
    let mut rng = Stream::new(seed, DATA_STREAM);
    let mut x = Vec::with_capacity(2 * n);
    let mut y = Vec::with_capacity(n);
    let arc = |i: usize, count: usize| {
        if count <= 1 {
            0.0
        } else {
            PI * i as f64 / (count - 1) as f64
        }
    };
    for i in 0..n0 {
        let t = arc(i, n0);
        x.push(t.cos());
        x.push(t.sin());
        y.push(0);
    }
    for i in 0..n1 {
        let t = arc(i, n1);
        x.push(1.0 - t.cos());
        x.push(0.5 - t.sin());
        y.push(1);
    }
    if noise > 0.0 {
        for v in x.iter_mut() {
            *v += noise * rng.normal();
        }
    }
    LabeledDataset::new(x, y, 2, 2, Provenance::TwoMoons { seed })
}
