//! Datasets, label corruption, splits and seeded batch sampling.

mod idx;
mod noise;
mod sampler;
mod split;
mod synth;

use std::fmt;
use std::io::Write;
use std::path::PathBuf;

pub use idx::{load_idx, parse_idx_images, parse_idx_labels, write_idx_images, write_idx_labels};
pub use noise::corrupt_labels;
pub use sampler::{BatchSampler, SamplingMode};
pub use split::{split, split_indices, ValidationMode};
pub use synth::{make_blobs, make_blobs_nd, make_two_moons};

use crate::error::{Error, Result};

/// A mini-batch: row-major features plus integer labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
}

impl Batch {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize) -> Result<Self> {
        if features.len() != labels.len() * dim {
            return Err(Error::Dimension {
                expected: labels.len() * dim,
                found: features.len(),
            });
        }
        Ok(Batch {
            features,
            labels,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// `(features, label)` pairs in batch order.
    pub fn rows(&self) -> impl Iterator<Item = (&[f64], &usize)> {
        // chunks_exact(0) panics, so zero-width rows are produced by hand
        let dim = self.dim;
        self.labels
            .iter()
            .enumerate()
            .map(move |(i, y)| (&self.features[i * dim..(i + 1) * dim], y))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Blobs { seed: u64 },
    TwoMoons { seed: u64 },
    Idx { images: PathBuf, labels: PathBuf },
    Derived(String),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Blobs { seed } => write!(f, "blobs(seed={seed})"),
            Provenance::TwoMoons { seed } => write!(f, "two-moons(seed={seed})"),
            Provenance::Idx { images, labels } => {
                write!(f, "idx({}, {})", images.display(), labels.display())
            }
            Provenance::Derived(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
    provenance: Provenance,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        dim: usize,
        classes: usize,
        provenance: Provenance,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::config("dataset must contain at least one example"));
        }
        if features.len() != labels.len() * dim {
            return Err(Error::Dimension {
                expected: labels.len() * dim,
                found: features.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= classes) {
            return Err(Error::config(format!(
                "label {bad} >= class count {classes}"
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dataset features".into()));
        }
        Ok(LabeledDataset {
            features,
            labels,
            dim,
            classes,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub(crate) fn with_labels(&self, labels: Vec<usize>, provenance: Provenance) -> Self {
        LabeledDataset {
            features: self.features.clone(),
            labels,
            dim: self.dim,
            classes: self.classes,
            provenance,
        }
    }

    /// Gathers the given rows into a batch, in the given order.
    pub fn batch(&self, indices: &[usize]) -> Batch {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Batch {
            features,
            labels,
            dim: self.dim,
        }
    }

    /// The whole dataset as one batch.
    pub fn full_batch(&self) -> Batch {
        Batch {
            features: self.features.clone(),
            labels: self.labels.clone(),
            dim: self.dim,
        }
    }

    pub fn subset(&self, indices: &[usize], tag: &str) -> Result<LabeledDataset> {
        let b = self.batch(indices);
        LabeledDataset::new(
            b.features,
            b.labels,
            self.dim,
            self.classes,
            Provenance::Derived(format!("{}:{tag}", self.provenance)),
        )
    }

    /// CSV with header `f0,...,f{p-1},label`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = (0..self.dim)
            .map(|j| format!("f{j}"))
            .chain(std::iter::once("label".to_string()))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for i in 0..self.len() {
            let mut fields: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            fields.push(self.labels[i].to_string());
            writeln!(out, "{}", fields.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batch_shape_checks() {
        assert!(Batch::new(vec![1.0, 2.0, 3.0], vec![0, 1], 2).is_err());
        let b = Batch::new(vec![1.0, 2.0, 3.0, 4.0], vec![0, 1], 2).unwrap();
        let rows: Vec<_> = b.rows().collect();
        assert_eq!(rows[1], (&[3.0, 4.0][..], &1));
    }

    #[test]
    fn dataset_validation() {
        assert!(
            LabeledDataset::new(vec![], vec![], 2, 2, Provenance::Derived("x".into())).is_err()
        );
        assert!(
            LabeledDataset::new(vec![1.0], vec![3], 1, 2, Provenance::Derived("x".into())).is_err()
        );
    }

    #[test]
    fn csv_export_header() {
        let ds = LabeledDataset::new(
            vec![0.5, -1.0, 2.0, 0.0],
            vec![1, 0],
            2,
            2,
            Provenance::Derived("t".into()),
        )
        .unwrap();
        let mut buf = Vec::new();
        ds.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "f0,f1,label\n0.5,-1,1\n2,0,0\n");
    }
}
