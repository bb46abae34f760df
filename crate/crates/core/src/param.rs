//! Dense arithmetic over flat parameter vectors.
//!
//! Model parameters, gradients, perturbations and diagonal matrices (the
//! Hessian approximation and the ASAM operator) are all stored as a
//! [`ParamVector`]. Every public operation checks lengths and rejects
//! non-finite results so that a diverging radius fails at the first bad step.

use std::ops::Index;

use crate::error::{Error, Result};

/// A fixed-length vector of `f64` parameters.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamVector(Vec<f64>);

/// Entrywise operations on one or two vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Elementwise {
    Square,
    Abs,
    Multiply,
}

fn check_len(a: &ParamVector, b: &ParamVector) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            expected: a.len(),
            found: b.len(),
        });
    }
    Ok(())
}

fn check_finite_scalar(x: f64, op: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite(op.to_string()))
    }
}

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        ParamVector(values).finite("ParamVector::new")
    }

    pub fn zeros(len: usize) -> Self {
        ParamVector(vec![0.0; len])
    }

    pub fn filled(len: usize, value: f64) -> Self {
        ParamVector(vec![value; len])
    }

    /// Wraps values without the finiteness check. Callers in this crate use it
    /// for freshly computed gradients that are checked by the next operation.
    pub(crate) fn from_vec_unchecked(values: Vec<f64>) -> Self {
        ParamVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    pub(crate) fn finite(self, op: &str) -> Result<Self> {
        if self.is_finite() {
            Ok(self)
        } else {
            Err(Error::NonFinite(op.to_string()))
        }
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_len(self, other)?;
        let s = self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum();
        check_finite_scalar(s, "dot")
    }

    pub fn l2_norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Largest absolute entry; zero for an empty vector.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Returns `self + alpha * x`.
    pub fn axpy(&self, alpha: f64, x: &ParamVector) -> Result<ParamVector> {
        check_len(self, x)?;
        let out = self
            .0
            .iter()
            .zip(&x.0)
            .map(|(y, x)| y + alpha * x)
            .collect();
        ParamVector(out).finite("axpy")
    }

    pub fn scale(&self, alpha: f64) -> Result<ParamVector> {
        ParamVector(self.0.iter().map(|v| v * alpha).collect()).finite("scale")
    }

    pub fn add(&self, other: &ParamVector) -> Result<ParamVector> {
        self.zip_with(other, "add", |a, b| a + b)
    }

    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        self.zip_with(other, "sub", |a, b| a - b)
    }

    pub fn square(&self) -> Result<ParamVector> {
        ParamVector(self.0.iter().map(|v| v * v).collect()).finite("square")
    }

    pub fn abs(&self) -> ParamVector {
        ParamVector(self.0.iter().map(|v| v.abs()).collect())
    }

    pub fn multiply(&self, other: &ParamVector) -> Result<ParamVector> {
        self.zip_with(other, "multiply", |a, b| a * b)
    }

    pub fn elementwise(&self, op: Elementwise, other: Option<&ParamVector>) -> Result<ParamVector> {
        match (op, other) {
            (Elementwise::Square, _) => self.square(),
            (Elementwise::Abs, _) => Ok(self.abs()),
            (Elementwise::Multiply, Some(b)) => self.multiply(b),
            (Elementwise::Multiply, None) => Err(Error::Dimension {
                expected: self.len(),
                found: 0,
            }),
        }
    }

    fn zip_with(
        &self,
        other: &ParamVector,
        op: &str,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<ParamVector> {
        check_len(self, other)?;
        let out = self
            .0
            .iter()
            .zip(&other.0)
            .map(|(&a, &b)| f(a, b))
            .collect();
        ParamVector(out).finite(op)
    }
}

impl Index<usize> for ParamVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl From<ParamVector> for Vec<f64> {
    fn from(v: ParamVector) -> Self {
        v.0
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}
