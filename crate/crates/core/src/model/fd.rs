//! Central-difference gradient and Hessian-vector-product checkers.

use super::DifferentiableModel;
use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;

pub const DEFAULT_FD_STEP: f64 = 1e-5;

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::config(format!(
            "finite-difference step must be positive, got {h}"
        )))
    }
}

/// `(L(theta + h e_i) - L(theta - h e_i)) / 2h` for every coordinate.
pub fn fd_gradient(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    h: f64,
) -> Result<ParamVector> {
    check_step(h)?;
    let mut probe = theta.clone();
    let mut out = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        let orig = theta[i];
        probe.as_mut_slice()[i] = orig + h;
        let up = model.loss(&probe, batch)?;
        probe.as_mut_slice()[i] = orig - h;
        let down = model.loss(&probe, batch)?;
        probe.as_mut_slice()[i] = orig;
        out.push((up - down) / (2.0 * h));
    }
    ParamVector::new(out)
}

/// `(grad(theta + h v) - grad(theta - h v)) / 2h`, approximating `H(theta) v`.
pub fn fd_hvp(
    model: &dyn DifferentiableModel,
    theta: &ParamVector,
    batch: &Batch,
    v: &ParamVector,
    h: f64,
) -> Result<ParamVector> {
    check_step(h)?;
    if !v.is_finite() {
        return Err(Error::NonFinite("hvp direction".into()));
    }
    let up = model.grad(&theta.axpy(h, v)?, batch)?;
    let down = model.grad(&theta.axpy(-h, v)?, batch)?;
    up.sub(&down)?.scale(1.0 / (2.0 * h))
}
