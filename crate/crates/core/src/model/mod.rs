//! Differentiable models with analytic gradients.
//!
//! Every model exposes its loss and gradient as pure functions of the flat
//! parameter vector and a [`Batch`]. Losses are batch means, so the gradient is
//! the mean of per-example gradients. [`fd`] holds the central-difference
//! checkers that act as ground truth for the hand-written backprop.

mod checkpoint;
mod classifier;
mod conv;
pub mod fd;
mod layout;
mod mlp;
mod quadratic;

use std::fmt;

pub use checkpoint::{read_checkpoint, write_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use classifier::LogReg;
pub use conv::Conv1d;
pub use fd::{fd_gradient, fd_hvp, DEFAULT_FD_STEP};
pub use layout::{ParameterLayout, Segment, SegmentKind};
pub use mlp::{Activation, Mlp};
pub use quadratic::{AnchorQuadratic, Quadratic};

use crate::data::Batch;
use crate::error::{Error, Result};
use crate::param::ParamVector;
use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    CrossEntropy,
    MeanSquared,
}

pub trait DifferentiableModel: Send + Sync + fmt::Debug {
    fn layout(&self) -> &ParameterLayout;

    fn loss_kind(&self) -> LossKind;

    fn loss_and_grad(&self, theta: &ParamVector, batch: &Batch) -> Result<(f64, ParamVector)>;

    fn loss(&self, theta: &ParamVector, batch: &Batch) -> Result<f64> {
        Ok(self.loss_and_grad(theta, batch)?.0)
    }

    fn grad(&self, theta: &ParamVector, batch: &Batch) -> Result<ParamVector> {
        Ok(self.loss_and_grad(theta, batch)?.1)
    }

    /// Argmax accuracy for classifiers; `None` for models without classes.
    fn accuracy(&self, _theta: &ParamVector, _batch: &Batch) -> Result<Option<f64>> {
        Ok(None)
    }

    fn init_params(&self, rng: &mut Stream) -> ParamVector;

    fn dim(&self) -> usize {
        self.layout().dim()
    }
}

pub fn make_quadratic(curvature: ParamVector, center: ParamVector) -> Result<Quadratic> {
    Quadratic::new(curvature, center)
}

pub fn make_logreg(input_dim: usize, num_classes: usize) -> Result<LogReg> {
    LogReg::new(input_dim, num_classes, LossKind::CrossEntropy)
}

pub fn make_mlp(dims: &[usize], activation: Activation) -> Result<Mlp> {
    Mlp::new(dims, activation, LossKind::CrossEntropy)
}

pub(crate) fn check_theta(model: &dyn DifferentiableModel, theta: &ParamVector) -> Result<()> {
    if theta.len() != model.dim() {
        return Err(Error::Dimension {
            expected: model.dim(),
            found: theta.len(),
        });
    }
    Ok(())
}

pub(crate) fn finite_loss(loss: f64) -> Result<f64> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(Error::NonFinite("loss".into()))
    }
}

/// He-style uniform bound for a layer with the given fan-in.
pub(crate) fn fan_in_bound(fan_in: usize) -> f64 {
    (6.0 / fan_in as f64).sqrt()
}
