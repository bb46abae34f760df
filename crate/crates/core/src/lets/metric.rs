use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::param::ParamVector;

/// Upper-level objective measuring generalization after the lower-level step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricKind {
    /// `J = L_vl`
    ValLoss,
    /// `J = L_vl - L_tr`
    Gap,
    /// `J = (L_vl - L_tr)^2 / 2`
    #[default]
    SquaredGap,
}

impl MetricKind {
    pub const ALL: [MetricKind; 3] = [MetricKind::ValLoss, MetricKind::Gap, MetricKind::SquaredGap];

    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::ValLoss => "val-loss",
            MetricKind::Gap => "gap",
            MetricKind::SquaredGap => "squared-gap",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MetricKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown metric kind {s:?}")))
    }
}

pub fn generalization_metric(kind: MetricKind, val_loss: f64, train_loss: f64) -> f64 {
    match kind {
        MetricKind::ValLoss => val_loss,
        MetricKind::Gap => val_loss - train_loss,
        MetricKind::SquaredGap => {
            let gap = val_loss - train_loss;
            0.5 * gap * gap
        }
    }
}

/// Gradient of the metric with respect to the post-step parameters.
pub fn metric_grad_factor(
    kind: MetricKind,
    val_loss: f64,
    train_loss: f64,
    val_grad: &ParamVector,
    train_grad: &ParamVector,
) -> Result<ParamVector> {
    match kind {
        MetricKind::ValLoss => {
            if val_grad.len() != train_grad.len() {
                return Err(Error::Dimension {
                    expected: val_grad.len(),
                    found: train_grad.len(),
                });
            }
            Ok(val_grad.clone())
        }
        MetricKind::Gap => val_grad.sub(train_grad),
        MetricKind::SquaredGap => val_grad.sub(train_grad)?.scale(val_loss - train_loss),
    }
}
