use super::Schedule;
use crate::error::{Error, Result};
use crate::param::ParamVector;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdConfig {
    /// Learning-rate schedule; its base is the initial rate.
    pub lr: Schedule,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl SgdConfig {
    pub fn new(lr: Schedule, momentum: f64, weight_decay: f64) -> Result<Self> {
        if !(lr.base > 0.0) {
            return Err(Error::config(format!(
                "learning rate must be positive, got {}",
                lr.base
            )));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::config(format!(
                "momentum must lie in [0, 1), got {momentum}"
            )));
        }
        if !(weight_decay >= 0.0) {
            return Err(Error::config(format!(
                "weight decay must be >= 0, got {weight_decay}"
            )));
        }
        Ok(SgdConfig {
            lr,
            momentum,
            weight_decay,
        })
    }

    /// Constant rate, no momentum, no weight decay.
    pub fn plain(lr: f64) -> Self {
        SgdConfig {
            lr: Schedule::constant(lr),
            momentum: 0.0,
            weight_decay: 0.0,
        }
    }
}

/// Momentum buffer and schedule position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SgdState {
    pub buffer: Option<ParamVector>,
    pub step: usize,
}

impl SgdState {
    pub fn new() -> Self {
        SgdState::default()
    }

    /// Learning rate the next call to [`sgd_step`] will use.
    pub fn current_lr(&self, cfg: &SgdConfig) -> f64 {
        cfg.lr.rate(self.step)
    }
}

/// `m' = mu m + (g + lambda theta)`, `theta' = theta - eta m'`.
pub fn sgd_step(
    theta: &ParamVector,
    grad: &ParamVector,
    state: &mut SgdState,
    cfg: &SgdConfig,
) -> Result<ParamVector> {
    let eta = state.current_lr(cfg);
    let direction = if cfg.weight_decay != 0.0 {
        grad.axpy(cfg.weight_decay, theta)?
    } else {
        grad.clone()
    };
    let velocity = match (&state.buffer, cfg.momentum != 0.0) {
        (Some(m), true) => direction.axpy(cfg.momentum, m)?,
        _ => direction,
    };
    let next = theta.axpy(-eta, &velocity)?;
    if cfg.momentum != 0.0 {
        state.buffer = Some(velocity);
    }
    state.step += 1;
    Ok(next)
}
