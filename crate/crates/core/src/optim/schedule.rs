use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    Constant,
    /// Half cosine from `base` at `t = 0` to zero at `t = horizon`.
    Cosine,
    /// `base * gamma^t`.
    Exponential {
        gamma: f64,
    },
    /// Linear ramp over `warmup` steps up to `base`, then linear decay to zero at `horizon`.
    WarmupLinear {
        warmup: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Schedule {
    pub kind: ScheduleKind,
    pub base: f64,
    pub horizon: usize,
}

impl Schedule {
    pub fn new(kind: ScheduleKind, base: f64, horizon: usize) -> Result<Self> {
        if !(base >= 0.0) || !base.is_finite() {
            return Err(Error::config(format!(
                "schedule base rate must be finite and >= 0, got {base}"
            )));
        }
        match kind {
            ScheduleKind::Exponential { gamma } if !(gamma > 0.0 && gamma <= 1.0) => {
                return Err(Error::config(format!(
                    "exponential decay factor must lie in (0, 1], got {gamma}"
                )));
            }
            ScheduleKind::WarmupLinear { warmup } if warmup == 0 || warmup >= horizon => {
                return Err(Error::config(format!(
                    "warmup length {warmup} must lie in [1, horizon={horizon})"
                )));
            }
            _ => {}
        }
        Ok(Schedule {
            kind,
            base,
            horizon,
        })
    }

    pub fn constant(base: f64) -> Self {
        Schedule {
            kind: ScheduleKind::Constant,
            base,
            horizon: usize::MAX,
        }
    }

    /// Rate at position `t`; positions past the horizon are clamped to it.
    pub fn rate(&self, t: usize) -> f64 {
        match self.kind {
            ScheduleKind::Constant => self.base,
            ScheduleKind::Exponential { gamma } => {
                self.base * gamma.powi(t.min(i32::MAX as usize) as i32)
            }
            ScheduleKind::Cosine => {
                if self.horizon == 0 {
                    return self.base;
                }
                let t = t.min(self.horizon);
                self.base * (1.0 + (PI * t as f64 / self.horizon as f64).cos()) / 2.0
            }
            ScheduleKind::WarmupLinear { warmup } => {
                let t = t.min(self.horizon);
                if t < warmup {
                    self.base * (t + 1) as f64 / warmup as f64
                } else {
                    self.base * (self.horizon - t) as f64 / (self.horizon - warmup) as f64
                }
            }
        }
    }
}
