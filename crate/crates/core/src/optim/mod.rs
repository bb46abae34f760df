//! Baseline and sharpness-aware parameter updates.
//!
//! All updates share one SGD core ([`sgd_step`]): coupled weight decay,
//! heavy-ball momentum and a scheduled learning rate. SAM and ASAM only change
//! which gradient is fed into it.

mod normalization;
mod schedule;
mod sgd;
mod sharpness;

pub use normalization::{build_normalization, NormalizationOperator};
pub use schedule::{Schedule, ScheduleKind};
pub use sgd::{sgd_step, SgdConfig, SgdState};
pub use sharpness::{
    asam_perturbation, asam_step, asam_step_with_operator, erm_step, sam_perturbation, sam_step,
    sharpness_step, Normalization, SharpStep, SharpnessVariant,
};
