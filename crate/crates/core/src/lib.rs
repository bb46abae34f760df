//! Sharpness-aware minimization with a learned perturbation radius.
//!
//! The crate is organized bottom-up:
//!
//! - [`param`]: flat parameter-vector arithmetic shared by every optimizer.
//! - [`model`]: differentiable models with hand-written gradients, finite-difference
//!   checkers and the binary checkpoint format.
//! - [`data`]: synthetic datasets, label corruption, splitting, seeded batch sampling
//!   and IDX ingestion.
//! - [`optim`]: SGD, SAM, ASAM and learning-rate schedules.
//! - [`lets`]: the bilevel radius learner (LETS-SAM / LETS-ASAM).
//! - [`oracle`]: finite-difference verification of the radius hypergradient.
//! - [`harness`]: config-driven experiment runs, sweeps, loss landscapes and
//!   convergence summaries used by the `sharplab` binary.

pub mod data;
pub mod error;
pub mod harness;
pub mod lets;
pub mod model;
pub mod optim;
pub mod oracle;
pub mod param;
pub mod rng;

pub use error::{Error, Result};
pub use param::ParamVector;
