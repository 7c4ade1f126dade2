//! Active level-set estimation with Gaussian processes.
//!
//! Given an expensive black-box function `f` and a threshold `theta`, the goal
//! is to classify the input space into the super-level set `{x : f(x) >= theta}`
//! and its complement from as few evaluations as possible. This crate provides
//! the numerical core: exact GP regression via Cholesky factorization,
//! a family of acquisition rules (uncertainty sampling, straddle, LSE,
//! MILE, and randomized-straddle variants driven by chi-squared weights),
//! misclassification losses and their closed-form posterior expectations,
//! information-gain estimates with the matching regret-style bounds, and the
//! cell-center discretization schedule used on continuous domains.
//!
//! The crate is `no_std` (with `alloc`); IO, file formats, and the experiment
//! CLI live in the companion crate `lsekit-lab`.

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod acquisition;
pub mod blackbox;
pub mod discretize;
pub mod error;
pub mod gp;
pub mod kernel;
pub mod level_set;
pub mod linalg;
mod math;
pub mod points;
pub mod rng;

pub use error::Error;
pub use gp::{Dataset, Posterior, QueryCache};
pub use kernel::KernelSpec;
pub use points::PointSet;
pub use rng::RngState;
