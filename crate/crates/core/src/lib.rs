//! Compressed matched filtering for linear models with contaminated noise.
//!
//! The pipeline is: build a design [`model::DesignMatrix`], draw noise and an
//! observation, compress it with a [`sensing::SensingMatrix`] `T = [Hᵀ; WP]`,
//! then reconstruct the parameters with the compressed Huber solver
//! ([`ch_solver`]) and optionally refine with [`estimators::awls`].
//! [`harness`] runs the Monte Carlo sweeps.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ch_solver;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod huber;
pub mod linalg;
pub mod model;
pub mod seeds;
pub mod sensing;

pub use error::{CmfError, Result};
