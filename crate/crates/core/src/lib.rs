//! Desk-scale simulator of entanglement-based satellite-to-ground quantum key
//! distribution.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atmosphere;
pub mod campaign;
pub mod config;
pub mod error;
pub mod extraction;
pub mod fidelity;
pub mod optics;
pub mod orbit;
pub mod report;
pub mod seed;
pub mod source;
pub mod verify;

pub use error::{Error, FieldError, Result};
