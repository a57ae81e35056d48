//! Moment sums over Stern-Brocot partitions of the unit interval.

pub mod asymptotic_fit;
pub mod brocot_sums;
pub mod continuants;
pub mod error;
pub mod stern_brocot;
pub mod zeta_constants;

pub use error::{Error, Result};
