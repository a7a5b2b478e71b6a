//! Design of experiments and regression analysis for basin-value campaigns.

pub mod doe;
pub mod error;
pub mod stats;

pub use error::{DesignError, Result};
