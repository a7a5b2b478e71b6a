//! Networked competition models coupled to Kuramoto–Sakaguchi decision
//! dynamics: graphs, phase dynamics, model variants, integration, fixed
//! point analysis and basin estimation.

pub mod analysis;
pub mod basin;
pub mod error;
pub mod graph;
pub mod models;
pub mod params;
pub mod phase;
pub mod rng;
pub mod solver;

pub use error::{CoreError, Result};
pub use models::{Model, ModelSpec, Variant};
pub use params::ModelConfig;
