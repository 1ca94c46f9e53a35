//! Level set mean curvature flow under vanishing-viscosity regularization,
//! with a verifier that evaluates the distributional (BV) solution identities,
//! energy-dissipation inequalities, and relabeling invariance on concrete
//! simulations.

pub mod config;
pub mod error;
pub mod geometry;
pub mod report;
pub mod grid;
pub mod initial_data;
pub mod snapshot;
pub mod solver;
pub mod verifier;

pub use error::{Error, Result};
