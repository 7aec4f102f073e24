//! Reduction differentials for free-boson vertex operator algebra
//! correlation functions on the sphere, the torus and Schottky surfaces.

pub mod error;
pub mod exec;
pub mod scalar;
pub mod complex;
pub mod elliptic;
pub mod schottky;
pub mod series;
pub mod voa;

pub use error::{Error, Result};
