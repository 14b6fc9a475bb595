//! Numerical laboratory for Derrida–Retaux recursive systems.

pub mod analytics;
pub mod cli;
pub mod dist;
pub mod error;
pub mod open_paths;

pub use error::{Error, Result};
