//! Symbolic abstractions of sampled nonlinear systems over logarithmic
//! quantization lattices, with safety synthesis and refinement checking.

pub mod abstraction;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod planning;
pub mod quantizer;
pub mod refinement;
pub mod simulation;
pub mod synthesis;
pub mod transition;

pub use error::{Error, Result};
