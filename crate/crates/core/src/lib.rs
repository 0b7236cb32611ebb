//! Discretized calculus of variations on `E = C^∞(S¹, ℝᵐ)`.

pub mod calculus;
pub mod cli;
pub mod dubois_reymond;
pub mod el_solver;
pub mod error;
pub mod function_space;
pub mod io;
pub mod lagrangian;
pub mod timegrid;
pub mod weak_integral;

pub use error::{Error, Result};
