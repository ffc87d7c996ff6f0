//! Monte Carlo study of the real solutions of the five-point relative pose
//! problem, with numerical checks of the constants behind it.

pub mod cli;
pub mod distributions;
pub mod error;
pub mod geometry;
pub mod montecarlo;
pub mod rng;
pub mod solver;
pub mod verify;
pub mod zonoid;

pub use error::{Error, Result};
