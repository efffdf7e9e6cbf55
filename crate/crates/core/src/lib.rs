pub mod analysis;
pub mod cli;
pub mod control;
pub mod error;
pub mod grid;
pub mod linalg;
pub mod solvers;

pub use error::{Error, Result};
