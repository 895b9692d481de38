pub mod analysis;
pub mod cli;
pub mod error;
pub mod hadamard;
pub mod infogeo;
pub mod lp;
pub mod selftest;
pub mod subspace;

pub use error::{Error, Result};
