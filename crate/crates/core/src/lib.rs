//! Cayley-Dickson arithmetic, Gaussian mollifiers and Whitney-type extension of jets.

pub mod algebra;
pub mod cli;
pub mod error;
pub mod extension;
pub mod jets;
pub mod mollifier;
pub mod numerics;
pub mod projection;
pub mod sets;

pub use error::{Error, Result};
