//! Sparse logistic regression by random block-coordinate Douglas-Rachford
//! splitting, with the baselines it is usually compared against.

pub mod baselines;
pub mod bench;
pub mod cli;
pub mod data_io;
pub mod dr;
pub mod driver;
pub mod error;
pub mod lambert_w;
pub mod model;
pub mod prox;
pub mod sampling;
pub mod sparse;
pub mod synthetic;
pub mod trace;

pub use error::{Error, Result};
