pub mod cli;
pub mod diagnostics;
pub mod error;
mod fft;
pub mod inference;
pub mod likelihood;
pub mod models;
pub mod optim;
pub mod series;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
