pub mod asymptotics;
pub mod coeffs;
pub mod config;
pub mod error;
pub mod kuznecov;
pub mod numeric;
pub mod oscillatory;
pub mod pipeline;
pub mod special;
pub mod spectra;

pub use error::{Error, Result};
