pub mod config;
pub mod energy;
pub mod error;
pub mod flows;
pub mod measures;
pub mod normalform;
pub mod phase;
pub mod quadrature;
pub mod report;
pub mod runner;
pub mod spectral;
pub mod suite;

pub use error::{Error, Result};
