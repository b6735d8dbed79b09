pub mod asymptotics;
pub mod density;
pub mod error;
pub mod fisher;
pub mod fourier;
pub mod integrand;
pub mod oracle;
pub mod params;
pub mod quadrature;

pub use error::{Error, Result};
pub use params::{derive, standardize, DerivedQuantities, StableParams, BETA_MAX};
