//! Six-vertex model with Δ<1: Bethe equations, their continuum limit,
//! free energies with finite-size corrections and a transfer-matrix oracle.

pub mod bethe_continuum;
pub mod bethe_discrete;
pub mod error;
pub mod free_energy;
pub mod kernels;
pub mod model_params;
pub mod quadrature;
pub mod transfer_oracle;

pub use error::{Error, Result};
pub use kernels::{Hat, KernelSet};
pub use model_params::{ModelParams, Regime};
