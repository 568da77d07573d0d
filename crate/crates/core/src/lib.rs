//! Quantum damped harmonic chain: bath-induced diffusion coefficients,
//! second-moment dynamics of the ring, and the continuum heat equation that
//! emerges from it.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod continuum;
pub mod diffusion;
pub mod error;
pub mod moments;
pub mod quadrature;

pub use chain::{build_matrices, dispersion, group_velocity, mode_grid, ChainParams, DiffusionProfile, ModelMatrices};
pub use continuum::{klemens_conductivity, transport_coefficients, TransportCoefficients, VelocityModel};
pub use diffusion::{diffusion_profile, gibbs_covariance, heat_capacity_density, source_density, Stencil};
pub use error::{Error, Result};
pub use moments::{evolve, site_observables, stationary_covariance, CovarianceState, EvolveOptions};
