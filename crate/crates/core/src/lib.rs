//! Simultaneous position and momentum measurement with two pointers coupled
//! to an Ohmic thermal bath, in the Gaussian regime.
//!
//! The pipeline is: [`model`] parameters → [`propagator`] response matrices →
//! [`noise`] covariance from the [`kernels`] → [`uncertainty`] curves →
//! [`optimize`] for optimal times. [`oracle`] holds independent reference
//! solutions, which [`gates`] turns into the checks behind `validate`.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod gates;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod noise;
pub mod optimize;
pub mod oracle;
pub mod pipeline;
pub mod propagator;
pub mod quadrature;
pub mod special;
pub mod uncertainty;

pub use error::{Error, Result};
pub use kernels::{BathKernel, KernelMethod};
pub use model::{
    gaussian_state_moments, validate_config, CouplingMatrices, GaussianMoments, GaussianState,
    MeasurementConfig, NumericalSettings,
};
pub use pipeline::Evaluator;
pub use propagator::{AugmentedGenerator, DynamicsMode, PropagatorSet, Propagators};
pub use uncertainty::UncertaintyPoint;
