//! Local convergence analysis of first-order min-max algorithms.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense complex matrices, eigen/dual bases, SVD, norms.
//! - [`game`]: payoff models, skewed gradient field and its Jacobian.
//! - [`conditions`]: equivalent tests for strict positivity of the
//!   spectral abscissa of `M = S + A`.
//! - [`perturbation`]: eigenvalue derivatives and certified expansions.
//! - [`update`]: Jacobians of discrete-time updates and their spectral radii.
//! - [`mirror`]: Bregman projectors, effective Jacobians, whitened operators.
//! - [`dynamics`]: iterative algorithms, flows, rate fitting.
//! - [`ensembles`]: random-rotation ensembles and their concentration bounds.

pub mod conditions;
pub mod dynamics;
pub mod ensembles;
pub mod game;
pub mod linalg;
pub mod mirror;
pub mod perturbation;
pub mod rng;
pub mod stats;
pub mod update;
