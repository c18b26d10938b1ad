//! Onset of phototactic bioconvection in a suspension lit by diffuse flux.
//!
//! The pipeline runs bottom-up: [`radiative`] solves the steady light field,
//! [`basic_state`] the equilibrium concentration, [`perturb_rte`] the linear
//! response of the light field to a concentration perturbation, [`stability`]
//! the normal-mode eigenproblem and [`neutral`] traces marginal curves and
//! extracts critical points.

pub mod error;
pub mod numkernel;
pub mod radiative;
pub mod basic_state;
pub mod perturb_rte;
pub mod stability;
pub mod neutral;

pub use error::{Error, Result};
