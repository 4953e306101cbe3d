//! Reflector-based direct sampler for user-supplied target densities.
//!
//! The pipeline has three stages: construct a piecewise-ellipsoidal convex
//! reflector whose delivered ray measure matches a discretized target
//! ([`reflector::build_reflector`]), smooth the piecewise polar radius with a
//! softmin ([`goasmap::SmoothedReflector`]), and generate independent samples
//! by tracing uniform spherical-cap rays through the reflecting map
//! ([`goasmap::push_forward`]). Construction needs exactly K target-density
//! evaluations and no gradients; sampling needs none at all.
//!
//! Supporting modules provide the target zoo ([`targets`]), distributional
//! diagnostics ([`diagnostics`]), and reference MCMC samplers ([`baselines`]).

pub mod baselines;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod geometry;
pub mod goasmap;
pub mod reflector;
pub mod rng;
pub mod targets;

pub use error::{Error, Result};
