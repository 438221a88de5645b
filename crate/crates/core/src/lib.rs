//! Simulation and exact combinatorics for holomorphic multiplicative chaos.
//!
//! The random analytic function `exp(sum_k X(k) z^k / sqrt(k))`, with independent
//! standard complex Gaussians `X(k)`, has Taylor coefficients `A(n)` satisfying
//! `E|A(N)|^2 = 1` while `E|A(N)|` decays like `(log N)^{-1/4}`. This crate
//! provides:
//!
//! - [`rng_gauss`]: seeded, splittable complex Gaussian streams;
//! - [`series`]: truncated power series with two exponential engines;
//! - [`chaos_model`]: samplers and moment estimators for `A(N)` and `F_K`;
//! - [`partitions_exact`]: the partition expansion of `A(N)` in exact arithmetic;
//! - [`barrier`]: ballot probabilities, barrier events and block statistics;
//! - [`number_models`]: Steinhaus multiplicative functions and the `F_q[t]` model.

pub mod barrier;
pub mod chaos_model;
pub mod error;
pub mod number_models;
pub mod partitions_exact;
pub mod rng_gauss;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use rng_gauss::{split, ComplexSource, FixedValues, GaussianStream, Seed};
pub use stats::MomentEstimate;
