//! D2D-assisted cooperative edge caching (DCEC) for dense mmWave networks.
//!
//! The crate has two halves that are meant to be checked against each other:
//! [`analytic`] evaluates the closed-form offloading gain, rate lower bounds and
//! retrieval delay, and [`montecarlo`] estimates the same quantities by sampling
//! PPP topologies with fading and random antenna orientations.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Frozen reference values keep every digit they were generated with.
#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod analytic;
pub mod antenna;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod montecarlo;
pub mod params;
pub mod popularity;
pub mod special;

pub use error::{Error, Result};
