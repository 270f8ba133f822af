//! Channel models for diffusive molecular communication between a mobile
//! transmitter and a mobile receiver with reversible receptor binding.
//!
//! The analytical path lives in [`channel`], [`mobility`] and [`detection`];
//! [`particlesim`] is an independent Brownian-dynamics simulator of the same
//! system.

// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod detection;
mod error;
pub mod mobility;
pub mod num;
pub mod particlesim;
pub mod rng;
pub mod specfun;

pub use error::{Error, Result};
pub(crate) use error::ensure;

pub use num_complex::Complex64;

pub type Roots = specfun::CubicRoots<f64>;
pub type Params = channel::PhysicalParams<f64>;
pub type Derived = channel::DerivedParams<f64>;
