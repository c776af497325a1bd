//! Ergodic capacity of the keyhole MIMO channel under i.i.d. Nakagami-m
//! fading with channel knowledge at both ends.
//!
//! The crate evaluates the capacity three ways: exactly (waterfilling
//! threshold plus adaptive quadrature over the effective gain density),
//! through low-SNR closed forms (Lambert-W and logarithmic), and as the
//! achievable rate of a one-bit On-Off power policy. A seeded, parallel
//! Monte Carlo sampler serves as an independent check on every quantity.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod channel;
pub mod cli;
pub mod error;
pub mod montecarlo;
pub mod onoff;
pub mod quadrature;
pub mod specfun;
pub mod verify;
pub mod waterfilling;

pub use error::{Error, Result};
