//! Secure downlink with an intelligent reflecting surface (IRS).
//!
//! An access point with `M` antennas serves a single-antenna user while a
//! single-antenna eavesdropper listens; an `N`-element IRS reflects the
//! signal with unit-modulus phase shifts. The crate covers
//!
//! - [`channel`]: deployment geometry, path loss and Rician fading;
//! - [`rates`]: user, eavesdropper and secrecy rates;
//! - [`txbf`]: optimal beamformer for a fixed IRS state;
//! - [`sdp`]: a dense interior-point semidefinite solver;
//! - [`irsopt`]: semidefinite relaxation of the phase design plus
//!   Gaussian randomization;
//! - [`altopt`]: alternating optimization and the two benchmark schemes;
//! - [`neural`]: a from-scratch MLP that predicts IRS phases;
//! - [`harness`]: dataset generation, training, comparisons and result files.

// `!(x > 0.0)` is used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altopt;
pub mod channel;
pub mod error;
pub mod harness;
pub mod irsopt;
pub mod linalg;
pub mod neural;
pub mod rates;
pub mod rng;
pub mod sdp;
pub mod txbf;

pub use error::{Error, Result};
