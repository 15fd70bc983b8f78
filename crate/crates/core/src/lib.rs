//! Energy-efficiency optimization for IRS-assisted multi-user mmWave downlinks
//! served by a base station with a lens antenna array.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`] synthesizes seeded channel realizations (lens array response,
//!   IRS steering vectors, geometric BS-IRS channels, LOS IRS-user channels).
//! - [`system`] holds the scenario, phase and beamformer types plus the
//!   SINR / rate / power / EE metrics.
//! - [`reflect`] optimizes discrete IRS phases for a fixed beamformer with a
//!   Lagrangian-dual plus quadratic-transform coordinate ascent.
//! - [`transmit`] optimizes the beamformer for fixed phases by successive
//!   convex approximation on top of a log-barrier interior-point solver, then
//!   applies power-based antenna selection for the RF-chain limit.
//! - [`baselines`] implements the comparison schemes.
//! - [`harness`] drives alternating optimization, loads scenarios and runs
//!   experiments that emit CSV.
//! - [`oracles`] contains slow, independent reference computations used by the
//!   test suites.

pub mod baselines;
pub mod channel;
pub mod error;
pub mod harness;
pub mod oracles;
pub mod par;
pub mod reflect;
pub mod system;
pub mod transmit;

pub use error::{Error, Result, Stage};

/// Complex scalar used throughout the crate.
pub type C64 = nalgebra::Complex<f64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
