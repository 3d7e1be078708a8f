//! Joint transmit beamforming, IRS phase-shift and movable-antenna position
//! optimization for IRS-aided SWIPT downlinks.
//!
//! The crate is organised bottom-up:
//!
//! * [`scenario`] synthesizes field-response channels from path angles and
//!   antenna/element positions.
//! * [`system`] evaluates SINR, harvested power, weighted sum-rate and the
//!   constraint residuals of a [`DesignPoint`].
//! * [`qcqp`] is a small dense interior-point solver for the convex
//!   quadratically constrained subproblems produced by the MM steps.
//! * [`wmmse`] runs the outer block coordinate descent over the WMMSE
//!   reformulation; [`pdd`] and [`positioning`] provide its IRS and antenna
//!   blocks.
//! * [`feasibility`] minimizes the worst energy-harvesting shortfall to
//!   decide whether the harvesting thresholds are attainable.
//! * [`harness`] drives Monte-Carlo sweeps and writes CSV results.
//!
//! Rates are reported in nats; divide by `ln 2` for bits.

pub mod error;
pub mod feasibility;
pub mod harness;
pub mod linalg;
pub mod pdd;
pub mod positioning;
pub mod qcqp;
pub mod scenario;
pub mod system;
pub mod units;
pub mod wmmse;

pub use error::{Error, Result};
pub use scenario::{ChannelSet, PathAngle, PathCluster, ScenarioConfig};
pub use system::{ConstraintReport, DesignPoint};

pub use nalgebra::{DMatrix, DVector, Vector2};
pub use num_complex::Complex64;
