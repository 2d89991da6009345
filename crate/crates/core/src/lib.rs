//! Simulation and analysis of multilevel transmon dispersive readout.
//!
//! The crate models the lowest four transmon levels decaying in cascade
//! during a readout pulse, shelving of the excited state into `|3>` before
//! readout, one- and two-tone integrated IQ shots from a dispersively shifted
//! resonator, and the classifiers and fidelity figures used to analyse them.
//!
//! Modules:
//! - [`levels`]: rate equations, closed-form and integrated populations,
//!   stochastic jump trajectories, pi-pulse transfers.
//! - [`readout`]: resonator transmission, tone selection, shot generation,
//!   preselection.
//! - [`discriminate`]: projection-axis thresholding, Gaussian blobs, the
//!   two-tone truth table and the feedforward network.
//! - [`metrics`]: assignment matrices, fidelities, SNR, SPAM mitigation and
//!   relaxation-time fitting.
//! - [`config`], [`experiments`], [`io`]: experiment runner used by the CLI.

pub mod config;
pub mod discriminate;
pub mod error;
pub mod experiments;
pub mod io;
pub mod levels;
pub mod metrics;
pub mod readout;
pub mod rng;

pub use error::{ErrorCategory, ReadoutError, Result};
pub use levels::{DecayRates, Level, LevelPopulation};
