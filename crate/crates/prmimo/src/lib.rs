//! Simulation library for polarization-reconfigurable MIMO links.
//!
//! Each antenna element carries a single port whose linear polarization
//! orientation can be steered. The library models the dual-polarized
//! Rayleigh channel, assembles the effective baseband channel for a
//! polarization state, optimizes that state per element in closed form
//! (alternating between the link ends), and evaluates hybrid Tx antenna
//! selection with maximum-ratio transmission on the selected subset,
//! together with the capacity, SNR-bound, and symbol-error-rate metrics
//! used by the experiment harness.

pub mod channel;
pub mod error;
pub mod linalg;
pub mod metrics;
pub mod polcoding;
pub mod selection;

pub use error::{Error, Result};
