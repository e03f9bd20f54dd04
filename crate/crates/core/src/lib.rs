//! Stark wave-packet dynamics: time scales of the two-quantum-number Stark
//! spectrum, autocorrelation interferograms and the fractional-revival
//! decomposition into shifted classical wave functions.
//!
//! All physics runs in Hartree atomic units; see [`units`] for conversions.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod packet;
pub mod report;
pub mod revivals;
pub mod stark;
pub mod units;

pub use error::{Error, Result};
pub mod verify;
