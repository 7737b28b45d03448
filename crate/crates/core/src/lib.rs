//! Link-level simulation of space-time and space-time-space block coded
//! MIMO-OFDM broadcasting in a two-site single frequency network.
//!
//! The transmit chain is bit-interleaved coded modulation ([`bics`]) followed
//! by a linear space-time block code ([`stcodes`]). Each subcarrier sees a
//! quasi-static MIMO channel ([`channel`]) weighted by the per-antenna received
//! powers of the SFN geometry ([`geometry`]). The receiver works on the
//! real-valued equivalent model ([`linmodel`]) and runs an iterative
//! MMSE / parallel interference cancellation detector exchanging extrinsic
//! information with a max-log-MAP decoder ([`receiver`]). [`harness`] drives
//! Eb/N0 sweeps and required-Eb/N0 searches and writes CSV records.

pub mod bics;
pub mod channel;
mod error;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod linmodel;
pub mod receiver;
pub mod stcodes;

pub use error::{Error, Result};

/// Complex sample type used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
/// Dense real column vector.
pub type RVector = nalgebra::DVector<f64>;
