//! Uplink training simulation for mmWave small cells.
//!
//! The crate covers the full training pipeline of a TDD small-cell network
//! with massive-MIMO base stations:
//!
//! * [`channel`]: OFDM parameters, sparse multipath channels and the
//!   partial-DFT measurement model for pilot tones.
//! * [`detection`]: energy-based on/off detection of a UE at a base station.
//! * [`recovery`]: sparse channel estimation (Dantzig selector over an
//!   in-crate simplex solver, orthogonal matching pursuit) and the dense
//!   least-squares baseline.
//! * [`pilots`]: orthogonal tone allocation and the binary pilot codebooks
//!   used for aggressive pilot reuse with collision detection.
//! * [`netsim`]: collision statistics and multiplexing metrics of a UE group
//!   spread over a network of small cells.
//!
//! Randomized operations take an explicit random stream. Monte-Carlo drivers
//! take a master seed and derive one independent stream per trial (see
//! [`rng`]), so results do not depend on how trials are scheduled.

pub mod channel;
pub mod detection;
mod error;
mod linalg;
pub mod lp;
pub mod netsim;
pub mod pilots;
pub mod recovery;
pub mod rng;
pub mod stats;

pub use error::{Error, Result};

/// Complex baseband sample type used throughout the crate.
pub type Complex = num_complex::Complex64;
