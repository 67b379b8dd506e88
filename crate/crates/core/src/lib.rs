//! Link-level simulator for codebook-based semantic image transmission
//! over OFDM.
//!
//! The transmit chain is: block-DCT feature extraction, shared-codebook
//! vector quantization, uniform bit quantization, importance-aware mapping
//! onto an OFDM time-frequency grid, multipath fading channel, pilot-based
//! LS channel estimation with bilinear interpolation, zero-forcing
//! equalization, and receiver-side codebook rematching to correct residual
//! feature errors.

pub mod bitquant;
pub mod chanest;
pub mod codec;
pub mod error;
pub mod grid;
pub mod image;
pub mod importance;
pub mod metrics;
pub mod phy;
pub mod pipeline;

pub use error::SemcomError;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, SemcomError>;
