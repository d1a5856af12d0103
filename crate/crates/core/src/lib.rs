//! Time-frequency laboratory for the bilinear ℓ^r square function over
//! arbitrary disjoint squares: tri-tiles, wave packets, the model operator,
//! sizes and energies, stopping-time decompositions, restricted-type probes
//! and the rough-domain multiplier application.

pub mod analysis;
pub mod bochner;
pub mod calibration;
pub mod columns;
pub mod config;
pub mod decomposition;
pub mod error;
pub mod experiment;
pub mod generators;
pub mod geometry;
pub mod operators;
pub mod oracle;
pub mod probe;
pub mod size_energy;

pub use error::{Error, Result};
