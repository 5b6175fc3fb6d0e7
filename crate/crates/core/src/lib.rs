//! Momentum entanglement of two cold atoms created by a single scattered
//! photon.
//!
//! The crate evaluates the closed-form time-dependent two-atom amplitude,
//! its two steady-state limits (Bell-like single scattering and cascaded
//! pairwise scattering), and quantifies the resulting entanglement with a
//! numerical Schmidt decomposition alongside the analytic spectrum.

pub mod analysis;
pub mod cli;
pub mod dynamics;
pub mod error;
mod fourier;
pub mod io;
pub mod model;
pub mod schmidt;
pub mod steady;

pub use error::{Error, Result};
pub use model::{BipartiteAmplitude, ModelParams, MomentumGrid, Representation};
