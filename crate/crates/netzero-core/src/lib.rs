//! Pulse-level simulation and characterization of Net-Zero (NZ) conditional-phase
//! gates on a pair of flux-tunable, bus-coupled three-level transmons.
//!
//! The crate models the full stack of a flux-pulsed CZ gate: the flux arc and
//! coupled-transmon device model, fast-adiabatic bipolar pulse construction,
//! linear distortion of the flux line, open-system two-qutrit dynamics, gate
//! metrics (conditional phase, leakage, average fidelity), a Mach-Zehnder-style
//! analytic model of the bipolar gate, virtual characterization experiments,
//! and randomized benchmarking with leakage modification.
//!
//! Conventions used throughout:
//! - Internal angular frequencies are rad/s; configuration files use GHz, MHz
//!   and us and are converted exactly once at the boundary.
//! - Flux is expressed in units of the flux quantum.
//! - Two-qutrit basis states |ij> are ordered with i the static (mid-frequency)
//!   qutrit and j the flux-pulsed (high-frequency) qutrit, index = 3*i + j.
//! - Density matrices are vectorized by column stacking; superoperators act on
//!   the stacked vector from the left.

pub mod config;
pub mod device;
pub mod distortion;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod interferometer;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pulse;
pub mod quadrature;
pub mod rb;
pub mod superop;
pub mod units;

pub use error::{Error, Result};
