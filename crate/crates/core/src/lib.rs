//! Numerical laboratory for the radial focusing Hartree equation
//!
//!   i du/dt + Lap u = -(V * |u|^2) u        on R^3, radial data,
//!
//! and its cubic-NLS limit (V -> delta). The crate provides the radial
//! grid and sine-transform spectral machinery, interaction kernels with
//! admissibility checks, dual-route radial convolution, a Strang splitting
//! integrator with blow-up detection, conserved-quantity and virial
//! diagnostics, rate fitting, and scripted experiments behind a config
//! file format.

pub mod convolution;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod field;
pub mod grid;
pub mod norms;
pub mod potential;
pub mod snapshot;
pub mod spectral;
pub mod testkit;

pub use error::{Error, Result};
pub use field::RadialField;
pub use grid::RadialGrid;
pub use spectral::SineTransform;

/// Version tag for the on-disk config schema; bumped when `RunConfig`
/// changes incompatibly.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;
