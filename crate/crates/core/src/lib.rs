//! One-dimensional Airy shallow-water waves over variable bathymetry.
//!
//! The crate advances the system
//!
//! ```text
//! u_t + u u_x + Γ_x = 0
//! Γ_t + ((Γ - b) u)_x = 0
//! ```
//!
//! (gravity normalised to one) with a well-balanced finite-volume scheme, and
//! analyses each state through the Riemann invariants `P = u + 2γ`,
//! `Q = u - 2γ`, `γ = sqrt(Γ - b)`. Where `P_x` vanishes over a sloping bed the
//! transport speed `γ + u + b_x / P_x` of `P` is singular; the [`detector`]
//! locates and classifies those points as inland or offshore rushes.

pub mod analytic;
pub mod bathymetry;
pub mod detector;
pub mod error;
pub mod fields;
pub mod nondim;
pub mod riemann;
pub mod solver;

pub use bathymetry::Bathymetry;
pub use detector::{
    Classification, CriticalEvent, DegenerateRegime, DegenerateSpec, DepthRegime, DetectorConfig,
    Side,
};
pub use error::{Error, Result};
pub use fields::{FlowState, Grid};
pub use riemann::{RiemannFields, Speed};
pub use solver::{Boundary, SolverConfig};
