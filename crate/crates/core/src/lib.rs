//! Variational model of ferroelectric polarization on a thin wire joined to a
//! thin film.
//!
//! The physical multidomain is a wire of cross-section `h_a·Θ` and height 1
//! standing on a film `Θ × (-h_b, 0)`, with `Θ = (-1/2, 1/2)²`. All
//! computations happen on the fixed rescaled domains `Ω^a = Θ × (0, 1)` and
//! `Ω^b = Θ × (-1, 0)`, where thinness shows up only through the anisotropic
//! derivative scales `1/h_a` (wire, in-plane) and `1/h_b` (film, vertical).
//!
//! The crate provides
//!
//! * discrete scaled vector calculus on collocated tensor grids ([`operators`]),
//! * the nonlocal electrostatic potential solvers ([`poisson`]),
//! * the rescaled 3D energies with exact discrete gradients ([`energy`]),
//! * projected gradient descent with Armijo backtracking ([`optimize`]),
//! * the wire (1D), film (2D) and coupled limit models and the recovery
//!   lifts back to 3D ([`limits`]),
//! * thickness sweeps comparing scaled 3D minima with limit minima ([`harness`]).
//!
//! Units: the vacuum permittivity is fixed to 1.

pub mod config;
pub mod energy;
pub mod error;
pub mod grid;
pub mod harness;
pub mod limits;
pub mod linalg;
pub mod operators;
pub mod optimize;
pub mod poisson;

pub use config::{FieldPreset, Regime, RunConfig};
pub use energy::{BcVariant, CoupledField3, EnergyBreakdown, EnergyKind, Problem3d, RegimeParams};
pub use error::{Error, Result};
pub use grid::{Domain, Grid1, Grid2, Grid3, JunctionMap};
pub use limits::{LimitState, LimitVariant};
pub use operators::VectorField3;
pub use optimize::{MinimizeReport, OptimizerOptions};
