//! Numerical laboratory for small odd solutions of 1D NLS-type equations
//! `i u_t + u_xx = g(u)`: semilinear, with an even potential, and Hartree.

// `!(x >= 0.0)` style guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

/// Crate version, echoed in experiment summaries.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub mod evolve;
pub mod grid;
pub mod models;
pub mod solutions;
pub mod spectra;
pub mod virial;

pub use evolve::{evolve, strang_step, EvolveConfig, EvolveError, Observer, Sponge, Stepper, Trajectory};
pub use grid::{ComplexField, Grid, GridError, RealField};
pub use models::{HartreeSpec, ModelError, ModelSpec, NonlinearitySpec, PotentialShape, PotentialSpec, PowerTerm, PreparedModel};
pub use solutions::{breather_seed, odd_packet, soliton_profile, SolitonSpec, SolutionError};
pub use spectra::{index_formula, negative_eigencount, simon_check, simon_v0, EigenReport, SchrodingerProblem, Sector, SpectraError};
pub use virial::{DiagWeight, VirialError, VirialWeights};
