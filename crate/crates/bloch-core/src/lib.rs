//! Floquet-Bloch analysis of periodic Jacobi operators on `Z^d`.
//!
//! The library builds `q`-periodic nearest-neighbor Jacobi operators,
//! decomposes them into quasimomentum fibers, computes band structure and
//! degeneracy-aware band velocities, evolves states exactly by spectral
//! calculus, and constructs the asymptotic velocity observable `Q` whose
//! relation to the Heisenberg position, `X_k(t)/t -> Q_k`, is the ballistic
//! transport statement the whole toolkit exists to measure.
//!
//! Axis arguments are 1-based throughout (`axis = 1..=d`), matching the
//! coordinate labels used in formulas and output tables.
//!
//! Modules follow the pipeline:
//!
//! * [`operator`] — operators on the lattice, validation, real-space action;
//! * [`floquet`] — fibers `J(theta)`, `P_k(theta)`, the gauge, and the
//!   discrete transform (the orientation conventions live here);
//! * [`bands`] — fiber eigendecomposition, band velocities, spectra;
//! * [`dynamics`] — exact evolution plans, position moments, the unwrapped
//!   torus trace, and the Heisenberg position apply with its boundary guard;
//! * [`velocity`] — the observable `Q`, its moments and spectral measure,
//!   and the ballistic comparison table;
//! * [`models`], [`rng`] — built-in operator families and seeded states;
//! * [`verify`] — deterministic assertion suites over all of the above.

pub mod bands;
pub mod dynamics;
pub mod error;
pub mod floquet;
pub mod lattice;
pub mod models;
pub mod operator;
pub mod quadrature;
pub mod rng;
pub mod velocity;
pub mod verify;

pub use bands::{
    band_velocity, compute_bands, hermitian_eigendecomposition, kernel_mass_estimate,
    merged_spectrum, spectrum_intervals, BandPoint, BandStructure,
};
pub use dynamics::{
    boundary_band_mass, position_moments, propagation_radius, support_radius, BoxPlan,
    EvolutionPlan, TorusPlan, UnwrappedTrace,
};
pub use error::{BlochError, Result};
pub use floquet::{
    fiber_hamiltonian, fiber_velocity, floquet_transform, gauge_matrix, gauged_fiber,
    inverse_floquet_transform, verify_block_diagonalization, FiberField, FiberOperator,
};
pub use lattice::{Geometry, LatticeState};
pub use models::{builtin, free1d, free2d, random_periodic, ssh};
pub use operator::{
    validate, HoppingEntry, OperatorDescription, PeriodicJacobiOperator, PotentialEntry,
    ValidationReport, Violation,
};
pub use rng::{random_state, DeterministicRng};
pub use velocity::{
    asymptotic_velocity, ballistic_report, AsymptoticVelocity, ReportRow,
};
pub use verify::{run_suite, run_suites, Assertion, BoundKind, SuiteReport, SUITE_NAMES};

/// `Complex64` is the scalar type of every wavefunction and matrix here.
pub use num_complex::Complex64;
