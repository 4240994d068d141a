//! Constructions and diagnostics for Hamiltonian-unbiased observables (HUOs):
//! observables whose eigenbasis is mutually unbiased with the eigenbasis of a
//! given Hamiltonian. The crate covers the full pipeline:
//!
//! * [`quantum`]: dense Hermitian operators, spectral decompositions with
//!   explicit degeneracy grouping, quantum states, outcome distributions, and
//!   spin-chain / random-matrix Hamiltonian builders;
//! * [`mub`]: complete mutually unbiased basis families for prime and
//!   power-of-two dimensions, plus the discrete Fourier basis;
//! * [`hub`]: Hamiltonian-unbiased bases, spectrum assignment, HUO assembly,
//!   and the phase-table representation of their matrix elements;
//! * [`entropy`]: Shannon / von Neumann entropies, Gibbs states, entropic
//!   uncertainty checks, and the narrow-energy entropy bound;
//! * [`equilibrium`]: sector energies, the stationarity equations for outcome
//!   distributions, Lagrange-multiplier recovery, and constrained entropy
//!   maximization over pure states;
//! * [`dynamics`]: unitary evolution, narrow-energy states, microcanonical
//!   and diagonal ensembles, and thermalization traces;
//! * [`eth`]: energy-basis matrix-element tables and the statistical tests
//!   (diagonal constancy, phase uniformity, off-diagonal scaling, CLT
//!   residuals, factorization) that probe eigenstate-thermalization behavior.
//!
//! All numerics are `f64`/`c64`; matrices are dense [`faer`] matrices.

pub mod dynamics;
pub mod entropy;
pub mod equilibrium;
pub mod error;
pub mod eth;
pub mod hub;
pub mod io;
pub mod mat;
pub mod mub;
pub mod quantum;
pub mod rng;
pub mod stats;

/// Double-precision complex scalar used throughout.
pub use faer::complex_native::c64;

/// Dense complex matrix.
pub type CMat = faer::Mat<c64>;

/// Dense real matrix (phase tables, covariance-style summaries).
pub type RMat = faer::Mat<f64>;

pub use error::{Error, Result};
