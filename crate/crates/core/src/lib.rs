//! Finite-dimensional signature calculus.
//!
//! The crate models Hilbert–Poincaré complexes (graded inner-product spaces
//! with a differential `d` and a self-adjoint, degree-reversing duality `S`)
//! and the index data built from them:
//!
//! * [`hpc`]: the complex data model, axiom validation, direct sums,
//!   metric rescaling and orientation reversal.
//! * [`spectral`]: a Hermitian eigensolver and the functional calculus on top
//!   of it (positive projections, fractional powers, invertibility
//!   certificates).
//! * [`simplicial`]: oriented closed triangulations, their cochain complexes,
//!   cap-product duality, the cup-product intersection form and harmonic
//!   reduction.
//! * [`signature`]: index representatives: the even signature
//!   `rank P₊(D+S) − rank P₊(D−S)`, the odd invertible `(D+S)(D−S)⁻¹`, and
//!   sampled rescaled-metric schedules.
//! * [`products`]: graded tensor products with their sign rule and the
//!   product witnesses.
//! * [`rho`]: homotopy equivalences, the six-segment duality path and rho
//!   certificates.
//! * [`family`]: complexes of local systems over a simplicial base.
//! * [`coarse`]: supports and propagation of operators on finite metric
//!   spaces.
//!
//! All operator algebra is over the complex numbers.

pub mod coarse;
pub mod error;
pub mod family;
pub mod fixtures;
pub mod hpc;
pub mod io;
pub mod linalg;
pub mod products;
pub mod rho;
pub mod signature;
pub mod simplicial;
pub mod spectral;
pub mod tolerance;

pub use error::{Error, Result};
pub use hpc::{AxiomReport, GradedSpace, HPComplex, Tier};
pub use linalg::{CMat, C64};
pub use tolerance::Tolerances;
