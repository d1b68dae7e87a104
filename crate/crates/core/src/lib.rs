//! Convex bodies described by their support functions, quermassintegrals
//! computed from the integral representation over the unit sphere, and
//! numerical verifiers for the Brunn–Minkowski inequalities for
//! quermassintegrals and the weighted Poincaré inequalities they imply.
//!
//! The crate is organised bottom-up:
//!
//! * [`symmfunc`]: elementary symmetric functions and k-cofactor matrices.
//! * [`sphere`]: quadrature rules on the sphere, scalar fields and their
//!   covariant derivatives through homogeneous extensions.
//! * [`body`]: support functions, Minkowski combinations, C²₊ certificates,
//!   Gauss map and radial function.
//! * [`quermass`]: quermassintegrals, the functionals `F_k` and their
//!   first and second variations.
//! * [`inequality`]: verifiers producing [`inequality::InequalityReport`]s.
//! * [`suite`]: configuration, spec files and report output used by the CLI.
//!
//! Per-node work runs on rayon when the `parallel` feature is enabled
//! (the default); node results are always gathered in node order and summed
//! sequentially, so both execution modes give bit-identical results.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod body;
pub mod error;
pub mod exec;
pub mod inequality;
pub mod quermass;
pub mod sphere;
pub mod suite;
pub mod symmfunc;

pub use body::{BodyCertificate, SupportFunction};
pub use error::{Error, Result};
pub use exec::Execution;
pub use inequality::{InequalityReport, Verdict};
pub use sphere::{QuadratureRule, SphereField};
pub use symmfunc::SymMatrix;
