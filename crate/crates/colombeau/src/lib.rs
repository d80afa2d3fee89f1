//! Numerical laboratory for diffeomorphism-invariant algebras of
//! generalized functions.
//!
//! The crate builds moment-vanishing mollifiers, embeds distributions as
//! evaluatable representatives, runs asymptotic moderateness and
//! negligibility tests over epsilon ladders, applies diffeomorphisms to
//! test objects and representatives, reproduces a set of exact
//! counterexample fixtures, and solves two regularized differential
//! equations (a delta-forced ODE and a semilinear wave equation).

pub mod algebra;
pub mod apps;
pub mod asymptotics;
pub mod diffeo;
pub mod error;
pub mod fixtures;
pub mod formalism;
pub mod numerics;
pub mod testobjects;

pub use error::{Error, Result};
pub use numerics::{BoundingBox, MultiIndex, SampledFunction};

// evaluation values are complex; downstream crates need the same type
pub use num_complex;
