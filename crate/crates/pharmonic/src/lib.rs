//! Numerical toolkit for p-harmonic and tilted-norm operators near flat
//! boundaries: closed-form exponent calculus, sub/supersolution
//! classification with finite-difference oracles, laterally periodic slab
//! solvers, and the gap-series machinery behind boundary-limit
//! counterexamples.

pub mod aharm;
pub mod error;
pub mod exponents;
pub mod fd;
pub mod gapseries;
pub mod pde;
pub mod profile;

pub use error::{Error, Result};
