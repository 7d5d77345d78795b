//! Moment-matched rescaling of the fast diffusion equation
//! `dv/dtau = div(v grad v^{m-1})`, `0 < m < 1`.
//!
//! * [`exponents`]: critical exponents, Barenblatt constants and rate tables.
//! * [`barenblatt`]: the profiles `B_sigma` and the self-similar comparator.
//! * [`spectral`]: spectrum of the linearized operator, Hardy-Poincare
//!   constants and a constrained Rayleigh-quotient verifier.
//! * [`dynamics`]: conservative implicit solver for the rescaled flow.
//! * [`diagnostics`]: entropy, Fisher information, bounds and rate fits.
//! * [`harness`]: configuration, experiment drivers and the acceptance suite.

// `!(a > b)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barenblatt;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod exponents;
pub mod harness;
pub mod spectral;

pub use error::{Error, Result};
pub use exponents::{Branch, ModelParams};
