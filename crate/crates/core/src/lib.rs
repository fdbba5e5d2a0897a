//! Padé approximation of formal power series and constructive universal
//! series.
//!
//! The crate is organised bottom-up: [`algebra`] holds the coefficient
//! arithmetic, [`pade`] the membership test and the approximants, [`sets`]
//! the sampled compact sets, [`construct`] the rational functions that are
//! their own Padé approximants, and [`builder`] the step-by-step universal
//! construction with replayable transcripts.

// `!(x < tol)` is used on purpose so that NaN fails every check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod builder;
pub mod construct;
pub mod error;
mod fit;
mod linalg;
pub mod pade;
pub mod sets;

pub use algebra::{FormalPowerSeries, Polynomial, RationalFunction, C64};
pub use error::{Error, Result};
pub use pade::{PadeApproximant, PadeOrder};
