//! Depth-weighted random trees.
//!
//! A depth-weighted tree grows one vertex at a time; the new vertex attaches
//! to an existing vertex `i` with probability proportional to `f(depth(i))`
//! for a positive weight function `f`. This crate provides:
//!
//! - [`weightfn`]: weight-function families evaluated in log space, and the
//!   derived scalars (geometric means, tail ratio sums, accumulation windows,
//!   regime classification).
//! - [`sim`]: the discrete attachment chain with optional exponential holding
//!   times, as a profile-only fast path and a full-tree path.
//! - [`branching`]: the continuous-time branching embedding and the
//!   exponential-ladder coupling used for super-exponential weights.
//! - [`analytics`]: closed-form expectations, accumulation detection, the
//!   covering walk, and exact moments of the ladder tails.
//! - [`harness`]: experiment grids, verification suites and result emission.

// NaN must fail parameter checks, so `!(x > 0.0)` is deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod branching;
pub mod error;
pub mod harness;
pub mod mass_index;
pub mod numeric;
pub mod rng;
pub mod sim;
pub mod weightfn;

pub use error::{DwtError, Result};
pub use weightfn::{Extrapolation, Family, WeightSpec};
