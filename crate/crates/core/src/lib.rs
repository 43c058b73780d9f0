//! Deterministic quantum-trajectory laws on configuration space.
//!
//! Three velocity laws built from real stationary states (the principal-frame
//! law, its logarithmic variant and the per-coordinate flat law) sit beside
//! a two-vector model whose hidden variables include a set of Euler angles.
//! The [`diagnostics`] module turns their structural properties (particle
//! coupling, admissible domains, flow conservation, ensemble statistics) into
//! numerical verdicts.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::wrong_self_convention)]

pub mod error;
pub mod geometry;
pub mod linalg;
pub mod quadrature;
pub mod states;
pub mod eigenframe;
pub mod dynamics;
pub mod rotor;
pub mod diagnostics;

pub use error::{Error, Result};
