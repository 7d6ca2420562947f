//! Non-local curvature flows driven by oscillation energies.
//!
//! The flow is computed by minimizing movements: each time step solves a
//! binary energy minimization by min-cut (one cut per level of the field),
//! and the result is redistanced by fast marching. Analytic ball solutions
//! and Hamiltonian evaluators provide the reference values.

// `!(a < b)` rejects NaN on purpose; index loops walk several parallel arrays.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod check;
pub mod curvature;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod fastmarch;
pub mod grid;
pub mod levels;
pub mod maxflow;
pub mod oracle;
pub mod pgm;
pub mod profile;
pub mod scheme;

pub use error::{Error, Result};
pub use grid::{
    make_discrete_ball, window_at, BinarySet, Boundary, Cell, DiscreteBall, Grid2D, ScalarField,
};
pub use profile::{make_trapezoid_profile, QuadNode, WeightProfile};
