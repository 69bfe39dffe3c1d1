//! Trajectory optimization with discrete logic constraints by sequential
//! convex programming with embedded homotopy over smoothed logic gates.
//!
//! The crate is organized bottom-up: [`quaternion`] and [`dynamics`] model
//! the chaser, [`smooth`] and [`continuation`] implement the gate smoothing
//! and its sharpness schedule, [`rendezvous`] assembles the problem instance,
//! and [`ptr`] solves it through the solver-neutral [`conic`] layer.

// `!(x > 0.0)` is used on purpose to reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod artifacts;
pub mod conic;
pub mod config;
pub mod continuation;
pub mod dynamics;
pub mod ptr;
pub mod quaternion;
pub mod rendezvous;
pub mod scenario;
pub mod smooth;
pub mod trajectory;
pub mod verify;
