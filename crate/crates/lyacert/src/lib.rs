//! Lyapunov-invariant verification of small imperative programs.
//!
//! Programs are modeled as discrete-time dynamical systems (graph models and
//! mixed-integer linear models), invariants are found by LP/SDP/SOS
//! feasibility, and the results are emitted as independently re-checkable
//! certificates of unreachability (overflow, division by zero, assertions,
//! dead code) and finite-time termination with explicit iteration bounds.

pub mod rat;
pub mod linalg;
pub mod rlinalg;
pub mod abstraction;
pub mod casestudy;
pub mod certify;
pub mod frontend;
pub mod model;
pub mod pipeline;
pub mod relax;
pub mod solver;
