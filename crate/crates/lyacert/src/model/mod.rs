//! Core dynamical-system representations of programs, the concrete-semantics
//! simulator used as a soundness oracle, and graph reduction/cycle analysis.

pub mod cycles;
pub mod reduce;
pub mod semialg;
pub mod simulate;
pub mod types;

pub use cycles::{enumerate_simple_cycles, Cycle};
pub use reduce::{reduce_graph, ReduceError};
pub use semialg::{AffExpr, QuadExpr, SemialgebraicSet};
pub use simulate::{
    graph_admits_step, sample_init, simulate_graph, simulate_milm, UncertaintyPolicy,
};
pub use types::*;
