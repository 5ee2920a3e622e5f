//! Assembly of the convex feasibility programs behind invariant search:
//! S-procedure LMIs for MILMs and quasi-linear graph models, and
//! degree-bounded sum-of-squares programs for polynomial graph models.

pub mod conic;
pub mod graph_lmi;
pub mod milm_lmi;
pub mod rates;
pub mod sos;

pub use conic::{ConicProblem, VarKind, VarRef};
pub use rates::RatePlan;
