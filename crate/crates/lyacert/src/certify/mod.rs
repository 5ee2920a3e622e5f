//! From solver output to verdicts: independent certificate re-verification,
//! separating-manifold conclusions, termination bounds, and the round-based
//! recursive invariant search.

pub mod certificate;
pub mod check;
pub mod conclude;
pub mod ftt;
pub mod search;

pub use certificate::{Assembly, Certificate, PolyData, Provenance, SosNonnegCond};
pub use check::{check_certificate, check_certificate_milm, check_values_exact, CheckReport};
pub use conclude::{conclude_unreachability, Property, Verdict, VerdictStatus};
pub use ftt::{cycle_bounds, termination_bound};
pub use search::{recursive_search, SearchOutcome, SearchSchedule};
