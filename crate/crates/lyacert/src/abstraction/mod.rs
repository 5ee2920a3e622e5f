//! Sound over-approximations: trig/sign/abs/mod intrinsics, IEEE-754
//! floating-point rounding envelopes, the constructive piecewise-affine to
//! MILM encoder, and graph invariant-set strengthening.

pub mod float;
pub mod modulo;
pub mod nonlinear;
pub mod propagate;
pub mod pwa;

pub use float::{FloatFormat, F32, F64};
pub use modulo::abstract_mod;
pub use nonlinear::{abstract_nonlinearity, Fragment, Kind, Order};
pub use propagate::propagate_invariants;
pub use pwa::{pwa_to_milm, PwaFunction, PwaPiece};
