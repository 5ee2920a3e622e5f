//! Self-contained LP and SDP solvers consumed by the relaxation layer.

pub mod lp;
pub mod sdp;
