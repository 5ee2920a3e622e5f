//! Core dynamical-system representations: graph models, mixed-integer linear
//! models, and the hybrid form where graph edges carry MILM blocks.

use super::semialg::SemialgebraicSet;
use crate::rat::{fmt_rat, Rat};
use crate::rlinalg::RMat;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

pub type NodeId = usize;

/// Discrete location plus continuous program variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateVec {
    pub node: NodeId,
    pub x: Vec<Rat>,
}

/// Affine update x+ = A x + B w + C v + E with w in [-1,1]^n_w and binary
/// selectors v in {-1,1}^n_v, plus a constraint set over (x, w, v) coupling
/// them (used by abstractions of nonlinear intrinsics).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitionLabel {
    pub a: RMat,
    pub b: RMat,
    pub c: RMat,
    pub e: Vec<Rat>,
    /// over (x, w, v) stacked in that order; universal when absent
    pub constraint: SemialgebraicSet,
}

impl TransitionLabel {
    pub fn identity(n: usize) -> Self {
        TransitionLabel {
            a: RMat::eye(n),
            b: RMat::zeros(n, 0),
            c: RMat::zeros(n, 0),
            e: vec![Rat::zero(); n],
            constraint: SemialgebraicSet::universal(n),
        }
    }

    pub fn deterministic(a: RMat, e: Vec<Rat>) -> Self {
        let n = a.r;
        TransitionLabel {
            a,
            b: RMat::zeros(n, 0),
            c: RMat::zeros(n, 0),
            e,
            constraint: SemialgebraicSet::universal(n),
        }
    }

    pub fn n(&self) -> usize {
        self.a.r
    }

    pub fn n_w(&self) -> usize {
        self.b.c
    }

    pub fn n_v(&self) -> usize {
        self.c.c
    }

    pub fn is_deterministic(&self) -> bool {
        self.n_w() == 0 && self.n_v() == 0
    }

    pub fn apply(&self, x: &[Rat], w: &[Rat], v: &[Rat]) -> Vec<Rat> {
        assert_eq!(w.len(), self.n_w());
        assert_eq!(v.len(), self.n_v());
        let mut out = self.a.matvec(x);
        if self.n_w() > 0 {
            for (o, val) in out.iter_mut().zip(self.b.matvec(w)) {
                *o += val;
            }
        }
        if self.n_v() > 0 {
            for (o, val) in out.iter_mut().zip(self.c.matvec(v)) {
                *o += val;
            }
        }
        for (o, val) in out.iter_mut().zip(&self.e) {
            *o += val;
        }
        out
    }
}

/// An (F, H) block giving set-valued successors
/// { F [x;w;v;1] : H [x;w;v;1] = 0, w in box, v in {-1,1}^n_v }.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MilmBlock {
    pub f: RMat,
    pub h: RMat,
    pub n: usize,
    pub n_w: usize,
    pub n_v: usize,
}

impl MilmBlock {
    pub fn n_e(&self) -> usize {
        self.n + self.n_w + self.n_v + 1
    }

    pub fn extended(&self, x: &[Rat], w: &[Rat], v: &[Rat]) -> Vec<Rat> {
        let mut xe = Vec::with_capacity(self.n_e());
        xe.extend_from_slice(x);
        xe.extend_from_slice(w);
        xe.extend_from_slice(v);
        xe.push(Rat::one());
        xe
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum EdgeLabel {
    Affine(TransitionLabel),
    Milm(MilmBlock),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: NodeId,
    pub to: NodeId,
    /// dense 1.. index among parallel edges from `from` to `to`
    pub k: usize,
    pub label: EdgeLabel,
    /// passport: transition fires only when the state satisfies it (over x)
    pub passport: SemialgebraicSet,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphModel {
    pub vars: Vec<String>,
    /// physical scale M mapping model units onto program units
    pub scale: Rat,
    pub node_names: Vec<String>,
    pub start: NodeId,
    pub terminal: NodeId,
    pub edges: Vec<Edge>,
    /// per-node invariant sets over x; entry `start` is the initial set
    pub invariants: Vec<SemialgebraicSet>,
    /// per-node unsafe sets over x (each entry is a list of disjuncts: the
    /// unsafe region is their union, certified piece by piece)
    pub unsafe_sets: Vec<Vec<SemialgebraicSet>>,
    /// per-variable overflow limits (diagonal alpha, positive)
    pub overflow: Option<Vec<Rat>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("node `{0}` is not part of the model")]
    UnknownNode(String),
    #[error("variable `{0}` is not part of the model")]
    UnknownVar(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0}")]
    Invalid(String),
}

impl GraphModel {
    pub fn n(&self) -> usize {
        self.vars.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn node(&self, name: &str) -> Result<NodeId, ModelError> {
        self.node_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ModelError::UnknownNode(name.to_string()))
    }

    pub fn var(&self, name: &str) -> Result<usize, ModelError> {
        self.vars
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| ModelError::UnknownVar(name.to_string()))
    }

    pub fn init_set(&self) -> &SemialgebraicSet {
        &self.invariants[self.start]
    }

    pub fn outgoing(&self, i: NodeId) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.from == i)
    }

    pub fn incoming(&self, i: NodeId) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(move |(_, e)| e.to == i)
    }

    /// Structural checks: edge endpoints, invariant dimensions, only the
    /// identity self-transition at the terminal node, positive overflow
    /// limits, dense k-indexing.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n();
        let nodes = self.num_nodes();
        if self.start >= nodes || self.terminal >= nodes {
            return Err(ModelError::Invalid("start/terminal out of range".into()));
        }
        if self.invariants.len() != nodes || self.unsafe_sets.len() != nodes {
            return Err(ModelError::Dimension(
                "one invariant and unsafe entry per node required".into(),
            ));
        }
        for inv in &self.invariants {
            if inv.dim != n {
                return Err(ModelError::Dimension("invariant set dimension != n".into()));
            }
        }
        if let Some(alpha) = &self.overflow {
            if alpha.len() != n {
                return Err(ModelError::Dimension("overflow limits length != n".into()));
            }
            if alpha.iter().any(|a| !a.is_positive()) {
                return Err(ModelError::Invalid("overflow limits must be positive".into()));
            }
        }
        for e in &self.edges {
            if e.from >= nodes || e.to >= nodes {
                return Err(ModelError::Invalid("edge endpoint out of range".into()));
            }
            if e.passport.dim != n {
                return Err(ModelError::Dimension("passport dimension != n".into()));
            }
            match &e.label {
                EdgeLabel::Affine(t) => {
                    if t.n() != n || t.a.c != n || t.e.len() != n || t.b.r != n || t.c.r != n {
                        return Err(ModelError::Dimension("transition label shape".into()));
                    }
                    if t.constraint.dim != n + t.n_w() + t.n_v() {
                        return Err(ModelError::Dimension(
                            "transition constraint set dimension".into(),
                        ));
                    }
                    if e.from == self.terminal {
                        let ident = t.is_deterministic()
                            && t.a == RMat::eye(n)
                            && t.e.iter().all(|v| v.is_zero())
                            && e.to == self.terminal;
                        if !ident {
                            return Err(ModelError::Invalid(
                                "only the identity self-transition is allowed at the terminal node"
                                    .into(),
                            ));
                        }
                    }
                }
                EdgeLabel::Milm(m) => {
                    if m.n != n {
                        return Err(ModelError::Dimension("MILM block n != model n".into()));
                    }
                    if m.f.c != m.n_e() || m.h.c != m.n_e() || m.f.r != n {
                        return Err(ModelError::Dimension(
                            "MILM block column counts must equal n_e".into(),
                        ));
                    }
                    if e.from == self.terminal {
                        return Err(ModelError::Invalid(
                            "terminal node cannot carry MILM self-dynamics".into(),
                        ));
                    }
                }
            }
        }
        // k dense per (from, to)
        let mut groups: std::collections::BTreeMap<(NodeId, NodeId), Vec<usize>> =
            std::collections::BTreeMap::new();
        for e in &self.edges {
            groups.entry((e.from, e.to)).or_default().push(e.k);
        }
        for ((f, t), mut ks) in groups {
            ks.sort_unstable();
            if ks.iter().enumerate().any(|(i, &k)| k != i + 1) {
                return Err(ModelError::Invalid(format!(
                    "parallel edge indices between {} and {} must be dense 1..",
                    self.node_names[f], self.node_names[t]
                )));
            }
        }
        Ok(())
    }

    /// Textual summary used by reports.
    pub fn summary(&self) -> String {
        format!(
            "{} nodes, {} edges, {} vars [{}], scale {}",
            self.num_nodes(),
            self.edges.len(),
            self.n(),
            self.vars.join(" "),
            fmt_rat(&self.scale),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum MilmInit {
    States(Vec<Vec<Rat>>),
    /// H0 rows over the same extended vector as H
    Polytope(RMat),
}

/// Stand-alone mixed-integer linear model S(F, H, X0 or H0, n, n_w, n_v).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Milm {
    pub vars: Vec<String>,
    pub block: MilmBlock,
    pub init: MilmInit,
    pub scale: Rat,
}

impl Milm {
    pub fn validate(&self) -> Result<(), ModelError> {
        let b = &self.block;
        if self.vars.len() != b.n {
            return Err(ModelError::Dimension("vars length != n".into()));
        }
        if b.f.r != b.n || b.f.c != b.n_e() || b.h.c != b.n_e() {
            return Err(ModelError::Dimension(
                "F, H column counts must equal n_e = n + n_w + n_v + 1".into(),
            ));
        }
        match &self.init {
            MilmInit::States(xs) => {
                if xs.iter().any(|x| x.len() != b.n) {
                    return Err(ModelError::Dimension("initial state length != n".into()));
                }
            }
            MilmInit::Polytope(h0) => {
                if h0.c != b.n_e() {
                    return Err(ModelError::Dimension("H0 column count must equal n_e".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceStatus {
    ReachedTerminal,
    BudgetExhausted,
    UnsafeSetHit,
    Stuck,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trace {
    pub states: Vec<StateVec>,
    pub status: TraceStatus,
}
