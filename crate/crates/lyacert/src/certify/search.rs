//! Round-based recursive invariant search: each round proves linear
//! sign/lower-bound properties by exact per-edge Farkas feasibility, appends
//! them to the node invariant sets, and repeats until nothing new is proven.

use crate::model::semialg::{AffExpr, SemialgebraicSet};
use crate::model::types::{EdgeLabel, GraphModel, NodeId, TransitionLabel};
use crate::rat::{fmt_rat, rat, Rat};
use crate::relax::rates::RatePlan;
use crate::rlinalg::RMat;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProvenProperty {
    /// node the property is claimed at
    pub node: String,
    /// human-readable form, e.g. `Y >= 1`
    pub display: String,
    /// the invariant sigma = bound - x (or x - bound) with sigma <= 0 claimed
    pub sigma: AffExpr,
    /// per-edge rates that verified it
    pub rates: RatePlan,
    pub round: usize,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    /// properties per round (1-based rounds)
    pub rounds: Vec<Vec<ProvenProperty>>,
    /// the strengthened model
    pub model: GraphModel,
}

#[derive(Clone, Debug)]
pub struct SearchSchedule {
    /// node the candidate properties are claimed at
    pub at: NodeId,
    /// candidate lower bounds per variable, strongest first (e.g. [1, 0])
    pub lower_bounds: Vec<Rat>,
    /// candidate upper bounds per variable (e.g. [M]); empty to skip
    pub upper_bounds: Vec<Rat>,
    /// theta grid per non-start edge, tried in order
    pub theta_grid: Vec<Rat>,
    /// mu grid, tried in order (largest first gives the strongest report)
    pub mu_grid: Vec<Rat>,
    pub max_rounds: usize,
}

impl SearchSchedule {
    pub fn rounds_default(at: NodeId) -> Self {
        SearchSchedule {
            at,
            lower_bounds: vec![Rat::one(), Rat::zero()],
            upper_bounds: Vec::new(),
            theta_grid: vec![Rat::one(), Rat::zero()],
            mu_grid: vec![Rat::one(), Rat::zero()],
            max_rounds: 8,
        }
    }
}

/// The linear relaxation of an edge's pre-state relation over (x, w, v with
/// binaries boxed), plus the affine map to the successor state.
pub struct EdgeRelation {
    pub dim: usize,
    pub set: SemialgebraicSet,
    /// stacked [A | B | C] and offset E
    pub map: RMat,
    pub offset: Vec<Rat>,
}

pub fn edge_relation(model: &GraphModel, edge_idx: usize) -> Option<EdgeRelation> {
    let edge = &model.edges[edge_idx];
    let EdgeLabel::Affine(t) = &edge.label else { return None };
    let n = model.n();
    let dim = n + t.n_w() + t.n_v();
    let mut set = model.invariants[edge.from].embed(dim, 0);
    set.conjoin(&edge.passport.embed(dim, 0));
    if !t.constraint.is_universal() {
        set.conjoin(&t.constraint);
    }
    for j in 0..(t.n_w() + t.n_v()) {
        let mut up = AffExpr::zero(dim);
        up.coeffs[n + j] = rat(-1);
        up.constant = Rat::one();
        let mut dn = AffExpr::zero(dim);
        dn.coeffs[n + j] = Rat::one();
        dn.constant = Rat::one();
        set.lin_ineq.push(up);
        set.lin_ineq.push(dn);
    }
    set.dedup();
    Some(EdgeRelation { dim, set, map: stacked(t), offset: t.e.clone() })
}

fn stacked(t: &TransitionLabel) -> RMat {
    let n = t.n();
    let total = n + t.n_w() + t.n_v();
    let mut m = RMat::zeros(n, total);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = t.a[(i, j)].clone();
        }
        for j in 0..t.n_w() {
            m[(i, n + j)] = t.b[(i, j)].clone();
        }
        for j in 0..t.n_v() {
            m[(i, n + t.n_w() + j)] = t.c[(i, j)].clone();
        }
    }
    m
}

/// Exact per-edge check of the node-wise invariance condition for a fixed
/// affine sigma family: -sigma_to(T(x,w)) + theta sigma_from(x) - mu >= 0 on
/// the edge relation. Returns a rate plan when every edge verifies.
pub fn verify_affine_family(
    model: &GraphModel,
    sigma: &[Option<AffExpr>],
    theta_grid: &[Rat],
    mu_grid: &[Rat],
) -> Option<RatePlan> {
    let n = model.n();
    let mut plan = RatePlan::default();
    for (ei, edge) in model.edges.iter().enumerate() {
        let rel = edge_relation(model, ei)?;
        if !rel.set.lin_feasible() {
            // the edge can never fire; any rates hold
            plan.set(edge.from, edge.to, edge.k, Rat::zero(), Rat::zero());
            continue;
        }
        let sig_to = sigma[edge.to].clone().unwrap_or_else(|| AffExpr::zero(n));
        let sig_from = sigma[edge.from].clone().unwrap_or_else(|| AffExpr::zero(n));
        // -sigma_to composed with the edge map, over (x, w, v)
        let comp = sig_to.pullback(&rel.map, &rel.offset).neg();
        let from_embedded = sig_from.embed(rel.dim, 0);
        let thetas: &[Rat] = if edge.from == model.start { &[Rat::zero()] } else { theta_grid };
        let mut found = false;
        'grid: for th in thetas {
            for mu in mu_grid {
                let mut target = comp.add(&from_embedded.scaled(th));
                target.constant = &target.constant - mu;
                if rel.set.implies_nonneg(&target) {
                    plan.set(edge.from, edge.to, edge.k, th.clone(), mu.clone());
                    found = true;
                    break 'grid;
                }
            }
        }
        if !found {
            return None;
        }
    }
    Some(plan)
}

/// Round-based search for single-variable bounds at the scheduled node.
pub fn recursive_search(model: &GraphModel, schedule: &SearchSchedule) -> SearchOutcome {
    let n = model.n();
    let mut work = model.clone();
    let mut rounds: Vec<Vec<ProvenProperty>> = Vec::new();
    // strongest proven bound per variable so far (lower, upper)
    let mut best_lower: Vec<Option<Rat>> = vec![None; n];
    let mut best_upper: Vec<Option<Rat>> = vec![None; n];
    for round in 1..=schedule.max_rounds {
        let mut proven_now: Vec<ProvenProperty> = Vec::new();
        for var in 0..n {
            // lower bounds: sigma = b - x_var <= 0 means x_var >= b
            for b in &schedule.lower_bounds {
                if best_lower[var].as_ref().is_some_and(|cur| cur >= b) {
                    break;
                }
                let mut sig = AffExpr::var(n, var).neg();
                sig.constant = b.clone();
                if let Some(plan) = try_candidate(&work, schedule, &sig) {
                    best_lower[var] = Some(b.clone());
                    proven_now.push(ProvenProperty {
                        node: work.node_names[schedule.at].clone(),
                        display: format!("{} >= {}", work.vars[var], fmt_rat(b)),
                        sigma: sig,
                        rates: plan,
                        round,
                    });
                    break;
                }
            }
            // upper bounds: sigma = x_var - b <= 0 means x_var <= b
            for b in &schedule.upper_bounds {
                if best_upper[var].as_ref().is_some_and(|cur| cur <= b) {
                    break;
                }
                let mut sig = AffExpr::var(n, var);
                sig.constant = -b.clone();
                if let Some(plan) = try_candidate(&work, schedule, &sig) {
                    best_upper[var] = Some(b.clone());
                    proven_now.push(ProvenProperty {
                        node: work.node_names[schedule.at].clone(),
                        display: format!("{} <= {}", work.vars[var], fmt_rat(b)),
                        sigma: sig,
                        rates: plan,
                        round,
                    });
                    break;
                }
            }
        }
        if proven_now.is_empty() {
            break;
        }
        // append the proven properties to the claimed node's invariant set
        for p in &proven_now {
            work.invariants[schedule.at].lin_ineq.push(p.sigma.neg());
        }
        work.invariants[schedule.at].dedup();
        rounds.push(proven_now);
    }
    SearchOutcome { rounds, model: work }
}

fn try_candidate(
    model: &GraphModel,
    schedule: &SearchSchedule,
    sig: &AffExpr,
) -> Option<RatePlan> {
    let mut sigma: Vec<Option<AffExpr>> = vec![None; model.num_nodes()];
    sigma[schedule.at] = Some(sig.clone());
    verify_affine_family(model, &sigma, &schedule.theta_grid, &schedule.mu_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::types::*;

    /// start -> a (x := 5), a -> a (x := x + 1)
    fn counter_model() -> GraphModel {
        let n = 1;
        let set_five = TransitionLabel::deterministic(RMat::zeros(1, 1), vec![rat(5)]);
        let inc = TransitionLabel::deterministic(RMat::eye(1), vec![rat(1)]);
        GraphModel {
            vars: vec!["x".into()],
            scale: rat(1),
            node_names: vec!["s".into(), "a".into(), "t".into()],
            start: 0,
            terminal: 2,
            edges: vec![
                Edge {
                    from: 0,
                    to: 1,
                    k: 1,
                    label: EdgeLabel::Affine(set_five),
                    passport: SemialgebraicSet::universal(n),
                },
                Edge {
                    from: 1,
                    to: 1,
                    k: 1,
                    label: EdgeLabel::Affine(inc),
                    passport: SemialgebraicSet::universal(n),
                },
            ],
            invariants: vec![SemialgebraicSet::universal(n); 3],
            unsafe_sets: vec![Vec::new(); 3],
            overflow: None,
        }
    }

    #[test]
    fn proves_lower_bound_on_counter() {
        let model = counter_model();
        let mut schedule = SearchSchedule::rounds_default(1);
        schedule.lower_bounds = vec![rat(5), rat(1), rat(0)];
        let out = recursive_search(&model, &schedule);
        assert_eq!(out.rounds.len(), 1);
        assert_eq!(out.rounds[0].len(), 1);
        assert_eq!(out.rounds[0][0].display, "x >= 5");
        // appended to the model
        assert!(!out.model.invariants[1].lin_ineq.is_empty());
    }

    #[test]
    fn no_feasible_invariant_ends_after_first_round() {
        // x := x - 1 unbounded below: no lower bound holds
        let mut model = counter_model();
        let EdgeLabel::Affine(t) = &mut model.edges[1].label else { panic!() };
        t.e = vec![rat(-1)];
        let mut schedule = SearchSchedule::rounds_default(1);
        schedule.lower_bounds = vec![rat(0)];
        let out = recursive_search(&model, &schedule);
        assert!(out.rounds.is_empty());
    }
}
