//! Elementary-circuit enumeration over the model multigraph (Johnson-style
//! blocked search, extended to parallel edges: each edge choice yields a
//! distinct cycle).

use super::types::{GraphModel, NodeId};

/// A cycle as an ordered list of edge triplets (from, to, k).
pub type Cycle = Vec<(NodeId, NodeId, usize)>;

pub fn enumerate_simple_cycles(model: &GraphModel) -> Vec<Cycle> {
    let n = model.num_nodes();
    // adjacency as edge indices, deterministically ordered
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order: Vec<usize> = (0..model.edges.len()).collect();
    order.sort_by_key(|&i| {
        let e = &model.edges[i];
        (e.from, e.to, e.k)
    });
    for i in order {
        adj[model.edges[i].from].push(i);
    }

    let mut cycles: Vec<Cycle> = Vec::new();
    for s in 0..n {
        let mut blocked = vec![false; n];
        let mut block_map: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        let mut path: Vec<usize> = Vec::new();
        circuit(
            s,
            s,
            model,
            &adj,
            &mut blocked,
            &mut block_map,
            &mut path,
            &mut cycles,
        );
    }
    cycles
}

fn unblock(v: NodeId, blocked: &mut [bool], block_map: &mut [Vec<NodeId>]) {
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        if blocked[u] {
            blocked[u] = false;
            stack.extend(block_map[u].drain(..));
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn circuit(
    v: NodeId,
    s: NodeId,
    model: &GraphModel,
    adj: &[Vec<usize>],
    blocked: &mut Vec<bool>,
    block_map: &mut Vec<Vec<NodeId>>,
    path: &mut Vec<usize>,
    cycles: &mut Vec<Cycle>,
) -> bool {
    let mut found = false;
    blocked[v] = true;
    for &ei in &adj[v] {
        let w = model.edges[ei].to;
        if w < s {
            continue; // circuits rooted at their minimal node
        }
        if w == s {
            let mut cyc: Cycle = path
                .iter()
                .map(|&pe| {
                    let e = &model.edges[pe];
                    (e.from, e.to, e.k)
                })
                .collect();
            let e = &model.edges[ei];
            cyc.push((e.from, e.to, e.k));
            cycles.push(cyc);
            found = true;
        } else if !blocked[w] {
            path.push(ei);
            if circuit(w, s, model, adj, blocked, block_map, path, cycles) {
                found = true;
            }
            path.pop();
        }
    }
    if found {
        unblock(v, blocked, block_map);
    } else {
        for &ei in &adj[v] {
            let w = model.edges[ei].to;
            if w >= s && !block_map[w].contains(&v) {
                block_map[w].push(v);
            }
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::semialg::SemialgebraicSet;
    use crate::model::types::*;
    use crate::rat::rat;

    fn toy_model(num_nodes: usize, arcs: &[(usize, usize, usize)]) -> GraphModel {
        GraphModel {
            vars: vec!["x".into()],
            scale: rat(1),
            node_names: (0..num_nodes).map(|i| format!("n{i}")).collect(),
            start: 0,
            terminal: num_nodes - 1,
            edges: arcs
                .iter()
                .map(|&(f, t, k)| Edge {
                    from: f,
                    to: t,
                    k,
                    label: EdgeLabel::Affine(TransitionLabel::identity(1)),
                    passport: SemialgebraicSet::universal(1),
                })
                .collect(),
            invariants: vec![SemialgebraicSet::universal(1); num_nodes],
            unsafe_sets: vec![Vec::new(); num_nodes],
            overflow: None,
        }
    }

    #[test]
    fn acyclic_chain_has_no_cycles() {
        let m = toy_model(3, &[(0, 1, 1), (1, 2, 1)]);
        assert!(enumerate_simple_cycles(&m).is_empty());
    }

    #[test]
    fn triangle_has_one_cycle() {
        let m = toy_model(4, &[(0, 1, 1), (1, 2, 1), (2, 0, 1)]);
        let cycles = enumerate_simple_cycles(&m);
        assert_eq!(cycles.len(), 1);
        assert_eq!(cycles[0].len(), 3);
    }

    #[test]
    fn parallel_self_loops_are_distinct() {
        let m = toy_model(3, &[(1, 1, 1), (1, 1, 2), (0, 1, 1)]);
        let cycles = enumerate_simple_cycles(&m);
        assert_eq!(cycles.len(), 2);
        assert!(cycles.iter().all(|c| c.len() == 1));
    }

    #[test]
    fn parallel_edges_multiply_cycles() {
        // two edges 0->1, two edges 1->0: 4 distinct 2-cycles
        let m = toy_model(3, &[(0, 1, 1), (0, 1, 2), (1, 0, 1), (1, 0, 2)]);
        let cycles = enumerate_simple_cycles(&m);
        assert_eq!(cycles.len(), 4);
    }
}
