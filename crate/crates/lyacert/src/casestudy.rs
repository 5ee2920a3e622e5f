//! Bundled case-study models and end-to-end drivers: integer division, the
//! turn-rate program with a division guard, Euclidean division (rounds,
//! termination, boundedness, and the mixed-integer hybrid variant), and the
//! two-stage IIR filter with float semantics.

use crate::abstraction::propagate_invariants;
use crate::frontend::compile::{compile_source, CompileOpts, Compiled};
use crate::frontend::format::{parse_model, LoadOpts, LoadedModel};
use crate::frontend::lower::FloatSemantics;
use crate::model::reduce::reduce_graph;
use crate::model::types::{Edge, EdgeLabel, GraphModel, MilmBlock, NodeId};
use crate::rat::{rat, Rat};
use crate::rlinalg::RMat;
use num::{One, Zero};

/// Program text: integer division (the while-loop quotient/remainder
/// routine).
pub fn division_source() -> String {
    r#"
int dd = [-32768, 32767];
int dr = [-32768, 32767];
F1: int q = 0;
    int r = dd;
F2: while (r >= dr) {
F3:   q = q + 1;
F4:   r = r - dr;
}
Fx: return r;
"#
    .to_string()
}

/// Program text: greatest common divisor by repeated division, two functions
/// with the division routine called from the main loop.
pub fn euclid_source(m: i64) -> String {
    format!(
        r#"
int X = [1, {m}];
int Y = [1, {m}];

fn IntegerDivision(dd, dr) {{
  F1: int q = 0;
      int r = dd;
  F2: while (r >= dr) {{
  F3:   q = q + 1;
  F4:   r = r - dr;
  }}
  Fx: return r;
}}

L1: int rem = 0;
L2: while (Y > 0) {{
L3:   rem = IntegerDivision(X, Y);
L4:   X = Y;
L5:   Y = rem;
}}
Lx: return X;
"#
    )
}

/// Program text: turn-rate computation with a sine intrinsic and a division
/// whose divisor is proven nonzero.
pub fn turnrate_source() -> String {
    r#"
real x;
real y;
real TurnRate;
L1: while (true) {
L2:   y = input(-1000000, 1000000);
L3:   x = (5 * sin(y) + 1) / 3;
L4:   if (x > -1) {
L5:     x = x + 1.0472;
L6:     TurnRate = y / x;
L7:   } else {
L8:     TurnRate = 100 * y / 3.1416;
      }
}
"#
    .to_string()
}

/// The single-variable abstraction of the turn-rate program used for the
/// division-by-zero analysis: only x is tracked, the sine collapses to its
/// bounded range, and the initial set is unconstrained.
pub const TURNRATE_ABSTRACT_GM: &str = r#"
model v1
vars x
scale 1
nodes L0 L1 L4 L5 L6 L8 Lx
start L0
terminal Lx
edge L0 -> L1 k 1 {
}
edge L1 -> Lx k 1 {
  guard never
}
edge L1 -> L4 k 1 {
  uncertainty w1
  update x' = 1/3 + 5/3*w1
}
edge L4 -> L5 k 1 {
  guard x >= -1
}
edge L5 -> L6 k 1 {
  update x' = x + 1309/1250
}
edge L6 -> L1 k 1 {
}
edge L4 -> L8 k 1 {
  guard x <= -1
}
edge L8 -> L1 k 1 {
}
"#;

/// The two-stage filter: state (Z, Y, E0, E1, S0, S1, v) with the boolean
/// initialization flag modeled as a binary state variable. `b` is the
/// real-time input gain on the main-loop update.
pub fn filter_gm(b: i64) -> String {
    let l4 = if b == 0 {
        "  update Z' = 9/10*Z + 35".to_string()
    } else {
        format!("  uncertainty w1\n  update Z' = 9/10*Z + 35 + {b}*w1")
    };
    format!(
        r#"
model v1
vars Z Y E0 E1 S0 S1 v:bool
scale 1
nodes L0 L1 L3 L4 L5 L6 Lx F0 F2 F3 F6 F7 F9 F13
start L0
terminal Lx
init Z == 0 && Y == 0 && E0 == 0 && E1 == 0 && S0 == 0 && S1 == 0 && v == 1
edge L0 -> L1 k 1 {{
}}
edge L1 -> L3 k 1 {{
  update Z' = 1/5*Z + 5
  update v' = 1
}}
edge L3 -> L4 k 1 {{
}}
edge L3 -> Lx k 1 {{
  guard never
}}
edge L4 -> L5 k 1 {{
{l4}
}}
edge L5 -> F0 k 1 {{
}}
edge F0 -> F2 k 1 {{
}}
edge F2 -> F3 k 1 {{
  guard v == 1
}}
edge F2 -> F6 k 1 {{
  guard v == -1
}}
edge F3 -> F9 k 1 {{
  update Y' = Z
  update E0' = Z
  update S0' = Z
}}
edge F6 -> F7 k 1 {{
}}
edge F7 -> F9 k 1 {{
  update Y' = 1/2*Z - 7/10*E0 + 2/5*E1 + 3/2*S0 - 7/10*S1
}}
edge F9 -> F13 k 1 {{
  update E1' = E0
  update E0' = Z
  update S1' = S0
  update S0' = Y
}}
edge F13 -> L6 k 1 {{
}}
edge L6 -> L3 k 1 {{
  update v' = -1
}}
"#
    )
}

/// nodes eliminated to obtain the three-node reduced division model
pub const EUCLID_ELIMINATE: [&str; 10] =
    ["Fx", "L4", "L5", "L3", "F0", "F1", "F3", "F4", "L1", "L2"];

pub fn compile_euclid(m: i64) -> Result<Compiled, String> {
    compile_source(&euclid_source(m), &CompileOpts { scale: rat(m), ..Default::default() })
        .map_err(|e| e.to_string())
}

/// The reduced three-node model. With `with_equalities` the full graph is
/// strengthened first (assignment equalities spread over their inductive
/// regions), which lands dd = X and dr = Y on the loop head.
pub fn euclid_reduced(m: i64, with_equalities: bool) -> Result<GraphModel, String> {
    let compiled = compile_euclid(m)?;
    let model = if with_equalities {
        propagate_invariants(&compiled.model, 2)
    } else {
        compiled.model
    };
    let ids: Result<Vec<NodeId>, _> = EUCLID_ELIMINATE.iter().map(|n| model.node(n)).collect();
    reduce_graph(&model, &ids.map_err(|e| e.to_string())?).map_err(|e| e.to_string())
}

/// Interval slack rows: e in [lo, hi] becomes
/// 2 e - (hi + lo) - (hi - lo) w = 0 with a fresh w in [-1, 1] (degenerate
/// intervals become plain equalities).
struct MilmRows {
    n: usize,
    rows: Vec<(Vec<Rat>, Rat, Vec<Rat>)>, // (x coeffs, const, w coeffs)
}

impl MilmRows {
    fn new(n: usize) -> Self {
        MilmRows { n, rows: Vec::new() }
    }

    fn n_w(&self) -> usize {
        self.rows.iter().map(|(_, _, w)| w.len()).max().unwrap_or(0)
    }

    fn push_eq(&mut self, coeffs: Vec<Rat>, konst: Rat) {
        self.rows.push((coeffs, konst, Vec::new()));
    }

    fn push_interval(&mut self, coeffs: Vec<Rat>, konst: Rat, lo: Rat, hi: Rat) {
        if lo == hi {
            self.push_eq(coeffs, konst - lo);
            return;
        }
        let two = rat(2);
        let scaled: Vec<Rat> = coeffs.iter().map(|c| c * &two).collect();
        let mut wcol = vec![Rat::zero(); self.n_w()];
        wcol.push(-(hi.clone() - lo.clone()));
        self.rows.push((scaled, konst * two - (hi + lo), wcol));
    }

    fn to_mat(&self, n_w: usize) -> RMat {
        let n_e = self.n + n_w + 1;
        let mut m = RMat::zeros(self.rows.len(), n_e);
        for (r, (coeffs, konst, wcols)) in self.rows.iter().enumerate() {
            for (i, c) in coeffs.iter().enumerate() {
                m[(r, i)] = c.clone();
            }
            for (i, w) in wcols.iter().enumerate() {
                m[(r, self.n + i)] = w.clone();
            }
            m[(r, n_e - 1)] = konst.clone();
        }
        m
    }
}

/// Builds the mixed-integer hybrid variant of the reduced division model:
/// the same three nodes, with each edge's transition, passport and
/// source-node facts encoded as an (F, H) block over the state scaled into
/// [-1, 1] by M. The H rows carry per-variable ranges at the source node,
/// the loop-head equalities, and the guard expressions with
/// interval-tightened slack ranges.
pub fn euclid_milghm(m: i64) -> Result<GraphModel, String> {
    let reduced = euclid_reduced(m, true)?;
    let n = reduced.n();
    let minv = Rat::one() / rat(m);
    let one = Rat::one();
    let var = |name: &str| reduced.var(name).map_err(|e| e.to_string());
    let (ix, iy, irem, idd, idr, iq, ir) = (
        var("X")?,
        var("Y")?,
        var("rem")?,
        var("dd")?,
        var("dr")?,
        var("q")?,
        var("r")?,
    );
    // per-variable scaled ranges at each node (loop-head facts come from the
    // propagated equalities and the linear rounds)
    let ranges_at = |node: &str| -> Vec<(Rat, Rat)> {
        let mut r = vec![(Rat::zero(), one.clone()); n];
        match node {
            "L0" => {
                for v in [irem, idd, idr, iq, ir] {
                    r[v] = (Rat::zero(), Rat::zero());
                }
                for v in [ix, iy] {
                    r[v] = (minv.clone(), one.clone());
                }
            }
            _ => {
                for v in [ix, iy, idd, idr] {
                    r[v] = (minv.clone(), one.clone());
                }
                for v in [irem, iq, ir] {
                    r[v] = (Rat::zero(), one.clone());
                }
            }
        }
        r
    };
    // interval evaluation of an affine row over the scaled ranges
    let eval_interval = |coeffs: &[Rat], konst: &Rat, ranges: &[(Rat, Rat)]| -> (Rat, Rat) {
        let mut lo = konst.clone();
        let mut hi = konst.clone();
        for (c, (rlo, rhi)) in coeffs.iter().zip(ranges) {
            if num::Signed::is_negative(c) {
                lo += c * rhi;
                hi += c * rlo;
            } else {
                lo += c * rlo;
                hi += c * rhi;
            }
        }
        (lo, hi)
    };

    let mut edges: Vec<Edge> = Vec::new();
    for e in &reduced.edges {
        let EdgeLabel::Affine(t) = &e.label else {
            return Err("reduced model must be affine".into());
        };
        let from_name = reduced.node_names[e.from].as_str();
        let ranges = ranges_at(from_name);
        let mut rows = MilmRows::new(n);
        // per-variable range rows
        for v in 0..n {
            let (lo, hi) = ranges[v].clone();
            let mut c = vec![Rat::zero(); n];
            c[v] = one.clone();
            rows.push_interval(c, Rat::zero(), lo, hi);
        }
        // loop-head equalities
        if from_name == "F2" {
            let mut c = vec![Rat::zero(); n];
            c[idd] = one.clone();
            c[ix] = -one.clone();
            rows.push_eq(c, Rat::zero());
            let mut c = vec![Rat::zero(); n];
            c[idr] = one.clone();
            c[iy] = -one.clone();
            rows.push_eq(c, Rat::zero());
        }
        // passport rows: constants scale by 1/M; slack ranges come from the
        // interval evaluation clipped at the guard direction
        for g in &e.passport.lin_ineq {
            let konst = &g.constant * &minv;
            let (lo, hi) = eval_interval(&g.coeffs, &konst, &ranges);
            let lo = if num::Signed::is_negative(&lo) { Rat::zero() } else { lo };
            if hi < lo {
                return Err("passport interval empty during hybrid encoding".into());
            }
            rows.push_interval(g.coeffs.clone(), konst, lo, hi);
        }
        for h in &e.passport.lin_eq {
            rows.push_eq(h.coeffs.clone(), &h.constant * &minv);
        }
        let n_w = rows.n_w();
        let h = rows.to_mat(n_w);
        let n_e = n + n_w + 1;
        let mut f = RMat::zeros(n, n_e);
        for i in 0..n {
            for j in 0..n {
                f[(i, j)] = t.a[(i, j)].clone();
            }
            f[(i, n_e - 1)] = &t.e[i] * &minv;
        }
        edges.push(Edge {
            from: e.from,
            to: e.to,
            k: e.k,
            label: EdgeLabel::Milm(MilmBlock { f, h, n, n_w, n_v: 0 }),
            passport: crate::model::semialg::SemialgebraicSet::universal(n),
        });
    }

    let mut out = reduced.clone();
    out.edges = edges;
    for inv in out.invariants.iter_mut() {
        *inv = crate::model::semialg::SemialgebraicSet::universal(n);
    }
    let mut init = crate::model::semialg::SemialgebraicSet::universal(n);
    for v in [ix, iy] {
        let mut above = crate::model::semialg::AffExpr::var(n, v);
        above.constant = -minv.clone();
        init.lin_ineq.push(above);
        let mut below = crate::model::semialg::AffExpr::var(n, v).neg();
        below.constant = one.clone();
        init.lin_ineq.push(below);
    }
    for v in [irem, idd, idr, iq, ir] {
        init.lin_eq.push(crate::model::semialg::AffExpr::var(n, v));
    }
    out.invariants[out.start] = init;
    out.scale = rat(m);
    out.validate().map_err(|e| e.to_string())?;
    Ok(out)
}

pub fn parse_turnrate_abstract() -> GraphModel {
    match parse_model(TURNRATE_ABSTRACT_GM, &LoadOpts::default()) {
        Ok(LoadedModel::Graph(g)) => g,
        other => panic!("bundled turn-rate model failed to parse: {other:?}"),
    }
}

pub fn parse_filter(b: i64, float: Option<FloatSemantics>) -> GraphModel {
    match parse_model(&filter_gm(b), &LoadOpts { float }) {
        Ok(LoadedModel::Graph(g)) => g,
        other => panic!("bundled filter model failed to parse: {other:?}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::semialg::AffExpr;
    use crate::rat::ratio;

    #[test]
    fn euclid_compiles_to_expected_nodes() {
        let c = compile_euclid(100).unwrap();
        let mut names = c.model.node_names.clone();
        names.sort();
        let mut want = vec![
            "L0", "L1", "L2", "L3", "L4", "L5", "Lx", "F0", "F1", "F2", "F3", "F4", "Fx",
        ];
        want.sort_unstable();
        assert_eq!(names, want);
    }

    #[test]
    fn euclid_reduction_matches_reference_labels() {
        let m = euclid_reduced(100, false).unwrap();
        let mut names = m.node_names.clone();
        names.sort();
        assert_eq!(names, vec!["F2", "L0", "Lx"]);
        let f2 = m.node("F2").unwrap();
        let l0 = m.node("L0").unwrap();
        let lx = m.node("Lx").unwrap();
        // four edges: L0 -> F2, two F2 self-loops, F2 -> Lx
        assert_eq!(m.edges.len(), 4);
        let selfloops: Vec<&Edge> =
            m.edges.iter().filter(|e| e.from == f2 && e.to == f2).collect();
        assert_eq!(selfloops.len(), 2);
        // k = 1 self-loop is the division step: x -> [X, Y, rem, dd, dr, q+1, r-dr]
        let e1 = selfloops.iter().find(|e| e.k == 1).unwrap();
        let EdgeLabel::Affine(t1) = &e1.label else { panic!() };
        let iq = m.var("q").unwrap();
        let ir = m.var("r").unwrap();
        let idr = m.var("dr").unwrap();
        assert_eq!(t1.e[iq], rat(1));
        assert_eq!(t1.a[(ir, idr)], rat(-1));
        assert_eq!(t1.a[(ir, ir)], rat(1));
        // k = 2 self-loop is the outer swap: x -> [Y, r, r, Y, r, 0, Y]
        let e2 = selfloops.iter().find(|e| e.k == 2).unwrap();
        let EdgeLabel::Affine(t2) = &e2.label else { panic!() };
        let expected: Vec<(usize, usize)> = vec![
            (m.var("X").unwrap(), m.var("Y").unwrap()),
            (m.var("Y").unwrap(), ir),
            (m.var("rem").unwrap(), ir),
            (m.var("dd").unwrap(), m.var("Y").unwrap()),
            (idr, ir),
            (m.var("r").unwrap(), m.var("Y").unwrap()),
        ];
        for (row, col) in expected {
            assert_eq!(t2.a[(row, col)], rat(1), "row {row} col {col}");
        }
        // q resets to 0
        assert!(t2.a.row(iq).iter().all(|v| v.is_zero()));
        assert_eq!(t2.e[iq], rat(0));
        // its passport is 1 <= r <= dr - 1
        let ge_one = AffExpr {
            coeffs: {
                let mut c = vec![rat(0); 7];
                c[ir] = rat(1);
                c
            },
            constant: rat(-1),
        };
        assert!(
            e2.passport.lin_ineq.contains(&ge_one),
            "passport: {:?}",
            e2.passport.lin_ineq
        );
        // the exit edge keeps r <= 0 and r <= dr - 1
        let exit = m.edges.iter().find(|e| e.from == f2 && e.to == lx).unwrap();
        assert_eq!(exit.passport.lin_ineq.len(), 2);
        // the initial edge performs [X, Y, 0, X, Y, 0, X]
        let start_edge = m.edges.iter().find(|e| e.from == l0).unwrap();
        let EdgeLabel::Affine(t0) = &start_edge.label else { panic!() };
        assert_eq!(t0.a[(m.var("dd").unwrap(), m.var("X").unwrap())], rat(1));
        assert_eq!(t0.a[(m.var("r").unwrap(), m.var("X").unwrap())], rat(1));
    }

    #[test]
    fn equality_propagation_reaches_loop_head() {
        let reduced = euclid_reduced(100, true).unwrap();
        let f2 = reduced.node("F2").unwrap();
        let idd = reduced.var("dd").unwrap();
        let ix = reduced.var("X").unwrap();
        let has_dd_eq_x = reduced.invariants[f2].lin_eq.iter().any(|e| {
            (e.coeffs[idd] == rat(1) && e.coeffs[ix] == rat(-1)
                || e.coeffs[idd] == rat(-1) && e.coeffs[ix] == rat(1))
                && e.constant.is_zero()
        });
        assert!(has_dd_eq_x, "{:?}", reduced.invariants[f2].lin_eq);
    }

    #[test]
    fn filter_model_shape() {
        let g = parse_filter(0, None);
        assert_eq!(g.num_nodes(), 14);
        assert_eq!(g.edges.len(), 15);
        assert_eq!(g.n(), 7);
        // initial state pins v = 1
        let iv = g.var("v").unwrap();
        assert!(g.init_set().contains(&{
            let mut x = vec![rat(0); 7];
            x[iv] = rat(1);
            x
        }));
        // B = 20 variant carries the input uncertainty
        let g20 = parse_filter(20, None);
        let l4 = g20.node("L4").unwrap();
        let e = g20.edges.iter().find(|e| e.from == l4).unwrap();
        let EdgeLabel::Affine(t) = &e.label else { panic!() };
        assert_eq!(t.n_w(), 1);
        assert_eq!(t.b[(0, 0)], rat(20));
    }

    #[test]
    fn turnrate_abstract_shape() {
        let g = parse_turnrate_abstract();
        assert_eq!(g.n(), 1);
        let l1 = g.node("L1").unwrap();
        let l4 = g.node("L4").unwrap();
        let e = g.edges.iter().find(|e| e.from == l1 && e.to == l4).unwrap();
        let EdgeLabel::Affine(t) = &e.label else { panic!() };
        // x lands in [1/3 - 5/3, 1/3 + 5/3] = [-4/3, 2]
        assert_eq!(t.e[0], ratio(1, 3));
        assert_eq!(t.b[(0, 0)], ratio(5, 3));
    }

    #[test]
    fn milghm_blocks_validate() {
        let g = euclid_milghm(100).unwrap();
        assert_eq!(g.edges.len(), 4);
        for e in &g.edges {
            assert!(matches!(e.label, EdgeLabel::Milm(_)));
        }
    }
}
