//! Textual, versioned model files: graph models (`model v1`) and MILMs
//! (`milm v1`). Exact rationals are written `p/q`; updates, guards and
//! constraint sets use the expression syntax of the mini-language.

use super::ast::{Expr, RelOp, Ty};
use super::lex::tokenize;
use super::lower::{add_cmp, guard_diff, AsgCtx, FloatSemantics, LowerEnv, PendAff};
use super::parse::{ParseError, Parser};
use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::model::types::*;
use crate::rat::{fmt_rat, parse_rat, rat, Rat};
use crate::rlinalg::RMat;
use num::{One, Signed, Zero};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{0}")]
    Parse(String),
    #[error("line {0}: {1}")]
    At(usize, String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lower(#[from] super::lower::LowerError),
    #[error(transparent)]
    Expr(#[from] ParseError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug)]
pub enum LoadedModel {
    Graph(GraphModel),
    Milm(Milm),
}

/// Options applied while loading: float semantics add rounding-error
/// uncertainty columns to every non-identity update row.
#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOpts {
    pub float: Option<FloatSemantics>,
}

pub fn load_model(path: &std::path::Path, opts: &LoadOpts) -> Result<LoadedModel, FormatError> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text, opts)
}

pub fn save_model(model: &LoadedModel, path: &std::path::Path) -> Result<(), FormatError> {
    let text = match model {
        LoadedModel::Graph(g) => graph_to_string(g),
        LoadedModel::Milm(m) => milm_to_string(m),
    };
    std::fs::write(path, text)?;
    Ok(())
}

// ---------------------------------------------------------------- parsing

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let l = self.lines.get(self.pos).copied();
        self.pos += 1;
        l
    }
}

pub fn parse_model(text: &str, opts: &LoadOpts) -> Result<LoadedModel, FormatError> {
    let mut lines = Lines::new(text);
    let (ln, header) = lines
        .next()
        .ok_or_else(|| FormatError::Parse("empty model file".into()))?;
    let mut hw = header.split_whitespace();
    match (hw.next(), hw.next()) {
        (Some("model"), Some("v1")) => parse_graph(lines, opts),
        (Some("milm"), Some("v1")) => parse_milm(lines),
        _ => Err(FormatError::At(ln, "expected header `model v1` or `milm v1`".into())),
    }
}

fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(|w| w.to_string()).collect()
}

fn parse_graph(mut lines: Lines, opts: &LoadOpts) -> Result<LoadedModel, FormatError> {
    let mut vars: Vec<String> = Vec::new();
    let mut kinds: Vec<Ty> = Vec::new();
    let mut scale = rat(1);
    let mut node_names: Vec<String> = Vec::new();
    let mut start: Option<String> = None;
    let mut terminal: Option<String> = None;
    let mut invariant_lines: Vec<(usize, String, String)> = Vec::new();
    let mut init_lines: Vec<(usize, String)> = Vec::new();
    let mut unsafe_lines: Vec<(usize, String, String)> = Vec::new();
    let mut overflow: Vec<(usize, String, String)> = Vec::new();
    let mut edges_raw: Vec<EdgeRaw> = Vec::new();

    while let Some((ln, line)) = lines.next() {
        let w = words(line);
        match w[0].as_str() {
            "vars" => {
                for name in &w[1..] {
                    if let Some(stripped) = name.strip_suffix(":bool") {
                        vars.push(stripped.to_string());
                        kinds.push(Ty::Bool);
                    } else if let Some(stripped) = name.strip_suffix(":int") {
                        vars.push(stripped.to_string());
                        kinds.push(Ty::Int);
                    } else {
                        vars.push(name.clone());
                        kinds.push(Ty::Real);
                    }
                }
            }
            "scale" => {
                scale = parse_rat(&w[1]).map_err(|e| FormatError::At(ln, e.to_string()))?;
            }
            "nodes" => node_names.extend(w[1..].iter().cloned()),
            "start" => start = Some(w[1].clone()),
            "terminal" => terminal = Some(w[1].clone()),
            "invariant" => {
                let rest = line["invariant".len()..].trim();
                let (node, expr) = rest.split_once(':').ok_or_else(|| {
                    FormatError::At(ln, "expected `invariant <node>: <cmps>`".into())
                })?;
                invariant_lines.push((ln, node.trim().to_string(), expr.trim().to_string()));
            }
            "init" => {
                let rest = line["init".len()..].trim().trim_start_matches(':').trim();
                init_lines.push((ln, rest.to_string()));
            }
            "unsafe" => {
                let rest = line["unsafe".len()..].trim();
                let (node, expr) = rest.split_once(':').ok_or_else(|| {
                    FormatError::At(ln, "expected `unsafe <node>: <cmps>`".into())
                })?;
                unsafe_lines.push((ln, node.trim().to_string(), expr.trim().to_string()));
            }
            "overflow" => {
                if w.len() != 3 {
                    return Err(FormatError::At(ln, "expected `overflow <var> <limit>`".into()));
                }
                overflow.push((ln, w[1].clone(), w[2].clone()));
            }
            "edge" | "milm-edge" => {
                edges_raw.push(parse_edge_block(&mut lines, ln, line)?);
            }
            other => {
                return Err(FormatError::At(ln, format!("unknown section `{other}`")));
            }
        }
    }

    let n = vars.len();
    if n == 0 {
        return Err(FormatError::Parse("model has no variables".into()));
    }
    let start = start.ok_or_else(|| FormatError::Parse("missing `start` line".into()))?;
    let terminal =
        terminal.ok_or_else(|| FormatError::Parse("missing `terminal` line".into()))?;
    let node_id = |name: &str| -> Result<NodeId, FormatError> {
        node_names
            .iter()
            .position(|x| x == name)
            .ok_or_else(|| FormatError::Parse(format!("unknown node `{name}`")))
    };

    let base_env = LowerEnv {
        vars: vars.iter().cloned().zip(kinds.iter().cloned()).collect(),
        named_w: Vec::new(),
        named_v: Vec::new(),
        float: None,
        havoc_bound: rat(1_000_000),
    };

    let mut invariants = vec![SemialgebraicSet::universal(n); node_names.len()];
    for (ln, node, expr) in &invariant_lines {
        let id = node_id(node).map_err(|e| FormatError::At(*ln, e.to_string()))?;
        invariants[id].conjoin(&parse_cmps(expr, &base_env, *ln)?);
    }
    let start_id = node_id(&start)?;
    for (ln, expr) in &init_lines {
        invariants[start_id].conjoin(&parse_cmps(expr, &base_env, *ln)?);
    }
    for (i, k) in kinds.iter().enumerate() {
        if *k == Ty::Bool {
            let v = AffExpr::var(n, i);
            let q = QuadExpr::from_mat(
                QuadExpr::product(&v, &v)
                    .mat
                    .add(&QuadExpr::from_affine(&AffExpr::constant(n, rat(-1))).mat),
            );
            for inv in invariants.iter_mut() {
                if !inv.quad_eq.contains(&q) {
                    inv.quad_eq.push(q.clone());
                }
            }
        }
    }

    let mut unsafe_sets = vec![Vec::new(); node_names.len()];
    for (ln, node, expr) in &unsafe_lines {
        let id = node_id(node).map_err(|e| FormatError::At(*ln, e.to_string()))?;
        unsafe_sets[id].push(parse_cmps(expr, &base_env, *ln)?);
    }

    let overflow = if overflow.is_empty() {
        None
    } else {
        let mut alpha = vec![Rat::zero(); n];
        let mut seen = vec![false; n];
        for (ln, var, lim) in &overflow {
            let i = vars
                .iter()
                .position(|v| v == var)
                .ok_or_else(|| FormatError::At(*ln, format!("unknown variable `{var}`")))?;
            alpha[i] = parse_rat(lim).map_err(|e| FormatError::At(*ln, e.to_string()))?;
            seen[i] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(FormatError::Parse(
                "overflow limits must cover every variable when present".into(),
            ));
        }
        Some(alpha)
    };

    let mut edges = Vec::new();
    for raw in &edges_raw {
        edges.push(build_edge(raw, &vars, &kinds, &node_id, opts)?);
    }

    let model = GraphModel {
        vars,
        scale,
        node_names: node_names.clone(),
        start: start_id,
        terminal: node_id(&terminal)?,
        edges,
        invariants,
        unsafe_sets,
        overflow,
    };
    model.validate()?;
    Ok(LoadedModel::Graph(model))
}

struct EdgeRaw {
    ln: usize,
    from: String,
    to: String,
    k: usize,
    milm: bool,
    nw: usize,
    nv: usize,
    uncertainty: Vec<String>,
    binary: Vec<String>,
    updates: Vec<(usize, String, String)>,
    guards: Vec<(usize, String)>,
    constraints: Vec<(usize, String)>,
    f_rows: Vec<Vec<Rat>>,
    h_rows: Vec<Vec<Rat>>,
}

fn parse_edge_block(lines: &mut Lines, ln: usize, header: &str) -> Result<EdgeRaw, FormatError> {
    let w = words(header);
    let milm = w[0] == "milm-edge";
    let mut from = String::new();
    let mut to = String::new();
    let mut k = 1usize;
    let mut nw = 0usize;
    let mut nv = 0usize;
    let mut i = 1;
    let mut saw_arrow = false;
    while i < w.len() {
        match w[i].as_str() {
            "->" => {
                saw_arrow = true;
                i += 1;
            }
            "k" => {
                k = w[i + 1].parse().map_err(|_| FormatError::At(ln, "bad k index".into()))?;
                i += 2;
            }
            "nw" => {
                nw = w[i + 1].parse().map_err(|_| FormatError::At(ln, "bad nw".into()))?;
                i += 2;
            }
            "nv" => {
                nv = w[i + 1].parse().map_err(|_| FormatError::At(ln, "bad nv".into()))?;
                i += 2;
            }
            "{" => {
                i += 1;
            }
            name if !saw_arrow && from.is_empty() => {
                from = name.to_string();
                i += 1;
            }
            name if saw_arrow && to.is_empty() => {
                to = name.to_string();
                i += 1;
            }
            other => return Err(FormatError::At(ln, format!("unexpected token `{other}`"))),
        }
    }
    let mut raw = EdgeRaw {
        ln,
        from,
        to,
        k,
        milm,
        nw,
        nv,
        uncertainty: Vec::new(),
        binary: Vec::new(),
        updates: Vec::new(),
        guards: Vec::new(),
        constraints: Vec::new(),
        f_rows: Vec::new(),
        h_rows: Vec::new(),
    };
    while let Some((ln2, line)) = lines.next() {
        if line == "}" {
            return Ok(raw);
        }
        let w = words(line);
        match w[0].as_str() {
            "uncertainty" => raw.uncertainty.extend(w[1..].iter().cloned()),
            "binary" => raw.binary.extend(w[1..].iter().cloned()),
            "update" => {
                let rest = line["update".len()..].trim();
                let (lhs, rhs) = rest.split_once('=').ok_or_else(|| {
                    FormatError::At(ln2, "expected `update v' = expr`".into())
                })?;
                let target = lhs.trim().trim_end_matches('\'').trim().to_string();
                raw.updates.push((ln2, target, rhs.trim().to_string()));
            }
            "guard" => raw.guards.push((ln2, line["guard".len()..].trim().to_string())),
            "constraint" => {
                raw.constraints.push((ln2, line["constraint".len()..].trim().to_string()))
            }
            "F" | "H" => {
                let into_f = w[0] == "F";
                while let Some((ln3, row)) = lines.next() {
                    if row == "}" {
                        break;
                    }
                    let row = row.trim_start_matches('{').trim();
                    if row.is_empty() {
                        continue;
                    }
                    let entries: Result<Vec<Rat>, _> =
                        row.split_whitespace().map(parse_rat).collect();
                    let entries = entries.map_err(|e| FormatError::At(ln3, e.to_string()))?;
                    if into_f {
                        raw.f_rows.push(entries);
                    } else {
                        raw.h_rows.push(entries);
                    }
                }
            }
            other => return Err(FormatError::At(ln2, format!("unknown edge item `{other}`"))),
        }
    }
    Err(FormatError::At(ln, "unclosed edge block".into()))
}

fn expr_of(text: &str, ln: usize) -> Result<Expr, FormatError> {
    let toks = tokenize(text).map_err(|e| FormatError::At(ln, e.to_string()))?;
    let mut p = Parser::from_tokens(toks);
    let e = p.expr().map_err(|e| FormatError::At(ln, e.to_string()))?;
    p.expect_end().map_err(|e| FormatError::At(ln, e.to_string()))?;
    Ok(e)
}

/// comparisons joined by `&&`; strict inequalities are closed as written
fn parse_cmps(text: &str, env: &LowerEnv, ln: usize) -> Result<SemialgebraicSet, FormatError> {
    if text == "never" {
        let mut dims = env.vars.len();
        dims += env.named_w.len() + env.named_v.len();
        return Ok(SemialgebraicSet::empty(dims));
    }
    let toks = tokenize(text).map_err(|e| FormatError::At(ln, e.to_string()))?;
    let mut p = Parser::from_tokens(toks);
    let mut set = SemialgebraicSet::universal(env.vars.len());
    loop {
        let cmp = p.cmp().map_err(|e| FormatError::At(ln, e.to_string()))?;
        let g = guard_diff(env, &cmp.lhs, &cmp.rhs)?;
        add_cmp(&mut set, &g, closed(cmp.op), &Rat::zero(), false);
        if !p.try_andand() {
            break;
        }
    }
    p.expect_end().map_err(|e| FormatError::At(ln, e.to_string()))?;
    set.dedup();
    Ok(set)
}

fn closed(op: RelOp) -> RelOp {
    match op {
        RelOp::Lt => RelOp::Le,
        RelOp::Gt => RelOp::Ge,
        other => other,
    }
}

fn build_edge(
    raw: &EdgeRaw,
    vars: &[String],
    kinds: &[Ty],
    node_id: &impl Fn(&str) -> Result<NodeId, FormatError>,
    opts: &LoadOpts,
) -> Result<Edge, FormatError> {
    let n = vars.len();
    let from = node_id(&raw.from)?;
    let to = node_id(&raw.to)?;
    let guard_env = LowerEnv {
        vars: vars.iter().cloned().zip(kinds.iter().cloned()).collect(),
        named_w: Vec::new(),
        named_v: Vec::new(),
        float: None,
        havoc_bound: rat(1_000_000),
    };
    let mut passport = SemialgebraicSet::universal(n);
    for (ln, g) in &raw.guards {
        passport.conjoin(&parse_cmps(g, &guard_env, *ln)?);
    }

    if raw.milm {
        let n_e = n + raw.nw + raw.nv + 1;
        for (what, rows) in [("F", &raw.f_rows), ("H", &raw.h_rows)] {
            if rows.iter().any(|r| r.len() != n_e) {
                return Err(FormatError::At(
                    raw.ln,
                    format!("{what} column count must equal n_e = {n_e}"),
                ));
            }
        }
        let f = RMat::from_rows(raw.f_rows.clone());
        if f.r != n {
            return Err(FormatError::At(raw.ln, format!("F must have {n} rows")));
        }
        return Ok(Edge {
            from,
            to,
            k: raw.k,
            label: EdgeLabel::Milm(MilmBlock {
                f,
                h: RMat::from_rows(raw.h_rows.clone()),
                n,
                n_w: raw.nw,
                n_v: raw.nv,
            }),
            passport,
        });
    }

    // affine edge: updates lowered over (x | named w .. fresh w | named v .. fresh v)
    let env = LowerEnv {
        vars: vars.iter().cloned().zip(kinds.iter().cloned()).collect(),
        named_w: raw.uncertainty.clone(),
        named_v: raw.binary.clone(),
        float: opts.float,
        havoc_bound: rat(1_000_000),
    };
    let mut ctx = AsgCtx::new(&env);
    let mut rows: Vec<(usize, PendAff)> = Vec::new();
    for (ln, target, rhs) in &raw.updates {
        let ti = vars
            .iter()
            .position(|v| v == target)
            .ok_or_else(|| FormatError::At(*ln, format!("unknown update target `{target}`")))?;
        let expr = expr_of(rhs, *ln)?;
        let (mut out, _) = ctx.lower(&expr).map_err(FormatError::Lower)?;
        let delta = ctx.take_float_delta();
        if !delta.is_zero() {
            let werr = ctx.alloc_w();
            out = out.add(&werr.scaled(&delta));
        }
        rows.push((ti, out));
    }
    let total_w = ctx.w_count;
    let total_v = ctx.v_count;
    let mut a = RMat::eye(n);
    let mut b = RMat::zeros(n, total_w);
    let mut c = RMat::zeros(n, total_v);
    let mut e = vec![Rat::zero(); n];
    for (ti, out) in &rows {
        for j in 0..n {
            a[(*ti, j)] = out.x.get(j).cloned().unwrap_or_else(Rat::zero);
        }
        e[*ti] = out.k.clone();
        for (j, coeff) in out.w.iter().enumerate() {
            b[(*ti, j)] = coeff.clone();
        }
        for (j, coeff) in out.v.iter().enumerate() {
            c[(*ti, j)] = coeff.clone();
        }
    }
    let dim = n + total_w + total_v;
    let mut constraint = SemialgebraicSet::universal(dim);
    // explicit constraint lines reference named slots like variables
    if !raw.constraints.is_empty() {
        let mut cons_vars: Vec<(String, Ty)> = env.vars.clone();
        for wn in &raw.uncertainty {
            cons_vars.push((wn.clone(), Ty::Real));
        }
        for vn in &raw.binary {
            cons_vars.push((vn.clone(), Ty::Real));
        }
        let cons_env = LowerEnv {
            vars: cons_vars,
            named_w: Vec::new(),
            named_v: Vec::new(),
            float: None,
            havoc_bound: env.havoc_bound.clone(),
        };
        let named_w = raw.uncertainty.len();
        let named_v = raw.binary.len();
        let mut map = RMat::zeros(n + named_w + named_v, dim);
        for i in 0..n {
            map[(i, i)] = Rat::one();
        }
        for j in 0..named_w {
            map[(n + j, n + j)] = Rat::one();
        }
        for j in 0..named_v {
            map[(n + named_w + j, n + total_w + j)] = Rat::one();
        }
        let zero = vec![Rat::zero(); n + named_w + named_v];
        for (ln, text) in &raw.constraints {
            let set = parse_cmps(text, &cons_env, *ln)?;
            constraint.conjoin(&set.pullback(&map, &zero));
        }
    }
    // fragment constraints produced by the lowering itself
    let place = |p: &PendAff| -> AffExpr {
        let mut coeffs = vec![Rat::zero(); dim];
        coeffs[..n].clone_from_slice(&p.x);
        for (j, w) in p.w.iter().enumerate() {
            coeffs[n + j] = w.clone();
        }
        for (j, v) in p.v.iter().enumerate() {
            coeffs[n + total_w + j] = v.clone();
        }
        AffExpr { coeffs, constant: p.k.clone() }
    };
    for aff in &ctx.aff_eq {
        constraint.lin_eq.push(place(aff));
    }
    for aff in &ctx.aff_ineq {
        constraint.lin_ineq.push(place(aff));
    }
    for (p, q, r) in &ctx.quad_eq {
        let m = QuadExpr::product(&place(p), &place(q))
            .mat
            .add(&QuadExpr::from_affine(&place(r)).mat);
        constraint.quad_eq.push(QuadExpr::from_mat(m));
    }
    for (p, q, r) in &ctx.quad_ineq {
        let m = QuadExpr::product(&place(p), &place(q))
            .mat
            .add(&QuadExpr::from_affine(&place(r)).mat);
        constraint.quad_ineq.push(QuadExpr::from_mat(m));
    }
    constraint.dedup();
    Ok(Edge {
        from,
        to,
        k: raw.k,
        label: EdgeLabel::Affine(TransitionLabel { a, b, c, e, constraint }),
        passport,
    })
}

fn parse_milm(mut lines: Lines) -> Result<LoadedModel, FormatError> {
    let mut vars: Vec<String> = Vec::new();
    let mut scale = rat(1);
    let mut nw = 0usize;
    let mut nv = 0usize;
    let mut f_rows: Vec<Vec<Rat>> = Vec::new();
    let mut h_rows: Vec<Vec<Rat>> = Vec::new();
    let mut h0_rows: Vec<Vec<Rat>> = Vec::new();
    let mut states: Vec<Vec<Rat>> = Vec::new();

    while let Some((ln, line)) = lines.next() {
        let w = words(line);
        match w[0].as_str() {
            "vars" => vars.extend(w[1..].iter().cloned()),
            "scale" => scale = parse_rat(&w[1]).map_err(|e| FormatError::At(ln, e.to_string()))?,
            "dims" => {
                let mut i = 1;
                while i + 1 < w.len() {
                    match w[i].as_str() {
                        "nw" => nw = w[i + 1].parse().unwrap_or(0),
                        "nv" => nv = w[i + 1].parse().unwrap_or(0),
                        _ => return Err(FormatError::At(ln, "expected `dims nw N nv N`".into())),
                    }
                    i += 2;
                }
            }
            "F" | "H" | "H0" | "X0" => {
                let dest = w[0].clone();
                while let Some((ln3, row)) = lines.next() {
                    if row == "}" {
                        break;
                    }
                    let row = row.trim_start_matches('{').trim();
                    if row.is_empty() {
                        continue;
                    }
                    let entries: Result<Vec<Rat>, _> =
                        row.split_whitespace().map(parse_rat).collect();
                    let entries = entries.map_err(|e| FormatError::At(ln3, e.to_string()))?;
                    match dest.as_str() {
                        "F" => f_rows.push(entries),
                        "H" => h_rows.push(entries),
                        "H0" => h0_rows.push(entries),
                        _ => states.push(entries),
                    }
                }
            }
            other => return Err(FormatError::At(ln, format!("unknown section `{other}`"))),
        }
    }
    let n = vars.len();
    let n_e = n + nw + nv + 1;
    for (what, rows) in [("F", &f_rows), ("H", &h_rows), ("H0", &h0_rows)] {
        if rows.iter().any(|r| r.len() != n_e) {
            return Err(FormatError::Parse(format!(
                "{what} column count must equal n_e = {n_e}"
            )));
        }
    }
    let init = if !h0_rows.is_empty() {
        MilmInit::Polytope(RMat::from_rows(h0_rows))
    } else {
        MilmInit::States(states)
    };
    let milm = Milm {
        vars,
        block: MilmBlock {
            f: RMat::from_rows(f_rows),
            h: RMat::from_rows(h_rows),
            n,
            n_w: nw,
            n_v: nv,
        },
        init,
        scale,
    };
    milm.validate()?;
    Ok(LoadedModel::Milm(milm))
}

// ------------------------------------------------------------- printing

fn term(coeff: &Rat, name: &str, first: bool) -> String {
    let sign = if coeff.is_negative() {
        "- "
    } else if first {
        ""
    } else {
        "+ "
    };
    let mag = coeff.abs();
    if mag.is_one() {
        format!("{sign}{name}")
    } else {
        format!("{sign}{}*{name}", fmt_rat(&mag))
    }
}

pub fn aff_to_string(a: &AffExpr, names: &[String]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (i, c) in a.coeffs.iter().enumerate() {
        if !c.is_zero() {
            parts.push(term(c, &names[i], parts.is_empty()));
        }
    }
    if !a.constant.is_zero() || parts.is_empty() {
        if parts.is_empty() {
            parts.push(fmt_rat(&a.constant));
        } else if a.constant.is_negative() {
            parts.push(format!("- {}", fmt_rat(&a.constant.abs())));
        } else {
            parts.push(format!("+ {}", fmt_rat(&a.constant)));
        }
    }
    parts.join(" ")
}

pub fn quad_to_string(q: &QuadExpr, names: &[String]) -> String {
    let n = q.dim();
    let two = rat(2);
    let mut parts: Vec<String> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let c = if i == j {
                q.mat[(i, j)].clone()
            } else {
                &q.mat[(i, j)] * &two
            };
            if !c.is_zero() {
                parts.push(term(&c, &format!("{}*{}", names[i], names[j]), parts.is_empty()));
            }
        }
    }
    for i in 0..n {
        let c = &q.mat[(i, n)] * &two;
        if !c.is_zero() {
            parts.push(term(&c, &names[i], parts.is_empty()));
        }
    }
    let k = &q.mat[(n, n)];
    if !k.is_zero() || parts.is_empty() {
        if parts.is_empty() {
            parts.push(fmt_rat(k));
        } else if k.is_negative() {
            parts.push(format!("- {}", fmt_rat(&k.abs())));
        } else {
            parts.push(format!("+ {}", fmt_rat(k)));
        }
    }
    parts.join(" ")
}

fn set_lines(set: &SemialgebraicSet, names: &[String], prefix: &str, out: &mut String) {
    for e in &set.lin_ineq {
        out.push_str(&format!("{prefix}{} >= 0\n", aff_to_string(e, names)));
    }
    for e in &set.lin_eq {
        out.push_str(&format!("{prefix}{} == 0\n", aff_to_string(e, names)));
    }
    for q in &set.quad_ineq {
        out.push_str(&format!("{prefix}{} >= 0\n", quad_to_string(q, names)));
    }
    for q in &set.quad_eq {
        out.push_str(&format!("{prefix}{} == 0\n", quad_to_string(q, names)));
    }
}

fn is_never(set: &SemialgebraicSet) -> bool {
    set.lin_ineq
        .iter()
        .any(|x| x.coeffs.iter().all(|c| c.is_zero()) && x.constant.is_negative())
}

pub fn graph_to_string(g: &GraphModel) -> String {
    let mut out = String::from("model v1\n");
    out.push_str("vars");
    for (i, v) in g.vars.iter().enumerate() {
        out.push(' ');
        out.push_str(v);
        // bool marking is recovered from the per-node v^2 = 1 invariants
        let is_bool = g.invariants.iter().all(|inv| {
            inv.quad_eq.iter().any(|q| {
                let n = q.dim();
                q.mat[(i, i)].is_one()
                    && q.mat[(n, n)] == rat(-1)
                    && (0..=n).all(|a| {
                        (0..=n).all(|b| {
                            (a == i && b == i) || (a == n && b == n) || q.mat[(a, b)].is_zero()
                        })
                    })
            })
        });
        if is_bool {
            out.push_str(":bool");
        }
    }
    out.push('\n');
    out.push_str(&format!("scale {}\n", fmt_rat(&g.scale)));
    out.push_str("nodes");
    for nm in &g.node_names {
        out.push(' ');
        out.push_str(nm);
    }
    out.push('\n');
    out.push_str(&format!("start {}\n", g.node_names[g.start]));
    out.push_str(&format!("terminal {}\n", g.node_names[g.terminal]));
    for (i, inv) in g.invariants.iter().enumerate() {
        if inv.is_universal() {
            continue;
        }
        // the bool marker regenerates v^2 = 1: skip those rows
        let mut inv = inv.clone();
        inv.quad_eq.retain(|q| {
            let n = q.dim();
            !(0..g.n()).any(|vi| {
                q.mat[(vi, vi)].is_one()
                    && q.mat[(n, n)] == rat(-1)
                    && (0..=n).all(|a| {
                        (0..=n).all(|b| {
                            (a == vi && b == vi) || (a == n && b == n) || q.mat[(a, b)].is_zero()
                        })
                    })
            })
        });
        if inv.is_universal() {
            continue;
        }
        set_lines(&inv, &g.vars, &format!("invariant {}: ", g.node_names[i]), &mut out);
    }
    for (i, sets) in g.unsafe_sets.iter().enumerate() {
        for set in sets {
            let mut parts: Vec<String> = Vec::new();
            for e in &set.lin_ineq {
                parts.push(format!("{} >= 0", aff_to_string(e, &g.vars)));
            }
            for e in &set.lin_eq {
                parts.push(format!("{} == 0", aff_to_string(e, &g.vars)));
            }
            for q in &set.quad_ineq {
                parts.push(format!("{} >= 0", quad_to_string(q, &g.vars)));
            }
            for q in &set.quad_eq {
                parts.push(format!("{} == 0", quad_to_string(q, &g.vars)));
            }
            out.push_str(&format!("unsafe {}: {}\n", g.node_names[i], parts.join(" && ")));
        }
    }
    if let Some(alpha) = &g.overflow {
        for (i, a) in alpha.iter().enumerate() {
            out.push_str(&format!("overflow {} {}\n", g.vars[i], fmt_rat(a)));
        }
    }
    for e in &g.edges {
        match &e.label {
            EdgeLabel::Affine(t) => {
                out.push_str(&format!(
                    "edge {} -> {} k {} {{\n",
                    g.node_names[e.from], g.node_names[e.to], e.k
                ));
                let wnames: Vec<String> = (0..t.n_w()).map(|i| format!("w{}", i + 1)).collect();
                let vnames: Vec<String> = (0..t.n_v()).map(|i| format!("v{}", i + 1)).collect();
                if !wnames.is_empty() {
                    out.push_str(&format!("  uncertainty {}\n", wnames.join(" ")));
                }
                if !vnames.is_empty() {
                    out.push_str(&format!("  binary {}\n", vnames.join(" ")));
                }
                let all_names: Vec<String> = g
                    .vars
                    .iter()
                    .cloned()
                    .chain(wnames.iter().cloned())
                    .chain(vnames.iter().cloned())
                    .collect();
                let n = g.n();
                for row in 0..n {
                    let ident = (0..n).all(|j| {
                        let want = if j == row { rat(1) } else { Rat::zero() };
                        t.a[(row, j)] == want
                    }) && t.e[row].is_zero()
                        && (0..t.n_w()).all(|j| t.b[(row, j)].is_zero())
                        && (0..t.n_v()).all(|j| t.c[(row, j)].is_zero());
                    if ident {
                        continue;
                    }
                    let mut coeffs = vec![Rat::zero(); all_names.len()];
                    for j in 0..n {
                        coeffs[j] = t.a[(row, j)].clone();
                    }
                    for j in 0..t.n_w() {
                        coeffs[n + j] = t.b[(row, j)].clone();
                    }
                    for j in 0..t.n_v() {
                        coeffs[n + t.n_w() + j] = t.c[(row, j)].clone();
                    }
                    let aff = AffExpr { coeffs, constant: t.e[row].clone() };
                    out.push_str(&format!(
                        "  update {}' = {}\n",
                        g.vars[row],
                        aff_to_string(&aff, &all_names)
                    ));
                }
                if is_never(&e.passport) {
                    out.push_str("  guard never\n");
                } else {
                    set_lines(&e.passport, &g.vars, "  guard ", &mut out);
                }
                if !t.constraint.is_universal() {
                    set_lines(&t.constraint, &all_names, "  constraint ", &mut out);
                }
                out.push_str("}\n");
            }
            EdgeLabel::Milm(m) => {
                out.push_str(&format!(
                    "milm-edge {} -> {} k {} nw {} nv {} {{\n",
                    g.node_names[e.from], g.node_names[e.to], e.k, m.n_w, m.n_v
                ));
                for (dest, mat) in [("F", &m.f), ("H", &m.h)] {
                    out.push_str(&format!("  {dest} {{\n"));
                    for r in 0..mat.r {
                        let row: Vec<String> = (0..mat.c).map(|c| fmt_rat(&mat[(r, c)])).collect();
                        out.push_str(&format!("    {}\n", row.join(" ")));
                    }
                    out.push_str("  }\n");
                }
                if is_never(&e.passport) {
                    out.push_str("  guard never\n");
                } else {
                    set_lines(&e.passport, &g.vars, "  guard ", &mut out);
                }
                out.push_str("}\n");
            }
        }
    }
    out
}

pub fn milm_to_string(m: &Milm) -> String {
    let mut out = String::from("milm v1\n");
    out.push_str("vars");
    for v in &m.vars {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    out.push_str(&format!("scale {}\n", fmt_rat(&m.scale)));
    out.push_str(&format!("dims nw {} nv {}\n", m.block.n_w, m.block.n_v));
    for (dest, mat) in [("F", &m.block.f), ("H", &m.block.h)] {
        out.push_str(&format!("{dest} {{\n"));
        for r in 0..mat.r {
            let row: Vec<String> = (0..mat.c).map(|c| fmt_rat(&mat[(r, c)])).collect();
            out.push_str(&format!("  {}\n", row.join(" ")));
        }
        out.push_str("}\n");
    }
    match &m.init {
        MilmInit::Polytope(h0) => {
            out.push_str("H0 {\n");
            for r in 0..h0.r {
                let row: Vec<String> = (0..h0.c).map(|c| fmt_rat(&h0[(r, c)])).collect();
                out.push_str(&format!("  {}\n", row.join(" ")));
            }
            out.push_str("}\n");
        }
        MilmInit::States(xs) => {
            out.push_str("X0 {\n");
            for x in xs {
                let row: Vec<String> = x.iter().map(fmt_rat).collect();
                out.push_str(&format!("  {}\n", row.join(" ")));
            }
            out.push_str("}\n");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE_MILM: &str = "\
milm v1
vars dd dr q r
scale 100
dims nw 3 nv 0
F {
  1 0 0 0 0 0 0 0
  0 1 0 0 0 0 0 0
  0 0 1 0 0 0 0 1/100
  0 -1 0 1 0 0 0 0
}
H {
  0 2 0 -2 1 0 0 1
  0 -2 0 0 0 1 0 1
  -2 0 0 0 0 0 1 1
}
H0 {
  1 0 0 -1 0 0 0 0
  0 0 1 0 0 0 0 0
  0 -2 0 0 0 1 0 1
  -2 0 0 0 0 0 1 1
}
";

    #[test]
    fn milm_round_trip() {
        let loaded = parse_model(EXAMPLE_MILM, &LoadOpts::default()).unwrap();
        let LoadedModel::Milm(m) = &loaded else { panic!("expected milm") };
        assert_eq!(m.block.n, 4);
        assert_eq!(m.block.n_w, 3);
        assert_eq!(m.block.n_v, 0);
        assert_eq!(m.block.f[(2, 7)], crate::rat::ratio(1, 100));
        let text = milm_to_string(m);
        let again = parse_model(&text, &LoadOpts::default()).unwrap();
        let LoadedModel::Milm(m2) = again else { panic!() };
        assert_eq!(*m, m2);
    }

    #[test]
    fn bad_dimensions_named() {
        let broken = EXAMPLE_MILM.replace("  0 -1 0 1 0 0 0 0\n", "  0 -1 0 1 0 0 0\n");
        let err = parse_model(&broken, &LoadOpts::default()).unwrap_err();
        assert!(err.to_string().contains("n_e"), "{err}");
    }

    const SMALL_GRAPH: &str = "\
model v1
vars x y:bool
scale 10
nodes a b c
start a
terminal c
init x >= 1 && x <= 10
invariant b: x >= 0
unsafe b: x - 11 >= 0
overflow x 100
overflow y 1
edge a -> b k 1 {
  uncertainty w1
  update x' = 2*x + 1/2*w1 - 1
  guard x >= 1
}
edge b -> c k 1 {
  update y' = 1
}
";

    #[test]
    fn graph_round_trip() {
        let loaded = parse_model(SMALL_GRAPH, &LoadOpts::default()).unwrap();
        let LoadedModel::Graph(g) = &loaded else { panic!("expected graph") };
        assert_eq!(g.num_nodes(), 3);
        assert_eq!(g.edges.len(), 2);
        let text = graph_to_string(g);
        let again = parse_model(&text, &LoadOpts::default()).unwrap();
        let LoadedModel::Graph(g2) = again else { panic!() };
        assert_eq!(*g, g2);
    }

    #[test]
    fn float_loading_adds_error_columns() {
        use crate::abstraction::float::F64;
        let opts = LoadOpts {
            float: Some(FloatSemantics {
                format: F64,
                range_hint_num: 1000,
                range_hint_den: 1,
            }),
        };
        let loaded = parse_model(SMALL_GRAPH, &opts).unwrap();
        let LoadedModel::Graph(g) = loaded else { panic!() };
        // the x-update edge gains one rounding-error column
        let EdgeLabel::Affine(t) = &g.edges[0].label else { panic!() };
        assert_eq!(t.n_w(), 2);
        // delta = 2 ops * (gamma * bound + beta), small but nonzero
        assert!(!t.b[(0, 1)].is_zero());
    }
}
