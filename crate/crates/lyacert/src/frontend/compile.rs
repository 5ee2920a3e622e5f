//! Compilation of the mini-language to a graph model: one node per location,
//! conditional branches as complementary passport-labeled edges, assertions
//! as per-node unsafe sets, calls inlined.

use super::ast::*;
use super::lex::Span;
use super::lower::*;
use super::parse::{parse_program, ParseError};
use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::model::types::*;
use crate::rat::{rat, Rat};
use crate::rlinalg::RMat;
use num::{One, Zero};

#[derive(Clone, Debug)]
pub struct CompileOpts {
    /// physical scale M recorded on the model
    pub scale: Rat,
    /// closure gap for strict inequalities over real-typed guards
    pub eps_guard: Rat,
    /// magnitude bound for havoced assignments (variable division results,
    /// roots, logs)
    pub havoc_bound: Rat,
    /// float semantics: add rounding-error uncertainties to every update
    pub float: Option<FloatSemantics>,
}

impl Default for CompileOpts {
    fn default() -> Self {
        CompileOpts {
            scale: rat(1),
            eps_guard: Rat::zero(),
            havoc_bound: rat(1_000_000),
            float: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CompileError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Lower(#[from] LowerError),
    #[error("{span}: {msg}")]
    Structure { span: Span, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A compiled program: the model plus the nonlinear check sites discovered on
/// the way (division, even roots, logarithms), addressed by node.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub model: GraphModel,
    pub sites: Vec<(NodeId, Site)>,
}

pub fn compile_source(src: &str, opts: &CompileOpts) -> Result<Compiled, CompileError> {
    let ast = parse_program(src)?;
    compile_to_graph(&ast, opts)
}

struct Builder<'a> {
    opts: &'a CompileOpts,
    env: LowerEnv,
    node_names: Vec<String>,
    edges: Vec<Edge>,
    unsafe_sets: Vec<Vec<SemialgebraicSet>>,
    sites: Vec<(NodeId, Site)>,
    terminal: Option<NodeId>,
    auto: usize,
    fns: Vec<FnDef>,
    call_stack: Vec<String>,
}

/// context threaded through function-body compilation so `return` can route
/// to the caller
#[derive(Clone, Copy)]
struct CallCtx {
    after: NodeId,
    target: Option<usize>,
}

impl<'a> Builder<'a> {
    fn n(&self) -> usize {
        self.env.vars.len()
    }

    fn node(&mut self, label: Option<&str>, span: Span) -> Result<NodeId, CompileError> {
        let name = match label {
            Some(l) => {
                let mut candidate = l.to_string();
                let mut suffix = 1;
                while self.node_names.contains(&candidate) {
                    suffix += 1;
                    candidate = format!("{l}_{suffix}");
                }
                let _ = span;
                candidate
            }
            None => loop {
                let candidate = format!("n{}", self.auto);
                self.auto += 1;
                if !self.node_names.contains(&candidate) {
                    break candidate;
                }
            },
        };
        self.node_names.push(name);
        self.unsafe_sets.push(Vec::new());
        Ok(self.node_names.len() - 1)
    }

    fn add_edge(&mut self, from: NodeId, to: NodeId, label: TransitionLabel, passport: SemialgebraicSet) {
        let k = self.edges.iter().filter(|e| e.from == from && e.to == to).count() + 1;
        self.edges.push(Edge { from, to, k, label: EdgeLabel::Affine(label), passport });
    }

    fn identity_label(&self) -> TransitionLabel {
        TransitionLabel::identity(self.n())
    }

    /// Build the affine edge label for simultaneous updates
    /// target_i := lowered_i; merged sequentially-composed when needed.
    fn label_from_updates(
        &mut self,
        node: NodeId,
        updates: &[(usize, Lowered)],
    ) -> TransitionLabel {
        let n = self.n();
        let mut w_total = 0usize;
        let mut v_total = 0usize;
        for (_, l) in updates {
            w_total += l.w_count;
            v_total += l.v_count;
        }
        let mut a = RMat::eye(n);
        let mut b = RMat::zeros(n, w_total);
        let mut c = RMat::zeros(n, v_total);
        let mut e = vec![Rat::zero(); n];
        let dim = n + w_total + v_total;
        let mut constraint = SemialgebraicSet::universal(dim);
        let mut w_off = 0usize;
        let mut v_off = 0usize;
        let mut float_extra: Vec<(usize, Rat)> = Vec::new();
        for (target, l) in updates {
            // effective delta from rounding errors becomes one extra w column
            // appended later
            if !l.float_delta.is_zero() {
                float_extra.push((*target, l.float_delta.clone()));
            }
            for j in 0..n {
                a[(*target, j)] = l.out.x.get(j).cloned().unwrap_or_else(Rat::zero);
            }
            e[*target] = l.out.k.clone();
            for (j, coeff) in l.out.w.iter().enumerate() {
                b[(*target, w_off + j)] = coeff.clone();
            }
            for (j, coeff) in l.out.v.iter().enumerate() {
                c[(*target, v_off + j)] = coeff.clone();
            }
            let place = |p: &PendAff| -> AffExpr {
                let mut coeffs = vec![Rat::zero(); dim];
                coeffs[..n].clone_from_slice(&p.x);
                for (j, w) in p.w.iter().enumerate() {
                    coeffs[n + w_off + j] = w.clone();
                }
                for (j, v) in p.v.iter().enumerate() {
                    coeffs[n + w_total + v_off + j] = v.clone();
                }
                AffExpr { coeffs, constant: p.k.clone() }
            };
            for eq in &l.aff_eq {
                constraint.lin_eq.push(place(eq));
            }
            for ineq in &l.aff_ineq {
                constraint.lin_ineq.push(place(ineq));
            }
            for (p, q, r) in &l.quad_eq {
                let mut m = QuadExpr::product(&place(p), &place(q)).mat;
                m = m.add(&QuadExpr::from_affine(&place(r)).mat);
                constraint.quad_eq.push(QuadExpr::from_mat(m));
            }
            for (p, q, r) in &l.quad_ineq {
                let mut m = QuadExpr::product(&place(p), &place(q)).mat;
                m = m.add(&QuadExpr::from_affine(&place(r)).mat);
                constraint.quad_ineq.push(QuadExpr::from_mat(m));
            }
            for s in &l.sites {
                self.sites.push((node, s.clone()));
            }
            w_off += l.w_count;
            v_off += l.v_count;
        }
        // append one rounding-error column per float-affected target
        if !float_extra.is_empty() {
            let extra = float_extra.len();
            let mut b2 = RMat::zeros(n, w_total + extra);
            for i in 0..n {
                for j in 0..w_total {
                    b2[(i, j)] = b[(i, j)].clone();
                }
            }
            for (slot, (target, delta)) in float_extra.iter().enumerate() {
                b2[(*target, w_total + slot)] = delta.clone();
            }
            b = b2;
            // constraint dims must grow: re-embed (x | w | v) -> (x | w+extra | v)
            let new_dim = n + w_total + extra + v_total;
            let mut map = RMat::zeros(dim, new_dim);
            for i in 0..n {
                map[(i, i)] = Rat::one();
            }
            for j in 0..w_total {
                map[(n + j, n + j)] = Rat::one();
            }
            for j in 0..v_total {
                map[(n + w_total + j, n + w_total + extra + j)] = Rat::one();
            }
            let zero = vec![Rat::zero(); dim];
            constraint = constraint.pullback(&map, &zero);
        }
        TransitionLabel { a, b, c, e, constraint }
    }

    /// sequential composition of decl-assign runs: apply `second` after
    /// `first` (both straight-line affine updates)
    fn compose_updates(&self, first: TransitionLabel, second: TransitionLabel) -> TransitionLabel {
        // reuse the reduction composer with a universal mid-set
        crate::model::reduce::compose_labels(&first, &second, &SemialgebraicSet::universal(self.n()))
            .0
    }

    fn lower_assignment(&mut self, target: &str, value: &Expr, span: Span) -> Result<(usize, Lowered), CompileError> {
        let ti = self
            .env
            .vars
            .iter()
            .position(|(n, _)| n == target)
            .ok_or(LowerError::Undeclared { name: target.into(), span })?;
        let mut ctx = AsgCtx::new(&self.env);
        let (out, interval) = ctx.lower(value)?;
        Ok((ti, ctx.finish(out, interval)))
    }

    fn guard_sets(
        &self,
        cond: &Cond,
        span: Span,
    ) -> Result<(SemialgebraicSet, Vec<SemialgebraicSet>), CompileError> {
        let n = self.n();
        match cond {
            Cond::True => Ok((SemialgebraicSet::universal(n), vec![SemialgebraicSet::empty(n)])),
            Cond::All(cmps) => {
                let mut yes = SemialgebraicSet::universal(n);
                let mut nos = Vec::new();
                for cmp in cmps {
                    let g = guard_diff(&self.env, &cmp.lhs, &cmp.rhs)?;
                    let gap = if integral_guard(&self.env, &g) {
                        Rat::one()
                    } else {
                        self.opts.eps_guard.clone()
                    };
                    add_cmp(&mut yes, &g, cmp.op, &gap, false);
                    // complement: one set per comparison (their union covers
                    // the complement of the conjunction)
                    if cmp.op == RelOp::Eq {
                        if let Some((var, value)) = self.bool_eq(&g) {
                            // boolean equality: the complement is the other value
                            let mut no = SemialgebraicSet::universal(n);
                            let mut eq = AffExpr::var(n, var);
                            eq.constant = value; // bool_eq returns -other
                            no.lin_eq.push(eq);
                            nos.push(no);
                            continue;
                        }
                    }
                    let mut no = SemialgebraicSet::universal(n);
                    if cmp.op == RelOp::Eq {
                        // e != 0 splits into e >= gap and -e >= gap
                        let mut lo = SemialgebraicSet::universal(n);
                        add_cmp(&mut lo, &g, RelOp::Gt, &gap, false);
                        nos.push(lo);
                        let mut hi = SemialgebraicSet::universal(n);
                        add_cmp(&mut hi, &g, RelOp::Lt, &gap, false);
                        nos.push(hi);
                        continue;
                    }
                    add_cmp(&mut no, &g, cmp.op, &gap, true);
                    nos.push(no);
                }
                let _ = span;
                yes.dedup();
                Ok((yes, nos))
            }
        }
    }

    fn compile_seq(
        &mut self,
        stmts: &[Stmt],
        entry: NodeId,
        exit: NodeId,
        ctx: Option<CallCtx>,
    ) -> Result<(), CompileError> {
        // group runs of consecutive unlabeled DeclAssign/Assign after a
        // DeclAssign into one compound edge (matching one-location multi
        // declarations)
        let mut groups: Vec<Vec<&Stmt>> = Vec::new();
        for s in stmts {
            let join = matches!(s.kind, StmtKind::DeclAssign(_))
                && s.label.is_none()
                && groups
                    .last()
                    .is_some_and(|g| matches!(g.last().unwrap().kind, StmtKind::DeclAssign(_)));
            if join {
                groups.last_mut().unwrap().push(s);
            } else {
                groups.push(vec![s]);
            }
        }
        let mut cursor = entry;
        for (gi, group) in groups.iter().enumerate() {
            let last = gi + 1 == groups.len();
            let next = if last {
                exit
            } else {
                let s = groups[gi + 1][0];
                self.node(s.label.as_deref(), s.span)?
            };
            self.compile_group(group, cursor, next, ctx)?;
            cursor = next;
        }
        if stmts.is_empty() {
            self.add_edge(entry, exit, self.identity_label(), SemialgebraicSet::universal(self.n()));
        }
        Ok(())
    }

    fn compile_group(
        &mut self,
        group: &[&Stmt],
        entry: NodeId,
        exit: NodeId,
        ctx: Option<CallCtx>,
    ) -> Result<(), CompileError> {
        if group.len() > 1 {
            // run of declarations-with-initializers: one compound update
            let mut label: Option<TransitionLabel> = None;
            for s in group {
                let StmtKind::DeclAssign(d) = &s.kind else { unreachable!() };
                let upd = self.decl_update(d, s.span)?;
                label = Some(match label {
                    None => upd,
                    Some(prev) => self.compose_updates(prev, upd),
                });
            }
            self.rehome_sites(entry);
            self.add_edge(entry, exit, label.unwrap(), SemialgebraicSet::universal(self.n()));
            return Ok(());
        }
        self.compile_stmt(group[0], entry, exit, ctx)
    }

    fn decl_update(&mut self, d: &Decl, span: Span) -> Result<TransitionLabel, CompileError> {
        match &d.init {
            Init::Default | Init::Interval(..) => Ok(self.identity_label()),
            Init::Expr(e) => {
                let (ti, lowered) = self.lower_assignment(&d.name, e, span)?;
                Ok(self.label_from_updates(usize::MAX, &[(ti, lowered)]))
            }
        }
    }

    fn compile_stmt(
        &mut self,
        stmt: &Stmt,
        entry: NodeId,
        exit: NodeId,
        ctx: Option<CallCtx>,
    ) -> Result<(), CompileError> {
        let n = self.n();
        match &stmt.kind {
            StmtKind::Skip => {
                self.add_edge(entry, exit, self.identity_label(), SemialgebraicSet::universal(n));
            }
            StmtKind::DeclAssign(d) => {
                let label = self.decl_update(d, stmt.span)?;
                // re-register any sites under this node
                self.rehome_sites(entry);
                self.add_edge(entry, exit, label, SemialgebraicSet::universal(n));
            }
            StmtKind::Assign { target, value } => {
                let (ti, lowered) = self.lower_assignment(target, value, stmt.span)?;
                let label = self.label_from_updates(entry, &[(ti, lowered)]);
                self.add_edge(entry, exit, label, SemialgebraicSet::universal(n));
            }
            StmtKind::While { cond, body } => {
                let (yes, nos) = self.guard_sets(cond, stmt.span)?;
                if body.is_empty() {
                    self.add_edge(entry, entry, self.identity_label(), yes);
                } else {
                    let first = &body[0];
                    let b0 = self.node(first.label.as_deref(), first.span)?;
                    self.add_edge(entry, b0, self.identity_label(), yes);
                    self.compile_seq(body, b0, entry, ctx)?;
                }
                for no in nos {
                    self.add_edge(entry, exit, self.identity_label(), no);
                }
            }
            StmtKind::If { cond, then, els } => {
                let (yes, nos) = self.guard_sets(cond, stmt.span)?;
                if then.is_empty() {
                    self.add_edge(entry, exit, self.identity_label(), yes);
                } else {
                    let t0 = self.node(then[0].label.as_deref(), then[0].span)?;
                    self.add_edge(entry, t0, self.identity_label(), yes);
                    self.compile_seq(then, t0, exit, ctx)?;
                }
                if els.is_empty() {
                    for no in nos {
                        self.add_edge(entry, exit, self.identity_label(), no);
                    }
                } else {
                    let e0 = self.node(els[0].label.as_deref(), els[0].span)?;
                    for no in nos {
                        self.add_edge(entry, e0, self.identity_label(), no);
                    }
                    self.compile_seq(els, e0, exit, ctx)?;
                }
            }
            StmtKind::Assert { cond } => {
                let (_, nos) = self.guard_sets(cond, stmt.span)?;
                for no in nos {
                    if !no.lin_ineq.is_empty()
                        || !no.lin_eq.is_empty()
                        || !no.quad_ineq.is_empty()
                        || !no.quad_eq.is_empty()
                    {
                        self.unsafe_sets[entry].push(no);
                    }
                }
                self.add_edge(entry, exit, self.identity_label(), SemialgebraicSet::universal(n));
            }
            StmtKind::Return { value } => match ctx {
                Some(c) => {
                    let label = match (c.target, value) {
                        (Some(ti), Some(e)) => {
                            let mut actx = AsgCtx::new(&self.env);
                            let (out, iv) = actx.lower(e)?;
                            let lowered = actx.finish(out, iv);
                            self.label_from_updates(entry, &[(ti, lowered)])
                        }
                        _ => self.identity_label(),
                    };
                    self.add_edge(entry, c.after, label, SemialgebraicSet::universal(n));
                    // fallthrough exit never happens; leave `exit` dangling
                }
                None => {
                    // main: this location is (or feeds) the terminal node
                    match self.terminal {
                        None => self.terminal = Some(entry),
                        Some(t) => {
                            self.add_edge(entry, t, self.identity_label(), SemialgebraicSet::universal(n));
                        }
                    }
                }
            },
            StmtKind::Call { target, name, args } => {
                let fndef = self
                    .fns
                    .iter()
                    .find(|f| &f.name == name)
                    .cloned()
                    .ok_or_else(|| CompileError::Structure {
                        span: stmt.span,
                        msg: format!("call to undefined function `{name}`"),
                    })?;
                if self.call_stack.contains(name) {
                    return Err(CompileError::Structure {
                        span: stmt.span,
                        msg: format!("recursive call to `{name}` cannot be inlined"),
                    });
                }
                if fndef.params.len() != args.len() {
                    return Err(CompileError::Structure {
                        span: stmt.span,
                        msg: format!(
                            "`{name}` takes {} argument(s), got {}",
                            fndef.params.len(),
                            args.len()
                        ),
                    });
                }
                // parameter-binding edge into the function entry node
                let mut updates = Vec::new();
                for (param, arg) in fndef.params.iter().zip(args) {
                    updates.push(self.lower_assignment(param, arg, stmt.span)?);
                }
                let bind = self.label_from_updates(entry, &updates);
                let fentry = self.node(Some(&format!("{}0", fn_prefix(&fndef))), stmt.span)?;
                self.add_edge(entry, fentry, bind, SemialgebraicSet::universal(n));
                let ti = match target {
                    Some(t) => Some(self.env.vars.iter().position(|(v, _)| v == t).ok_or(
                        LowerError::Undeclared { name: t.clone(), span: stmt.span },
                    )?),
                    None => None,
                };
                self.call_stack.push(name.clone());
                let inner_ctx = CallCtx { after: exit, target: ti };
                // the header node flows into the body's first location, so
                // the function's own labels keep one node per line
                if fndef.body.is_empty() {
                    self.add_edge(fentry, exit, self.identity_label(), SemialgebraicSet::universal(n));
                } else {
                    let b0 = self.node(fndef.body[0].label.as_deref(), fndef.body[0].span)?;
                    self.add_edge(fentry, b0, self.identity_label(), SemialgebraicSet::universal(n));
                    self.compile_seq(&fndef.body, b0, exit, Some(inner_ctx))?;
                }
                self.call_stack.pop();
            }
        }
        Ok(())
    }

    /// sites recorded with placeholder node ids during lowering belong to
    /// `node`
    fn rehome_sites(&mut self, node: NodeId) {
        for (nid, _) in self.sites.iter_mut() {
            if *nid == usize::MAX {
                *nid = node;
            }
        }
    }

    /// recognizes `v - (+-1) = 0` over a bool-typed variable; returns the
    /// variable and the negated complement constant
    fn bool_eq(&self, g: &super::lower::GuardVal) -> Option<(usize, Rat)> {
        if g.quad.is_some() {
            return None;
        }
        let nz: Vec<usize> = g
            .aff
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, _)| i)
            .collect();
        if nz.len() != 1 {
            return None;
        }
        let i = nz[0];
        if self.env.vars[i].1 != Ty::Bool {
            return None;
        }
        let coeff = g.aff.coeffs[i].clone();
        let value = -(&g.aff.constant / &coeff); // v == value
        if value == rat(1) {
            Some((i, rat(-1))) // complement pins v = -1 -> v + 1 = 0
        } else if value == rat(-1) {
            Some((i, rat(1)))
        } else {
            None
        }
    }
}

fn fn_prefix(f: &FnDef) -> String {
    f.body
        .first()
        .and_then(|s| s.label.clone())
        .map(|l| l.chars().take_while(|c| c.is_ascii_alphabetic()).collect())
        .unwrap_or_else(|| f.name.chars().take(1).collect::<String>().to_uppercase())
}

pub fn compile_to_graph(ast: &Ast, opts: &CompileOpts) -> Result<Compiled, CompileError> {
    // collect variables: global decls, then decl-statements in order
    let mut vars: Vec<(String, Ty)> = Vec::new();
    let mut add_var = |name: &str, ty: Ty| {
        if !vars.iter().any(|(n, _)| n == name) {
            vars.push((name.to_string(), ty));
        }
    };
    for d in &ast.decls {
        add_var(&d.name, d.ty);
    }
    fn scan(stmts: &[Stmt], add: &mut dyn FnMut(&str, Ty)) {
        for s in stmts {
            match &s.kind {
                StmtKind::DeclAssign(d) => add(&d.name, d.ty),
                StmtKind::While { body, .. } => scan(body, add),
                StmtKind::If { then, els, .. } => {
                    scan(then, add);
                    scan(els, add);
                }
                _ => {}
            }
        }
    }
    scan(&ast.body, &mut add_var);
    for f in &ast.fns {
        for p in &f.params {
            add_var(p, Ty::Int);
        }
        scan(&f.body, &mut add_var);
    }

    let env = LowerEnv {
        vars: vars.clone(),
        named_w: Vec::new(),
        named_v: Vec::new(),
        float: opts.float,
        havoc_bound: opts.havoc_bound.clone(),
    };
    let mut b = Builder {
        opts,
        env,
        node_names: Vec::new(),
        edges: Vec::new(),
        unsafe_sets: Vec::new(),
        sites: Vec::new(),
        terminal: None,
        auto: 0,
        fns: ast.fns.clone(),
        call_stack: Vec::new(),
    };
    let n = vars.len();

    // start node: L0 unless taken
    let start = b.node(Some("L0"), Span { line: 0, col: 0 })?;

    // initial set from global declarations (constants pin coordinates,
    // intervals bound them, everything else defaults to 0; booleans to false)
    let mut init = SemialgebraicSet::universal(n);
    let mut pinned = vec![false; n];
    for d in &ast.decls {
        let i = vars.iter().position(|(v, _)| v == &d.name).unwrap();
        pinned[i] = true;
        match &d.init {
            Init::Interval(lo, hi) => {
                let mut above = AffExpr::var(n, i);
                above.constant = -lo.clone();
                init.lin_ineq.push(above);
                let mut below = AffExpr::var(n, i).neg();
                below.constant = hi.clone();
                init.lin_ineq.push(below);
            }
            Init::Expr(e) => {
                let genv = &b.env;
                let g = super::lower::lower_guard_expr(genv, e)?;
                if g.quad.is_some() {
                    return Err(CompileError::Structure {
                        span: d.span,
                        msg: "global initializers must be affine".into(),
                    });
                }
                let mut eq = AffExpr::var(n, i);
                eq = eq.add(&g.aff.neg());
                init.lin_eq.push(eq);
            }
            Init::Default => {
                let mut eq = AffExpr::var(n, i);
                if d.ty == Ty::Bool {
                    eq.constant = rat(1); // false = -1
                }
                init.lin_eq.push(eq);
            }
        }
    }
    for (i, was_pinned) in pinned.iter().enumerate() {
        if !was_pinned {
            let mut eq = AffExpr::var(n, i);
            if vars[i].1 == Ty::Bool {
                eq.constant = rat(1);
            }
            init.lin_eq.push(eq);
        }
    }

    // body
    if ast.body.is_empty() {
        let term = b.node(Some("exit"), Span { line: 0, col: 0 })?;
        b.add_edge(start, term, TransitionLabel::identity(n), SemialgebraicSet::universal(n));
        b.terminal = Some(term);
    } else {
        let first = b.node(ast.body[0].label.as_deref(), ast.body[0].span)?;
        b.add_edge(start, first, TransitionLabel::identity(n), SemialgebraicSet::universal(n));
        let sink = b.node(Some("exit"), Span { line: 0, col: 0 })?;
        b.compile_seq(&ast.body, first, sink, None)?;
        if b.terminal.is_none() {
            b.terminal = Some(sink);
        } else if b.edges.iter().any(|e| e.from == sink || e.to == sink) {
            // fallthrough path joins the explicit return's terminal
            let t = b.terminal.unwrap();
            b.add_edge(sink, t, TransitionLabel::identity(n), SemialgebraicSet::universal(n));
        }
    }

    let terminal = b.terminal.unwrap();
    // drop isolated helper nodes (e.g. the fallthrough sink when main ends
    // with an explicit return)
    let keep: Vec<usize> = (0..b.node_names.len())
        .filter(|&i| {
            i == start
                || i == terminal
                || b.edges.iter().any(|e| e.from == i || e.to == i)
        })
        .collect();
    let remap = |old: usize| keep.iter().position(|&k| k == old).unwrap();
    let node_names: Vec<String> = keep.iter().map(|&i| b.node_names[i].clone()).collect();
    let unsafe_sets: Vec<Vec<SemialgebraicSet>> =
        keep.iter().map(|&i| b.unsafe_sets[i].clone()).collect();
    let edges: Vec<Edge> = b
        .edges
        .iter()
        .map(|e| Edge {
            from: remap(e.from),
            to: remap(e.to),
            k: e.k,
            label: e.label.clone(),
            passport: e.passport.clone(),
        })
        .collect();
    let sites: Vec<(NodeId, Site)> =
        b.sites.iter().map(|(nid, s)| (remap(*nid), s.clone())).collect();
    let start = remap(start);
    let terminal = remap(terminal);
    let num_nodes = node_names.len();
    let mut invariants = vec![SemialgebraicSet::universal(n); num_nodes];
    invariants[start] = init;
    // booleans satisfy v^2 = 1 everywhere
    for (i, (_, ty)) in vars.iter().enumerate() {
        if *ty == Ty::Bool {
            let v = AffExpr::var(n, i);
            let sq = QuadExpr::product(&v, &v);
            let minus_one = QuadExpr::from_affine(&AffExpr::constant(n, rat(-1)));
            let q = QuadExpr::from_mat(sq.mat.add(&minus_one.mat));
            for inv in invariants.iter_mut() {
                inv.quad_eq.push(q.clone());
            }
        }
    }

    // drop edges into/out of unreachable dangling nodes (e.g. bodies after
    // return): keep it simple, only prune nodes with no path from start
    let model = GraphModel {
        vars: vars.iter().map(|(v, _)| v.clone()).collect(),
        scale: opts.scale.clone(),
        node_names,
        start,
        terminal,
        edges,
        invariants,
        unsafe_sets,
        overflow: None,
    };
    model.validate()?;
    Ok(Compiled { model, sites })
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIVISION: &str = r#"
        int dd = [-32768, 32767];
        int dr = [-32768, 32767];
        F1: int q = 0;
        int r = dd;
        F2: while (r >= dr) {
        F3:   q = q + 1;
        F4:   r = r - dr;
        }
        Fx: return r;
    "#;

    #[test]
    fn division_compiles() {
        let c = compile_source(DIVISION, &CompileOpts::default()).unwrap();
        let m = &c.model;
        let mut names = m.node_names.clone();
        names.sort();
        assert_eq!(names, vec!["F1", "F2", "F3", "F4", "Fx", "L0"]);
        assert_eq!(m.terminal, m.node("Fx").unwrap());
        // integral strict complement: while exit passport is r <= dr - 1
        let f2 = m.node("F2").unwrap();
        let fx = m.node("Fx").unwrap();
        let exit_edge = m.edges.iter().find(|e| e.from == f2 && e.to == fx).unwrap();
        assert_eq!(exit_edge.passport.lin_ineq.len(), 1);
        let e = &exit_edge.passport.lin_ineq[0];
        // dr - r - 1 >= 0
        let dr = m.var("dr").unwrap();
        let r = m.var("r").unwrap();
        assert_eq!(e.coeffs[dr], rat(1));
        assert_eq!(e.coeffs[r], rat(-1));
        assert_eq!(e.constant, rat(-1));
    }

    #[test]
    fn single_assignment_three_nodes() {
        let c = compile_source("int x = [0, 5];\nn1: x = 0;", &CompileOpts::default()).unwrap();
        assert_eq!(c.model.num_nodes(), 3); // L0 -> n1 -> exit
        assert_eq!(c.model.edges.len(), 2);
    }

    #[test]
    fn branch_passports_partition() {
        let src = r#"
            int x = [0, 10];
            a: if (x >= 5) { b: x = x - 5; } else { c: x = x + 1; }
        "#;
        let c = compile_source(src, &CompileOpts::default()).unwrap();
        let m = &c.model;
        let a = m.node("a").unwrap();
        let outs: Vec<_> = m.outgoing(a).collect();
        assert_eq!(outs.len(), 2);
        // complements: x - 5 >= 0 and 4 - x >= 0
        let onto_c = m.edges.iter().find(|e| e.from == a && e.to == m.node("c").unwrap()).unwrap();
        assert_eq!(onto_c.passport.lin_ineq[0].constant, rat(4));
    }

    #[test]
    fn undeclared_variable_is_reported() {
        let err = compile_source("int x;\nx = y + 1;", &CompileOpts::default()).unwrap_err();
        assert!(err.to_string().contains("`y` is not declared"), "{err}");
    }
}
