//! Lowering of surface expressions into affine updates over
//! (state, uncertainties, binaries), with spliced abstraction fragments for
//! the nonlinear intrinsics, nonlinear-site registration (division, roots,
//! logs), and the rounding-error accounting used by float-semantics models.

use super::ast::{Expr, RelOp, Ty};
use super::lex::Span;
use crate::abstraction::float::FloatFormat;
use crate::model::semialg::{AffExpr, QuadExpr, SemialgebraicSet};
use crate::rat::{rat, ratio, Rat};
use num::{One, Signed, Zero};

#[derive(Debug, thiserror::Error)]
pub enum LowerError {
    #[error("{span}: variable `{name}` is not declared")]
    Undeclared { name: String, span: Span },
    #[error("{span}: unsupported construct: {what}")]
    Unsupported { what: String, span: Span },
    #[error("{span}: guard of degree > 2")]
    GuardDegree { span: Span },
    #[error("{span}: {source}")]
    Abstraction {
        span: Span,
        source: crate::abstraction::nonlinear::AbsError,
    },
    #[error("{span}: float range: {source}")]
    Float {
        span: Span,
        source: crate::abstraction::float::FloatAbsError,
    },
}

/// Nonlinear check sites discovered during lowering (Table-style unsafe-set
/// builders attach to them).
#[derive(Clone, Debug, PartialEq)]
pub enum SiteKind {
    DivByZero,
    EvenRoot,
    Log,
}

#[derive(Clone, Debug)]
pub struct Site {
    pub kind: SiteKind,
    /// the checked operand, affine over the state
    pub operand: AffExpr,
    pub span: Span,
}

#[derive(Clone, Copy, Debug)]
pub struct FloatSemantics {
    pub format: FloatFormat,
    /// certified magnitude bound used for the per-op error radius
    pub range_hint_num: i64,
    pub range_hint_den: i64,
}

impl FloatSemantics {
    pub fn range(&self) -> Rat {
        ratio(self.range_hint_num, self.range_hint_den)
    }
}

#[derive(Clone, Debug)]
pub struct LowerEnv {
    pub vars: Vec<(String, Ty)>,
    /// named uncertainty slots (model-format edges declare them); always the
    /// leading w columns
    pub named_w: Vec<String>,
    /// named binary selectors, always the leading v columns
    pub named_v: Vec<String>,
    pub float: Option<FloatSemantics>,
    /// magnitude used when an assignment must be havoced
    pub havoc_bound: Rat,
}

impl LowerEnv {
    pub fn var(&self, name: &str, span: Span) -> Result<usize, LowerError> {
        self.vars
            .iter()
            .position(|(n, _)| n == name)
            .ok_or(LowerError::Undeclared { name: name.into(), span })
    }
}

/// Affine value over (x | named w | fresh w | fresh v), with fresh slots
/// allocated during lowering of one assignment.
#[derive(Clone, Debug)]
pub struct PendAff {
    pub x: Vec<Rat>,
    pub w: Vec<Rat>,
    pub v: Vec<Rat>,
    pub k: Rat,
}

impl PendAff {
    fn zero(n: usize) -> Self {
        PendAff { x: vec![Rat::zero(); n], w: Vec::new(), v: Vec::new(), k: Rat::zero() }
    }

    fn konst(n: usize, k: Rat) -> Self {
        PendAff { k, ..PendAff::zero(n) }
    }

    fn pad(&mut self, w: usize, v: usize) {
        self.w.resize(w, Rat::zero());
        self.v.resize(v, Rat::zero());
    }

    pub fn add(&self, o: &PendAff) -> PendAff {
        let mut a = self.clone();
        let mut b = o.clone();
        let w = a.w.len().max(b.w.len());
        let v = a.v.len().max(b.v.len());
        a.pad(w, v);
        b.pad(w, v);
        PendAff {
            x: a.x.iter().zip(&b.x).map(|(p, q)| p + q).collect(),
            w: a.w.iter().zip(&b.w).map(|(p, q)| p + q).collect(),
            v: a.v.iter().zip(&b.v).map(|(p, q)| p + q).collect(),
            k: &a.k + &b.k,
        }
    }

    pub fn scaled(&self, s: &Rat) -> PendAff {
        PendAff {
            x: self.x.iter().map(|c| c * s).collect(),
            w: self.w.iter().map(|c| c * s).collect(),
            v: self.v.iter().map(|c| c * s).collect(),
            k: &self.k * s,
        }
    }

    fn is_const(&self) -> Option<&Rat> {
        let z = self.x.iter().all(|c| c.is_zero())
            && self.w.iter().all(|c| c.is_zero())
            && self.v.iter().all(|c| c.is_zero());
        z.then_some(&self.k)
    }

    fn uses_uncertainty(&self) -> bool {
        self.w.iter().any(|c| !c.is_zero()) || self.v.iter().any(|c| !c.is_zero())
    }

    /// materializes over (x, w_total, v_total) once final counts are known
    pub fn to_aff(&self, n: usize, w_total: usize, v_total: usize) -> AffExpr {
        let mut coeffs = vec![Rat::zero(); n + w_total + v_total];
        coeffs[..n].clone_from_slice(&self.x);
        for (i, c) in self.w.iter().enumerate() {
            coeffs[n + i] = c.clone();
        }
        for (i, c) in self.v.iter().enumerate() {
            coeffs[n + w_total + i] = c.clone();
        }
        AffExpr { coeffs, constant: self.k.clone() }
    }
}

/// One lowered assignment right-hand side: an affine *pending* value plus the
/// constraints its abstraction fragments introduced.
pub struct Lowered {
    pub out: PendAff,
    pub w_count: usize,
    pub v_count: usize,
    pub aff_eq: Vec<PendAff>,
    pub aff_ineq: Vec<PendAff>,
    /// quadratic constraints as (a, b, c) meaning a*b + c >= 0 / == 0 with
    /// a, b, c pending-affine (enough for xv-style couplings)
    pub quad_eq: Vec<(PendAff, PendAff, PendAff)>,
    pub quad_ineq: Vec<(PendAff, PendAff, PendAff)>,
    pub sites: Vec<Site>,
    /// accumulated rounding-error radius when float semantics are on
    pub float_delta: Rat,
    /// interval bound of the value (for float accounting)
    pub interval: (Rat, Rat),
}

pub struct AsgCtx<'e> {
    pub env: &'e LowerEnv,
    pub w_count: usize,
    pub v_count: usize,
    pub aff_eq: Vec<PendAff>,
    pub aff_ineq: Vec<PendAff>,
    pub quad_eq: Vec<(PendAff, PendAff, PendAff)>,
    pub quad_ineq: Vec<(PendAff, PendAff, PendAff)>,
    pub sites: Vec<Site>,
    pub float_delta: Rat,
}

impl<'e> AsgCtx<'e> {
    pub fn new(env: &'e LowerEnv) -> Self {
        AsgCtx {
            env,
            w_count: env.named_w.len(),
            v_count: env.named_v.len(),
            aff_eq: Vec::new(),
            aff_ineq: Vec::new(),
            quad_eq: Vec::new(),
            quad_ineq: Vec::new(),
            sites: Vec::new(),
            float_delta: Rat::zero(),
        }
    }

    fn n(&self) -> usize {
        self.env.vars.len()
    }

    /// allocates a fresh uncertainty slot (needed by float-error columns)
    pub fn alloc_w(&mut self) -> PendAff {
        self.fresh_w()
    }

    pub fn take_float_delta(&mut self) -> Rat {
        std::mem::take(&mut self.float_delta)
    }

    fn fresh_w(&mut self) -> PendAff {
        let mut p = PendAff::zero(self.n());
        p.w.resize(self.w_count + 1, Rat::zero());
        p.w[self.w_count] = Rat::one();
        self.w_count += 1;
        p
    }

    fn fresh_v(&mut self) -> PendAff {
        let mut p = PendAff::zero(self.n());
        p.v.resize(self.v_count + 1, Rat::zero());
        p.v[self.v_count] = Rat::one();
        self.v_count += 1;
        p
    }

    /// accounts one arithmetic op producing a value within `iv`
    fn float_op(&mut self, iv: &(Rat, Rat), span: Span) -> Result<Rat, LowerError> {
        let Some(fs) = &self.env.float else {
            return Ok(Rat::zero());
        };
        let mag = iv.0.abs().max(iv.1.abs());
        let d = fs
            .format
            .delta(&mag)
            .map_err(|source| LowerError::Float { span, source })?;
        self.float_delta += &d;
        Ok(d)
    }

    pub fn lower(&mut self, e: &Expr) -> Result<(PendAff, (Rat, Rat)), LowerError> {
        let n = self.n();
        let r = self
            .env
            .float
            .as_ref()
            .map(|f| f.range())
            .unwrap_or_else(Rat::zero);
        match e {
            Expr::Num(v) => Ok((PendAff::konst(n, v.clone()), (v.clone(), v.clone()))),
            Expr::True => Ok((PendAff::konst(n, rat(1)), (rat(1), rat(1)))),
            Expr::False => Ok((PendAff::konst(n, rat(-1)), (rat(-1), rat(-1)))),
            Expr::Var(name, span) => {
                if let Some(i) = self.env.vars.iter().position(|(v, _)| v == name) {
                    let mut p = PendAff::zero(n);
                    p.x[i] = Rat::one();
                    return Ok((p, (-r.clone(), r.clone())));
                }
                if let Some(wi) = self.env.named_w.iter().position(|w| w == name) {
                    let mut p = PendAff::zero(n);
                    p.w.resize(wi + 1, Rat::zero());
                    p.w[wi] = Rat::one();
                    return Ok((p, (rat(-1), rat(1))));
                }
                if let Some(vi) = self.env.named_v.iter().position(|v| v == name) {
                    let mut p = PendAff::zero(n);
                    p.v.resize(vi + 1, Rat::zero());
                    p.v[vi] = Rat::one();
                    return Ok((p, (rat(-1), rat(1))));
                }
                Err(LowerError::Undeclared { name: name.clone(), span: *span })
            }
            Expr::Neg(inner) => {
                let (p, iv) = self.lower(inner)?;
                Ok((p.scaled(&rat(-1)), (-iv.1, -iv.0)))
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                let sub = matches!(e, Expr::Sub(..));
                let (pa, ia) = self.lower(a)?;
                let (pb, ib) = self.lower(b)?;
                let pb = if sub { pb.scaled(&rat(-1)) } else { pb };
                let ib = if sub { (-ib.1, -ib.0) } else { ib };
                let p = pa.add(&pb);
                let mut iv = (ia.0 + ib.0, ia.1 + ib.1);
                // one rounding op unless folding constants
                if !(pa_is_const(a) && pa_is_const(b)) {
                    let d = self.float_op(&iv, Span { line: 0, col: 0 })?;
                    iv = (iv.0 - d.clone(), iv.1 + d);
                }
                Ok((p, iv))
            }
            Expr::Mul(a, b) => {
                let (pa, ia) = self.lower(a)?;
                let (pb, ib) = self.lower(b)?;
                match (pa.is_const(), pb.is_const()) {
                    (Some(ca), _) => {
                        let ca = ca.clone();
                        let p = pb.scaled(&ca);
                        let mut iv = scale_interval(&ib, &ca);
                        if !pa_is_const(b) {
                            let d = self.float_op(&iv, Span { line: 0, col: 0 })?;
                            iv = (iv.0 - d.clone(), iv.1 + d);
                        }
                        Ok((p, iv))
                    }
                    (_, Some(cb)) => {
                        let cb = cb.clone();
                        let p = pa.scaled(&cb);
                        let mut iv = scale_interval(&ia, &cb);
                        if !pa_is_const(a) {
                            let d = self.float_op(&iv, Span { line: 0, col: 0 })?;
                            iv = (iv.0 - d.clone(), iv.1 + d);
                        }
                        Ok((p, iv))
                    }
                    (None, None) => Err(LowerError::Unsupported {
                        what: "product of two non-constant expressions in an assignment \
                               (rewrite via an abstraction or a guard)"
                            .into(),
                        span: Span { line: 0, col: 0 },
                    }),
                }
            }
            Expr::Div(a, b, span) => {
                let (pa, ia) = self.lower(a)?;
                let (pb, _) = self.lower(b)?;
                match pb.is_const() {
                    Some(c) if !c.is_zero() => {
                        let inv = Rat::one() / c.clone();
                        let p = pa.scaled(&inv);
                        let mut iv = scale_interval(&ia, &inv);
                        let d = self.float_op(&iv, *span)?;
                        iv = (iv.0 - d.clone(), iv.1 + d);
                        Ok((p, iv))
                    }
                    Some(_) => Err(LowerError::Unsupported {
                        what: "division by the constant 0".into(),
                        span: *span,
                    }),
                    None => {
                        // variable divisor: record the div-by-zero site and
                        // havoc the value
                        if pb.uses_uncertainty() {
                            return Err(LowerError::Unsupported {
                                what: "division by an uncertain expression".into(),
                                span: *span,
                            });
                        }
                        self.sites.push(Site {
                            kind: SiteKind::DivByZero,
                            operand: AffExpr {
                                coeffs: pb.x.clone(),
                                constant: pb.k.clone(),
                            },
                            span: *span,
                        });
                        let bound = self.env.havoc_bound.clone();
                        let w = self.fresh_w();
                        Ok((w.scaled(&bound), (-bound.clone(), bound)))
                    }
                }
            }
            Expr::Intrinsic(name, args, span) => self.intrinsic(name, args, *span),
        }
    }

    fn intrinsic(
        &mut self,
        name: &str,
        args: &[Expr],
        span: Span,
    ) -> Result<(PendAff, (Rat, Rat)), LowerError> {
        let arity_err = |want: usize| LowerError::Unsupported {
            what: format!("`{name}` takes {want} argument(s)"),
            span,
        };
        match name {
            "input" => {
                if args.len() != 2 {
                    return Err(arity_err(2));
                }
                let lo = const_of(self, &args[0], span)?;
                let hi = const_of(self, &args[1], span)?;
                let mid = (&lo + &hi) * ratio(1, 2);
                let rad = (&hi - &lo) * ratio(1, 2);
                let w = self.fresh_w();
                Ok((w.scaled(&rad).add(&PendAff::konst(self.n(), mid)), (lo, hi)))
            }
            "sin" | "cos" => {
                if args.len() != 1 {
                    return Err(arity_err(1));
                }
                // argument evaluated but abstracted by the global bound
                let _ = self.lower(&args[0])?;
                let w = self.fresh_w();
                if name == "sin" {
                    Ok((w, (rat(-1), rat(1))))
                } else {
                    Ok((w, (rat(-1), rat(1))))
                }
            }
            "sign" => {
                if args.len() != 1 {
                    return Err(arity_err(1));
                }
                let (pa, _) = self.lower(&args[0])?;
                if pa.uses_uncertainty() {
                    return Err(LowerError::Unsupported {
                        what: "sign of an uncertain expression".into(),
                        span,
                    });
                }
                let v = self.fresh_v();
                // (arg) * v >= 0
                self.quad_ineq.push((pa, v.clone(), PendAff::zero(self.n())));
                Ok((v, (rat(-1), rat(1))))
            }
            "abs" => {
                if args.len() != 1 {
                    return Err(arity_err(1));
                }
                let (pa, _) = self.lower(&args[0])?;
                if pa.uses_uncertainty() {
                    return Err(LowerError::Unsupported {
                        what: "abs of an uncertain expression".into(),
                        span,
                    });
                }
                // u = arg * v with x-balance arg = (v + w)/2; output u
                let w = self.fresh_w();
                let u = self.fresh_w();
                let v = self.fresh_v();
                let half = ratio(1, 2);
                // arg - v/2 - w/2 = 0
                self.aff_eq.push(
                    pa.add(&v.scaled(&-half.clone())).add(&w.scaled(&-half)),
                );
                // u - arg*v = 0  ->  (arg)*(v)*(-1) + u = 0
                self.quad_eq.push((pa.scaled(&rat(-1)), v, u.clone()));
                Ok((u, (rat(0), rat(1))))
            }
            "mod" => {
                if args.len() != 2 {
                    return Err(arity_err(2));
                }
                Err(LowerError::Unsupported {
                    what: "mod in program text: splice the relation from the abstraction \
                           toolkit as a model edge instead"
                        .into(),
                    span,
                })
            }
            "sqrt" | "log" => {
                if args.len() != 1 {
                    return Err(arity_err(1));
                }
                let (pa, _) = self.lower(&args[0])?;
                if pa.uses_uncertainty() {
                    return Err(LowerError::Unsupported {
                        what: format!("{name} of an uncertain expression"),
                        span,
                    });
                }
                self.sites.push(Site {
                    kind: if name == "sqrt" { SiteKind::EvenRoot } else { SiteKind::Log },
                    operand: AffExpr { coeffs: pa.x.clone(), constant: pa.k.clone() },
                    span,
                });
                let bound = self.env.havoc_bound.clone();
                let w = self.fresh_w();
                Ok((w.scaled(&bound), (-bound.clone(), bound)))
            }
            other => Err(LowerError::Unsupported {
                what: format!("intrinsic `{other}`"),
                span,
            }),
        }
    }

    pub fn finish(self, out: PendAff, interval: (Rat, Rat)) -> Lowered {
        Lowered {
            out,
            w_count: self.w_count,
            v_count: self.v_count,
            aff_eq: self.aff_eq,
            aff_ineq: self.aff_ineq,
            quad_eq: self.quad_eq,
            quad_ineq: self.quad_ineq,
            sites: self.sites,
            float_delta: self.float_delta,
            interval,
        }
    }
}

fn pa_is_const(e: &Expr) -> bool {
    matches!(e, Expr::Num(_) | Expr::True | Expr::False)
}

fn scale_interval(iv: &(Rat, Rat), s: &Rat) -> (Rat, Rat) {
    if s.is_negative() {
        (&iv.1 * s, &iv.0 * s)
    } else {
        (&iv.0 * s, &iv.1 * s)
    }
}

fn const_of(ctx: &mut AsgCtx, e: &Expr, span: Span) -> Result<Rat, LowerError> {
    let (p, _) = ctx.lower(e)?;
    p.is_const().cloned().ok_or(LowerError::Unsupported {
        what: "expected a constant expression".into(),
        span,
    })
}

/// Lowers a guard side to a quadratic-capable form over the state alone.
pub struct GuardVal {
    pub aff: AffExpr,
    /// optional purely-quadratic part
    pub quad: Option<QuadExpr>,
}

pub fn lower_guard_expr(env: &LowerEnv, e: &Expr) -> Result<GuardVal, LowerError> {
    let n = env.vars.len();
    match e {
        Expr::Num(v) => Ok(GuardVal { aff: AffExpr::constant(n, v.clone()), quad: None }),
        Expr::True => Ok(GuardVal { aff: AffExpr::constant(n, rat(1)), quad: None }),
        Expr::False => Ok(GuardVal { aff: AffExpr::constant(n, rat(-1)), quad: None }),
        Expr::Var(name, span) => {
            let i = env.var(name, *span)?;
            Ok(GuardVal { aff: AffExpr::var(n, i), quad: None })
        }
        Expr::Neg(inner) => {
            let g = lower_guard_expr(env, inner)?;
            Ok(GuardVal {
                aff: g.aff.neg(),
                quad: g.quad.map(|q| QuadExpr::from_mat(q.mat.scaled(&rat(-1)))),
            })
        }
        Expr::Add(a, b) | Expr::Sub(a, b) => {
            let ga = lower_guard_expr(env, a)?;
            let gb = lower_guard_expr(env, b)?;
            let gb = if matches!(e, Expr::Sub(..)) {
                GuardVal {
                    aff: gb.aff.neg(),
                    quad: gb.quad.map(|q| QuadExpr::from_mat(q.mat.scaled(&rat(-1)))),
                }
            } else {
                gb
            };
            let quad = match (ga.quad, gb.quad) {
                (None, None) => None,
                (Some(q), None) | (None, Some(q)) => Some(q),
                (Some(p), Some(q)) => Some(QuadExpr::from_mat(p.mat.add(&q.mat))),
            };
            Ok(GuardVal { aff: ga.aff.add(&gb.aff), quad })
        }
        Expr::Mul(a, b) => {
            let ga = lower_guard_expr(env, a)?;
            let gb = lower_guard_expr(env, b)?;
            let const_a = is_const_aff(&ga);
            let const_b = is_const_aff(&gb);
            match (const_a, const_b) {
                (Some(c), _) => scale_guard(gb, &c, e),
                (_, Some(c)) => scale_guard(ga, &c, e),
                (None, None) => {
                    if ga.quad.is_some() || gb.quad.is_some() {
                        return Err(LowerError::GuardDegree { span: Span { line: 0, col: 0 } });
                    }
                    Ok(GuardVal {
                        aff: AffExpr::zero(ga.aff.dim()),
                        quad: Some(QuadExpr::product(&ga.aff, &gb.aff)),
                    })
                }
            }
        }
        Expr::Div(a, b, span) => {
            let ga = lower_guard_expr(env, a)?;
            let gb = lower_guard_expr(env, b)?;
            match is_const_aff(&gb) {
                Some(c) if !c.is_zero() => scale_guard(ga, &(Rat::one() / c), e),
                _ => Err(LowerError::Unsupported {
                    what: "division inside a guard".into(),
                    span: *span,
                }),
            }
        }
        Expr::Intrinsic(_, _, span) => Err(LowerError::Unsupported {
            what: "intrinsic call inside a guard".into(),
            span: *span,
        }),
    }
}

fn is_const_aff(g: &GuardVal) -> Option<Rat> {
    if g.quad.is_some() {
        return None;
    }
    g.aff.coeffs.iter().all(|c| c.is_zero()).then(|| g.aff.constant.clone())
}

fn scale_guard(g: GuardVal, c: &Rat, _e: &Expr) -> Result<GuardVal, LowerError> {
    Ok(GuardVal {
        aff: g.aff.scaled(c),
        quad: g.quad.map(|q| QuadExpr::from_mat(q.mat.scaled(c))),
    })
}

/// difference lhs - rhs as a guard value
pub fn guard_diff(env: &LowerEnv, lhs: &Expr, rhs: &Expr) -> Result<GuardVal, LowerError> {
    let a = lower_guard_expr(env, lhs)?;
    let b = lower_guard_expr(env, rhs)?;
    let quad = match (a.quad, b.quad) {
        (None, None) => None,
        (Some(q), None) => Some(q),
        (None, Some(q)) => Some(QuadExpr::from_mat(q.mat.scaled(&rat(-1)))),
        (Some(p), Some(q)) => Some(QuadExpr::from_mat(p.mat.sub(&q.mat))),
    };
    Ok(GuardVal { aff: a.aff.add(&b.aff.neg()), quad })
}

/// Whether a guard difference is integral (all-integer coefficients over
/// int-typed variables), enabling the exact strict-inequality gap of 1.
pub fn integral_guard(env: &LowerEnv, g: &GuardVal) -> bool {
    if g.quad.is_some() {
        return false;
    }
    g.aff
        .coeffs
        .iter()
        .enumerate()
        .all(|(i, c)| c.is_zero() || (c.denom().is_one() && env.vars[i].1 == Ty::Int))
        && g.aff.constant.denom().is_one()
}

/// Materializes a comparison `diff(op) 0` into constraints added onto a set:
/// `strict_gap` is used to close strict inequalities.
pub fn add_cmp(
    set: &mut SemialgebraicSet,
    g: &GuardVal,
    op: RelOp,
    strict_gap: &Rat,
    negate: bool,
) {
    // normalized: diff >= 0 (Ge), diff <= 0 (Le), diff == 0 (Eq), strict
    // versions closed by the gap
    let (aff, quad) = (&g.aff, &g.quad);
    let dim = aff.dim();
    let push = |set: &mut SemialgebraicSet, aff: AffExpr, quad: Option<QuadExpr>, eq: bool| {
        match (quad, eq) {
            (None, false) => set.lin_ineq.push(aff),
            (None, true) => set.lin_eq.push(aff),
            (Some(q), false) => {
                let mut m = q.mat.clone();
                let full = QuadExpr::from_affine(&aff);
                m = m.add(&full.mat);
                set.quad_ineq.push(QuadExpr::from_mat(m));
            }
            (Some(q), true) => {
                let mut m = q.mat.clone();
                let full = QuadExpr::from_affine(&aff);
                m = m.add(&full.mat);
                set.quad_eq.push(QuadExpr::from_mat(m));
            }
        }
    };
    let minus = |aff: &AffExpr, quad: &Option<QuadExpr>| {
        (
            aff.neg(),
            quad.as_ref().map(|q| QuadExpr::from_mat(q.mat.scaled(&rat(-1)))),
        )
    };
    let shift = |aff: AffExpr, by: &Rat| AffExpr {
        constant: &aff.constant - by,
        coeffs: aff.coeffs,
    };
    let effective = if negate {
        match op {
            RelOp::Ge => RelOp::Lt,
            RelOp::Gt => RelOp::Le,
            RelOp::Le => RelOp::Gt,
            RelOp::Lt => RelOp::Ge,
            RelOp::Eq => {
                // complement of an equality is not conjunctive; callers split
                // it into two shifted inequalities
                unreachable!("negated equality must be split by the caller")
            }
        }
    } else {
        op
    };
    match effective {
        RelOp::Ge => push(set, aff.clone(), quad.clone(), false),
        RelOp::Gt => push(set, shift(aff.clone(), strict_gap), quad.clone(), false),
        RelOp::Le => {
            let (a, q) = minus(aff, quad);
            push(set, a, q, false);
        }
        RelOp::Lt => {
            let (a, q) = minus(aff, quad);
            push(set, shift(a, strict_gap), q, false);
        }
        RelOp::Eq => {
            let _ = dim;
            push(set, aff.clone(), quad.clone(), true);
        }
    }
}
