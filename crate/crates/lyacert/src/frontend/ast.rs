//! Surface syntax of the mini-language (grammar in docs/GRAMMAR.md).

use crate::frontend::lex::Span;
use crate::rat::Rat;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ty {
    Int,
    Real,
    Bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Init {
    /// no initializer: starts at 0 (false for bool)
    Default,
    /// affine expression over previously declared variables
    Expr(Expr),
    /// nondeterministic initial interval
    Interval(Rat, Rat),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decl {
    pub name: String,
    pub ty: Ty,
    pub init: Init,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(Rat),
    Var(String, Span),
    True,
    False,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>, Span),
    /// sin, cos, abs, sign, sqrt, log, mod, input
    Intrinsic(String, Vec<Expr>, Span),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RelOp {
    Le,
    Lt,
    Ge,
    Gt,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cmp {
    pub lhs: Expr,
    pub op: RelOp,
    pub rhs: Expr,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cond {
    True,
    /// conjunction of comparisons
    All(Vec<Cmp>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub label: Option<String>,
    pub kind: StmtKind,
    pub span: Span,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    /// `int q = 0;` inside a body: declares (if new) and assigns
    DeclAssign(Decl),
    Assign { target: String, value: Expr },
    Call { target: Option<String>, name: String, args: Vec<Expr> },
    While { cond: Cond, body: Vec<Stmt> },
    If { cond: Cond, then: Vec<Stmt>, els: Vec<Stmt> },
    Assert { cond: Cond },
    Return { value: Option<Expr> },
    Skip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FnDef {
    pub label: Option<String>,
    pub name: String,
    pub params: Vec<String>,
    pub body: Vec<Stmt>,
    pub span: Span,
}

/// A parsed program: global declarations, function definitions, entry body.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Ast {
    pub decls: Vec<Decl>,
    pub fns: Vec<FnDef>,
    pub body: Vec<Stmt>,
}

impl Ast {
    pub fn count_assignments(&self) -> usize {
        fn walk(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::Assign { .. } => 1,
                    StmtKind::While { body, .. } => walk(body),
                    StmtKind::If { then, els, .. } => walk(then) + walk(els),
                    _ => 0,
                })
                .sum()
        }
        walk(&self.body) + self.fns.iter().map(|f| walk(&f.body)).sum::<usize>()
    }

    pub fn count_whiles(&self) -> usize {
        fn walk(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| match &s.kind {
                    StmtKind::While { body, .. } => 1 + walk(body),
                    StmtKind::If { then, els, .. } => walk(then) + walk(els),
                    _ => 0,
                })
                .sum()
        }
        walk(&self.body) + self.fns.iter().map(|f| walk(&f.body)).sum::<usize>()
    }
}
