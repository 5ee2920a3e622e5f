//! Recursive-descent parser for the mini-language.

use super::ast::*;
use super::lex::{tokenize, Span, Tok};
use crate::rat::parse_rat;

#[derive(Debug, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {0}: {1}")]
    Syntax(Span, String),
    #[error(transparent)]
    Lex(#[from] super::lex::LexError),
}

pub struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    /// entry point for embedded expression/comparison parsing (model files)
    pub fn from_tokens(toks: Vec<(Tok, Span)>) -> Self {
        Parser { toks, pos: 0 }
    }

    pub fn expect_end(&self) -> Result<(), ParseError> {
        if self.done() {
            Ok(())
        } else {
            Err(ParseError::Syntax(self.here(), "trailing tokens".into()))
        }
    }

    pub fn try_andand(&mut self) -> bool {
        if matches!(self.peek(), Some(Tok::AndAnd)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }
}

const INTRINSICS: &[&str] = &["sin", "cos", "abs", "sign", "sqrt", "log", "mod", "input"];

pub fn parse_program(src: &str) -> Result<Ast, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut ast = Ast::default();
    while !p.done() {
        if p.peek_ident_is("fn") {
            ast.fns.push(p.fn_def()?);
        } else if p.peek_type().is_some() && ast.body.is_empty() && !p.peek_is_labeled_type() {
            ast.decls.push(p.decl()?);
        } else {
            ast.body.push(p.stmt()?);
        }
    }
    Ok(ast)
}

impl Parser {
    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn here(&self) -> Span {
        self.toks
            .get(self.pos)
            .or(self.toks.last())
            .map(|(_, s)| *s)
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError::Syntax(self.here(), msg.into()))
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(t, _)| t.clone());
        self.pos += 1;
        t
    }

    fn eat_punct(&mut self, c: char) -> Result<(), ParseError> {
        match self.peek() {
            Some(Tok::Punct(p)) if *p == c => {
                self.pos += 1;
                Ok(())
            }
            other => self.err(format!("expected `{c}`, found {other:?}")),
        }
    }

    fn peek_ident_is(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                Ok(s)
            }
            other => self.err(format!("expected identifier, found {other:?}")),
        }
    }

    fn peek_type(&self) -> Option<Ty> {
        match self.peek() {
            Some(Tok::Ident(s)) => match s.as_str() {
                "int" => Some(Ty::Int),
                "real" | "float" | "double" => Some(Ty::Real),
                "bool" => Some(Ty::Bool),
                _ => None,
            },
            _ => None,
        }
    }

    /// `IDENT :` followed by a type keyword means a labeled decl-statement.
    fn peek_is_labeled_type(&self) -> bool {
        false
    }

    fn num(&mut self) -> Result<crate::rat::Rat, ParseError> {
        let negate = matches!(self.peek(), Some(Tok::Punct('-')));
        if negate {
            self.pos += 1;
        }
        match self.peek().cloned() {
            Some(Tok::Num(s)) => {
                self.pos += 1;
                let v = parse_rat(&s)
                    .map_err(|e| ParseError::Syntax(self.here(), e.to_string()))?;
                Ok(if negate { -v } else { v })
            }
            other => self.err(format!("expected number, found {other:?}")),
        }
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        let span = self.here();
        let ty = self.peek_type().expect("checked by caller");
        self.pos += 1;
        let name = self.ident()?;
        let init = if matches!(self.peek(), Some(Tok::Punct('='))) {
            self.pos += 1;
            if matches!(self.peek(), Some(Tok::Punct('['))) {
                self.eat_punct('[')?;
                let lo = self.num()?;
                self.eat_punct(',')?;
                let hi = self.num()?;
                self.eat_punct(']')?;
                Init::Interval(lo, hi)
            } else {
                Init::Expr(self.expr()?)
            }
        } else {
            Init::Default
        };
        self.eat_punct(';')?;
        Ok(Decl { name, ty, init, span })
    }

    fn fn_def(&mut self) -> Result<FnDef, ParseError> {
        let span = self.here();
        self.pos += 1; // fn
        let name = self.ident()?;
        self.eat_punct('(')?;
        let mut params = Vec::new();
        if !matches!(self.peek(), Some(Tok::Punct(')'))) {
            loop {
                // optional type keyword before a parameter name
                if self.peek_type().is_some() && matches!(self.peek2(), Some(Tok::Ident(_))) {
                    self.pos += 1;
                }
                params.push(self.ident()?);
                if matches!(self.peek(), Some(Tok::Punct(','))) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
        }
        self.eat_punct(')')?;
        let body = self.block()?;
        Ok(FnDef { label: None, name, params, body, span })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.eat_punct('{')?;
        let mut out = Vec::new();
        while !matches!(self.peek(), Some(Tok::Punct('}'))) {
            if self.done() {
                return self.err("unclosed block");
            }
            out.push(self.stmt()?);
        }
        self.pos += 1;
        Ok(out)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        let span = self.here();
        // label?
        let label = if matches!(self.peek(), Some(Tok::Ident(_)))
            && matches!(self.peek2(), Some(Tok::Punct(':')))
        {
            let l = self.ident()?;
            self.pos += 1; // ':'
            Some(l)
        } else {
            None
        };
        let kind = self.stmt_kind()?;
        Ok(Stmt { label, kind, span })
    }

    fn stmt_kind(&mut self) -> Result<StmtKind, ParseError> {
        if let Some(_ty) = self.peek_type() {
            let d = self.decl()?;
            return Ok(StmtKind::DeclAssign(d));
        }
        match self.peek().cloned() {
            Some(Tok::Ident(kw)) if kw == "while" => {
                self.pos += 1;
                self.eat_punct('(')?;
                let cond = self.cond()?;
                self.eat_punct(')')?;
                let body = self.block()?;
                Ok(StmtKind::While { cond, body })
            }
            Some(Tok::Ident(kw)) if kw == "if" => {
                self.pos += 1;
                self.eat_punct('(')?;
                let cond = self.cond()?;
                self.eat_punct(')')?;
                let then = self.block()?;
                let els = if self.peek_ident_is("else") {
                    self.pos += 1;
                    if self.peek_ident_is("if") {
                        vec![self.stmt()?]
                    } else {
                        self.block()?
                    }
                } else {
                    Vec::new()
                };
                Ok(StmtKind::If { cond, then, els })
            }
            Some(Tok::Ident(kw)) if kw == "assert" => {
                self.pos += 1;
                self.eat_punct('(')?;
                let cond = self.cond()?;
                self.eat_punct(')')?;
                self.eat_punct(';')?;
                Ok(StmtKind::Assert { cond })
            }
            Some(Tok::Ident(kw)) if kw == "return" => {
                self.pos += 1;
                let value = if matches!(self.peek(), Some(Tok::Punct(';'))) {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.eat_punct(';')?;
                Ok(StmtKind::Return { value })
            }
            Some(Tok::Ident(kw)) if kw == "skip" => {
                self.pos += 1;
                self.eat_punct(';')?;
                Ok(StmtKind::Skip)
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                self.eat_punct('=')?;
                // call or expression
                if let (Some(Tok::Ident(fname)), Some(Tok::Punct('('))) =
                    (self.peek(), self.peek2())
                {
                    let fname = fname.clone();
                    if !INTRINSICS.contains(&fname.as_str()) {
                        self.pos += 2;
                        let mut args = Vec::new();
                        if !matches!(self.peek(), Some(Tok::Punct(')'))) {
                            loop {
                                args.push(self.expr()?);
                                if matches!(self.peek(), Some(Tok::Punct(','))) {
                                    self.pos += 1;
                                } else {
                                    break;
                                }
                            }
                        }
                        self.eat_punct(')')?;
                        self.eat_punct(';')?;
                        return Ok(StmtKind::Call { target: Some(name), name: fname, args });
                    }
                }
                let value = self.expr()?;
                self.eat_punct(';')?;
                Ok(StmtKind::Assign { target: name, value })
            }
            other => self.err(format!("expected statement, found {other:?}")),
        }
    }

    fn cond(&mut self) -> Result<Cond, ParseError> {
        // special forms: `1`, `true`
        if matches!(self.peek(), Some(Tok::Num(s)) if s == "1")
            && matches!(self.peek2(), Some(Tok::Punct(')')))
        {
            self.pos += 1;
            return Ok(Cond::True);
        }
        if self.peek_ident_is("true") && matches!(self.peek2(), Some(Tok::Punct(')'))) {
            self.pos += 1;
            return Ok(Cond::True);
        }
        let mut cmps = vec![self.cmp()?];
        while matches!(self.peek(), Some(Tok::AndAnd)) {
            self.pos += 1;
            cmps.push(self.cmp()?);
        }
        Ok(Cond::All(cmps))
    }

    pub fn cmp(&mut self) -> Result<Cmp, ParseError> {
        let span = self.here();
        let lhs = self.expr()?;
        let op = match self.next() {
            Some(Tok::Le) => RelOp::Le,
            Some(Tok::Ge) => RelOp::Ge,
            Some(Tok::EqEq) => RelOp::Eq,
            Some(Tok::Punct('<')) => RelOp::Lt,
            Some(Tok::Punct('>')) => RelOp::Gt,
            Some(Tok::Ne) => {
                return self.err("`!=` guards are not supported (not a closed set)")
            }
            other => return self.err(format!("expected comparison operator, found {other:?}")),
        };
        let rhs = self.expr()?;
        Ok(Cmp { lhs, op, rhs, span })
    }

    pub fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Punct('+')) => {
                    self.pos += 1;
                    e = Expr::Add(Box::new(e), Box::new(self.term()?));
                }
                Some(Tok::Punct('-')) => {
                    self.pos += 1;
                    e = Expr::Sub(Box::new(e), Box::new(self.term()?));
                }
                _ => return Ok(e),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut e = self.factor()?;
        loop {
            match self.peek() {
                Some(Tok::Punct('*')) => {
                    self.pos += 1;
                    e = Expr::Mul(Box::new(e), Box::new(self.factor()?));
                }
                Some(Tok::Punct('/')) => {
                    let span = self.here();
                    self.pos += 1;
                    e = Expr::Div(Box::new(e), Box::new(self.factor()?), span);
                }
                _ => return Ok(e),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let span = self.here();
        match self.next() {
            Some(Tok::Num(s)) => Ok(Expr::Num(
                parse_rat(&s).map_err(|e| ParseError::Syntax(span, e.to_string()))?,
            )),
            Some(Tok::Punct('-')) => Ok(Expr::Neg(Box::new(self.factor()?))),
            Some(Tok::Punct('(')) => {
                let e = self.expr()?;
                self.eat_punct(')')?;
                Ok(e)
            }
            Some(Tok::Ident(s)) if s == "true" => Ok(Expr::True),
            Some(Tok::Ident(s)) if s == "false" => Ok(Expr::False),
            Some(Tok::Ident(s)) => {
                if matches!(self.peek(), Some(Tok::Punct('('))) {
                    if !INTRINSICS.contains(&s.as_str()) {
                        return Err(ParseError::Syntax(
                            span,
                            format!(
                                "unsupported construct: call `{s}` may only appear alone on \
                                 the right-hand side of an assignment"
                            ),
                        ));
                    }
                    self.pos += 1;
                    let mut args = Vec::new();
                    if !matches!(self.peek(), Some(Tok::Punct(')'))) {
                        loop {
                            args.push(self.expr()?);
                            if matches!(self.peek(), Some(Tok::Punct(','))) {
                                self.pos += 1;
                            } else {
                                break;
                            }
                        }
                    }
                    self.eat_punct(')')?;
                    Ok(Expr::Intrinsic(s, args, span))
                } else {
                    Ok(Expr::Var(s, span))
                }
            }
            other => Err(ParseError::Syntax(span, format!("expected expression, found {other:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const PROGRAM_DIVISION: &str = r#"
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
    fn division_ast_shape() {
        let ast = parse_program(PROGRAM_DIVISION).unwrap();
        let decl_stmts = ast
            .body
            .iter()
            .filter(|s| matches!(s.kind, StmtKind::DeclAssign(_)))
            .count();
        assert_eq!(ast.decls.len() + decl_stmts, 4, "4 int variables");
        assert_eq!(ast.count_whiles(), 1);
        assert_eq!(ast.count_assignments(), 2);
    }

    #[test]
    fn empty_body_is_fine() {
        let ast = parse_program("int x = 3;\nreal y;").unwrap();
        assert_eq!(ast.decls.len(), 2);
        assert!(ast.body.is_empty());
    }

    #[test]
    fn syntax_error_carries_position() {
        let err = parse_program("while (").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("syntax error at 1:"), "{msg}");
    }

    #[test]
    fn labels_and_calls() {
        let src = r#"
            int X = [1, 10];
            fn f(a) { Fx: return a; }
            L3: X = f(X);
        "#;
        let ast = parse_program(src).unwrap();
        assert_eq!(ast.fns.len(), 1);
        assert!(matches!(
            &ast.body[0].kind,
            StmtKind::Call { target: Some(t), name, .. } if t == "X" && name == "f"
        ));
        assert_eq!(ast.body[0].label.as_deref(), Some("L3"));
    }
}
