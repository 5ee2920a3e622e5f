//! Shared tokenizer for the mini-language and the model file format.

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Num(String),
    /// single-character punctuation: ( ) { } [ ] ; , : ' = < > + - * /
    Punct(char),
    Le,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    Arrow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

impl std::fmt::Display for Span {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("syntax error at {span}: {msg}")]
pub struct LexError {
    pub span: Span,
    pub msg: String,
}

pub fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, LexError> {
    let mut out = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut it = src.chars().peekable();
    while let Some(&ch) = it.peek() {
        let span = Span { line, col };
        let bump = |it: &mut std::iter::Peekable<std::str::Chars>, line: &mut usize, col: &mut usize| {
            let c = it.next().unwrap();
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            c
        };
        match ch {
            c if c.is_whitespace() => {
                bump(&mut it, &mut line, &mut col);
            }
            '#' => {
                while let Some(&c) = it.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump(&mut it, &mut line, &mut col);
                }
            }
            '/' => {
                bump(&mut it, &mut line, &mut col);
                if it.peek() == Some(&'/') {
                    while let Some(&c) = it.peek() {
                        if c == '\n' {
                            break;
                        }
                        bump(&mut it, &mut line, &mut col);
                    }
                } else if it.peek() == Some(&'*') {
                    bump(&mut it, &mut line, &mut col);
                    let mut prev = ' ';
                    loop {
                        match it.peek() {
                            None => {
                                return Err(LexError { span, msg: "unterminated comment".into() })
                            }
                            Some(&c) => {
                                bump(&mut it, &mut line, &mut col);
                                if prev == '*' && c == '/' {
                                    break;
                                }
                                prev = c;
                            }
                        }
                    }
                } else {
                    out.push((Tok::Punct('/'), span));
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = it.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' {
                        s.push(bump(&mut it, &mut line, &mut col));
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(s), span));
            }
            c if c.is_ascii_digit() => {
                let mut s = String::new();
                while let Some(&c) = it.peek() {
                    if c.is_ascii_digit() || c == '.' {
                        s.push(bump(&mut it, &mut line, &mut col));
                    } else if (c == 'e' || c == 'E')
                        && s.chars().all(|d| d.is_ascii_digit() || d == '.')
                    {
                        // exponent, possibly signed
                        s.push(bump(&mut it, &mut line, &mut col));
                        if let Some(&sign) = it.peek() {
                            if sign == '+' || sign == '-' {
                                s.push(bump(&mut it, &mut line, &mut col));
                            }
                        }
                    } else {
                        break;
                    }
                }
                out.push((Tok::Num(s), span));
            }
            '<' | '>' | '=' | '!' | '&' | '-' => {
                let c = bump(&mut it, &mut line, &mut col);
                let next = it.peek().copied();
                match (c, next) {
                    ('<', Some('=')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::Le, span));
                    }
                    ('>', Some('=')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::Ge, span));
                    }
                    ('=', Some('=')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::EqEq, span));
                    }
                    ('!', Some('=')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::Ne, span));
                    }
                    ('&', Some('&')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::AndAnd, span));
                    }
                    ('-', Some('>')) => {
                        bump(&mut it, &mut line, &mut col);
                        out.push((Tok::Arrow, span));
                    }
                    ('!', _) => {
                        return Err(LexError { span, msg: "stray `!`".into() });
                    }
                    ('&', _) => {
                        return Err(LexError { span, msg: "stray `&`".into() });
                    }
                    _ => out.push((Tok::Punct(c), span)),
                }
            }
            '(' | ')' | '{' | '}' | '[' | ']' | ';' | ',' | ':' | '\'' | '+' | '*' => {
                let c = bump(&mut it, &mut line, &mut col);
                out.push((Tok::Punct(c), span));
            }
            other => {
                return Err(LexError { span, msg: format!("unexpected character `{other}`") })
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basic_stream() {
        let toks = tokenize("F2: while (r >= dr) { q = q + 1; } // tail").unwrap();
        assert_eq!(toks[0].0, Tok::Ident("F2".into()));
        assert_eq!(toks[1].0, Tok::Punct(':'));
        assert!(toks.iter().any(|(t, _)| *t == Tok::Ge));
        assert!(!toks.iter().any(|(t, _)| matches!(t, Tok::Ident(s) if s == "tail")));
    }

    #[test]
    fn spans_and_errors() {
        let err = tokenize("x = @").unwrap_err();
        assert_eq!(err.span.line, 1);
        assert_eq!(err.span.col, 5);
        let toks = tokenize("a\nbb ->").unwrap();
        assert_eq!(toks[1].1, Span { line: 2, col: 1 });
        assert_eq!(toks[2].0, Tok::Arrow);
    }

    #[test]
    fn numbers_with_exponents() {
        let toks = tokenize("1.5e-3 2E6 7").unwrap();
        assert_eq!(toks[0].0, Tok::Num("1.5e-3".into()));
        assert_eq!(toks[1].0, Tok::Num("2E6".into()));
    }
}
