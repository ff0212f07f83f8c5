//! Infix parser for the expression mini-language.
//!
//! Precedence-climbing over a hand-rolled token stream. Identifiers must
//! resolve against the declared variable/parameter sets at parse time;
//! names followed by `(` must be one of the built-in functions.

use super::{BinOp, Expr, Func};
use crate::real::Real;
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnexpectedChar(char),
    UnexpectedToken(String),
    UnexpectedEnd,
    UnknownIdentifier(String),
    UnknownFunction(String),
    InvalidNumber(String),
    EmptySource,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    /// Byte offset into the source where the problem starts.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = self.offset;
        match &self.kind {
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "unexpected character `{c}` at byte {at}")
            }
            ParseErrorKind::UnexpectedToken(t) => {
                write!(f, "unexpected `{t}` at byte {at}")
            }
            ParseErrorKind::UnexpectedEnd => write!(f, "unexpected end of input at byte {at}"),
            ParseErrorKind::UnknownIdentifier(n) => {
                write!(f, "unknown identifier `{n}` at byte {at}")
            }
            ParseErrorKind::UnknownFunction(n) => {
                write!(f, "unknown function `{n}` at byte {at}")
            }
            ParseErrorKind::InvalidNumber(s) => {
                write!(f, "invalid number literal `{s}` at byte {at}")
            }
            ParseErrorKind::EmptySource => write!(f, "empty expression"),
        }
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("{v}"),
            Tok::Ident(n) => n.clone(),
            Tok::Plus => "+".into(),
            Tok::Minus => "-".into(),
            Tok::Star => "*".into(),
            Tok::Slash => "/".into(),
            Tok::Caret => "^".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let tok = match c {
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                if i < bytes.len() && bytes[i] == b'.' {
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                // exponent only if followed by a digit (with optional sign)
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let text = &src[start..i];
                let v: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::InvalidNumber(text.to_owned()),
                })?;
                out.push((Tok::Num(v), start));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((Tok::Ident(src[start..i].to_owned()), start));
                continue;
            }
            other => {
                return Err(ParseError {
                    offset: i,
                    kind: ParseErrorKind::UnexpectedChar(other),
                })
            }
        };
        out.push((tok, i));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a, R> {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    src_len: usize,
    variables: &'a [&'a str],
    parameters: &'a [&'a str],
    _marker: std::marker::PhantomData<R>,
}

// binding powers: + - (10/11), unary - (15), * / (20/21), ^ (30/29,
// right-assoc). Unary minus negates a whole product: -a*z is -(a*z).
const BP_UNARY_MINUS: u8 = 15;

impl<'a, R: Real> Parser<'a, R> {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<(Tok, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|(_, o)| *o)
            .unwrap_or(self.src_len)
    }

    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.offset(),
            kind,
        }
    }

    fn expr_bp(&mut self, min_bp: u8) -> Result<Expr<R>, ParseError> {
        let (tok, tok_off) = self
            .next()
            .ok_or_else(|| self.err(ParseErrorKind::UnexpectedEnd))?;
        let mut lhs = match tok {
            Tok::Num(v) => Expr::Num(R::of(v)),
            Tok::Minus => {
                let operand = self.expr_bp(BP_UNARY_MINUS)?;
                match operand {
                    Expr::Num(v) => Expr::Num(-v),
                    other => Expr::Neg(Box::new(other)),
                }
            }
            Tok::LParen => {
                let inner = self.expr_bp(0)?;
                match self.next() {
                    Some((Tok::RParen, _)) => inner,
                    Some((t, o)) => {
                        return Err(ParseError {
                            offset: o,
                            kind: ParseErrorKind::UnexpectedToken(t.describe()),
                        })
                    }
                    None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
                }
            }
            Tok::Ident(name) => {
                if matches!(self.peek(), Some(Tok::LParen)) {
                    let func = Func::from_name(&name).ok_or(ParseError {
                        offset: tok_off,
                        kind: ParseErrorKind::UnknownFunction(name.clone()),
                    })?;
                    self.next(); // consume (
                    let arg = self.expr_bp(0)?;
                    match self.next() {
                        Some((Tok::RParen, _)) => Expr::Call(func, Box::new(arg)),
                        Some((t, o)) => {
                            return Err(ParseError {
                                offset: o,
                                kind: ParseErrorKind::UnexpectedToken(t.describe()),
                            })
                        }
                        None => return Err(self.err(ParseErrorKind::UnexpectedEnd)),
                    }
                } else if self.variables.contains(&name.as_str()) {
                    Expr::Var(name)
                } else if self.parameters.contains(&name.as_str()) {
                    Expr::Param(name)
                } else {
                    return Err(ParseError {
                        offset: tok_off,
                        kind: ParseErrorKind::UnknownIdentifier(name),
                    });
                }
            }
            other => {
                return Err(ParseError {
                    offset: tok_off,
                    kind: ParseErrorKind::UnexpectedToken(other.describe()),
                })
            }
        };

        loop {
            let (op, lbp, rbp) = match self.peek() {
                Some(Tok::Plus) => (BinOp::Add, 10, 11),
                Some(Tok::Minus) => (BinOp::Sub, 10, 11),
                Some(Tok::Star) => (BinOp::Mul, 20, 21),
                Some(Tok::Slash) => (BinOp::Div, 20, 21),
                Some(Tok::Caret) => (BinOp::Pow, 30, 29),
                _ => break,
            };
            if lbp < min_bp {
                break;
            }
            self.next();
            let rhs = self.expr_bp(rbp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }
}

/// Parse `source` against declared variable and parameter name sets.
pub fn parse<R: Real>(
    source: &str,
    variables: &[&str],
    parameters: &[&str],
) -> Result<Expr<R>, ParseError> {
    if source.trim().is_empty() {
        return Err(ParseError {
            offset: 0,
            kind: ParseErrorKind::EmptySource,
        });
    }
    let tokens = lex(source)?;
    let mut parser = Parser::<R> {
        tokens,
        pos: 0,
        src_len: source.len(),
        variables,
        parameters,
        _marker: std::marker::PhantomData,
    };
    let expr = parser.expr_bp(0)?;
    if let Some((t, o)) = parser.next() {
        return Err(ParseError {
            offset: o,
            kind: ParseErrorKind::UnexpectedToken(t.describe()),
        });
    }
    Ok(expr)
}
