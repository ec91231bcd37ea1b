//! Recursive-descent parser.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | constant | variable | func '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use super::{BinOp, Constant, Expr, Func, Var};

/// Trees deeper than this are rejected so that evaluation and drop cannot
/// exhaust the stack on adversarial input.
pub const MAX_DEPTH: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Empty,
    UnexpectedChar(char),
    UnexpectedEnd,
    ExpectedClosingParen,
    UnknownFunction(String),
    UnknownVariable(String),
    BadNumber(String),
    TrailingInput,
    TooDeep,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source where the problem was detected.
    pub offset: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = self.offset;
        match &self.kind {
            ParseErrorKind::Empty => write!(f, "empty expression"),
            ParseErrorKind::UnexpectedChar(c) => {
                write!(f, "syntax error at offset {at}: unexpected character {c:?}")
            }
            ParseErrorKind::UnexpectedEnd => {
                write!(f, "syntax error at offset {at}: unexpected end of input")
            }
            ParseErrorKind::ExpectedClosingParen => {
                write!(f, "syntax error at offset {at}: expected ')'")
            }
            ParseErrorKind::UnknownFunction(n) => {
                write!(f, "unknown function {n:?} at offset {at}")
            }
            ParseErrorKind::UnknownVariable(n) => {
                write!(f, "unknown variable {n:?} at offset {at}")
            }
            ParseErrorKind::BadNumber(s) => write!(f, "malformed number {s:?} at offset {at}"),
            ParseErrorKind::TrailingInput => {
                write!(f, "syntax error at offset {at}: unexpected trailing input")
            }
            ParseErrorKind::TooDeep => {
                write!(f, "expression nested deeper than {MAX_DEPTH} at offset {at}")
            }
        }
    }
}

impl std::error::Error for ParseError {}

pub fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: source.as_bytes(),
        text: source,
        pos: 0,
    };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error(ParseErrorKind::Empty));
    }
    let (e, _) = p.expr(0)?;
    p.skip_ws();
    if !p.at_end() {
        return Err(p.error(ParseErrorKind::TrailingInput));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    text: &'a str,
    pos: usize,
}

type Parsed = Result<(Expr, usize), ParseError>;

impl<'a> Parser<'a> {
    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn peek(&self) -> Option<u8> {
        self.src.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn error(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            kind,
            offset: self.pos,
        }
    }

    fn unexpected(&self) -> ParseError {
        match self.text[self.pos..].chars().next() {
            Some(c) => self.error(ParseErrorKind::UnexpectedChar(c)),
            None => self.error(ParseErrorKind::UnexpectedEnd),
        }
    }

    fn check_depth(&self, depth: usize) -> Result<usize, ParseError> {
        if depth > MAX_DEPTH {
            Err(self.error(ParseErrorKind::TooDeep))
        } else {
            Ok(depth)
        }
    }

    fn binary(&self, op: BinOp, l: (Expr, usize), r: (Expr, usize)) -> Parsed {
        let depth = self.check_depth(1 + l.1.max(r.1))?;
        Ok((Expr::bin(op, l.0, r.0), depth))
    }

    fn expr(&mut self, nest: usize) -> Parsed {
        let mut lhs = self.term(nest)?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term(nest)?;
            lhs = self.binary(op, lhs, rhs)?;
        }
    }

    fn term(&mut self, nest: usize) -> Parsed {
        let mut lhs = self.unary(nest)?;
        loop {
            self.skip_ws();
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary(nest)?;
            lhs = self.binary(op, lhs, rhs)?;
        }
    }

    fn unary(&mut self, nest: usize) -> Parsed {
        self.skip_ws();
        if self.peek() == Some(b'-') {
            self.pos += 1;
            self.check_depth(nest + 1)?;
            let (e, d) = self.unary(nest + 1)?;
            let depth = self.check_depth(d + 1)?;
            return Ok((Expr::neg(e), depth));
        }
        self.power(nest)
    }

    fn power(&mut self, nest: usize) -> Parsed {
        let base = self.atom(nest)?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.check_depth(nest + 1)?;
            let exp = self.unary(nest + 1)?;
            return self.binary(BinOp::Pow, base, exp);
        }
        Ok(base)
    }

    fn atom(&mut self, nest: usize) -> Parsed {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error(ParseErrorKind::UnexpectedEnd)),
            Some(b'(') => {
                self.pos += 1;
                self.check_depth(nest + 1)?;
                let inner = self.expr(nest + 1)?;
                self.expect_close()?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
                    self.pos += 1;
                }
                let name = &self.text[start..self.pos];
                self.skip_ws();
                if self.peek() == Some(b'(') {
                    let func = Func::from_name(name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownFunction(name.to_string()),
                        offset: start,
                    })?;
                    self.pos += 1;
                    self.check_depth(nest + 1)?;
                    let (arg, d) = self.expr(nest + 1)?;
                    self.expect_close()?;
                    let depth = self.check_depth(d + 1)?;
                    return Ok((Expr::call(func, arg), depth));
                }
                let leaf = match name {
                    "pi" => Expr::Const(Constant::Pi),
                    "e" => Expr::Const(Constant::E),
                    _ => Expr::Var(Var::from_name(name).ok_or(ParseError {
                        kind: ParseErrorKind::UnknownVariable(name.to_string()),
                        offset: start,
                    })?),
                };
                Ok((leaf, 1))
            }
            Some(_) => Err(self.unexpected()),
        }
    }

    fn expect_close(&mut self) -> Result<(), ParseError> {
        self.skip_ws();
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else if self.at_end() {
            Err(self.error(ParseErrorKind::ExpectedClosingParen))
        } else {
            Err(self.unexpected())
        }
    }

    fn number(&mut self) -> Parsed {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while matches!(p.peek(), Some(c) if c.is_ascii_digit()) {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut mantissa = digits(self);
        if self.peek() == Some(b'.') {
            self.pos += 1;
            mantissa += digits(self);
        }
        if mantissa == 0 {
            self.pos = start;
            return Err(self.unexpected());
        }
        // Exponent only when followed by a digit, so that `2e` is not eaten.
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let lexeme = &self.text[start..self.pos];
        match lexeme.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok((Expr::Num(v), 1)),
            _ => Err(ParseError {
                kind: ParseErrorKind::BadNumber(lexeme.to_string()),
                offset: start,
            }),
        }
    }
}
