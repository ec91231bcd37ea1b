//! Scalar expressions over the coordinates of `T × M` and of the jet bundle.
//!
//! Variables follow a fixed naming scheme:
//!
//! | name        | meaning                                   |
//! |-------------|-------------------------------------------|
//! | `t1`..`tp`  | parameters `t^α`                          |
//! | `x1`..`xn`  | state coordinates `x^i`                   |
//! | `y1`..`yn`  | jet velocities `x^i_1` (one parameter)    |
//! | `x3_2`      | jet coordinate `x^3_2 = ∂x^3/∂t^2`        |
//!
//! `pi` and `e` are constants. Indices are one-based in source text and
//! zero-based in [`Var`].

mod eval;
mod parser;

use std::fmt;
use std::sync::Arc;

pub use eval::{d1, d2, eval, Coords, EvalError, EvalPoint};
pub use parser::{parse, ParseError, ParseErrorKind, MAX_DEPTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T(usize),
    X(usize),
    /// `x^i_α`: `i` is the state index, `alpha` the parameter index.
    Jet { i: usize, alpha: usize },
}

impl Var {
    pub fn name(&self) -> String {
        self.to_string()
    }

    /// Inverse of [`Var::name`]; also accepts the `y<i>` shorthand.
    pub fn from_name(name: &str) -> Option<Var> {
        fn index(s: &str) -> Option<usize> {
            if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
                return None;
            }
            s.parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1)
        }
        let (head, rest) = name.split_at(name.chars().next()?.len_utf8());
        match head {
            "t" => index(rest).map(Var::T),
            "y" => index(rest).map(|i| Var::Jet { i, alpha: 0 }),
            "x" => match rest.split_once('_') {
                None => index(rest).map(Var::X),
                Some((i, a)) => Some(Var::Jet {
                    i: index(i)?,
                    alpha: index(a)?,
                }),
            },
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T(a) => write!(f, "t{}", a + 1),
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Jet { i, alpha } => write!(f, "x{}_{}", i + 1, alpha + 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Constant {
    Pi,
    E,
}

impl Constant {
    pub fn value(self) -> f64 {
        match self {
            Constant::Pi => std::f64::consts::PI,
            Constant::E => std::f64::consts::E,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Constant::Pi => "pi",
            Constant::E => "e",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Abs,
    Sinh,
    Cosh,
    Tanh,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Abs,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

/// Abstract syntax tree. Subtrees are shared, so cloning is cheap.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Constant),
    Var(Var),
    Neg(Arc<Expr>),
    Bin(BinOp, Arc<Expr>, Arc<Expr>),
    Call(Func, Arc<Expr>),
}

const PREC_NEG: u8 = 3;
const PREC_ATOM: u8 = 5;

// Builders that drop trivial terms; not operator overloads.
#[allow(clippy::should_implement_trait)]
impl Expr {
    pub fn num(v: f64) -> Expr {
        Expr::Num(v)
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn bin(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Bin(op, Arc::new(l), Arc::new(r))
    }

    pub fn call(f: Func, arg: Expr) -> Expr {
        Expr::Call(f, Arc::new(arg))
    }

    pub fn neg(e: Expr) -> Expr {
        Expr::Neg(Arc::new(e))
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    /// Sum that skips literal zeros; used by builders that assemble larger
    /// expressions from user input.
    pub fn add(self, other: Expr) -> Expr {
        match (self.is_zero_literal(), other.is_zero_literal()) {
            (true, _) => other,
            (_, true) => self,
            _ => Expr::bin(BinOp::Add, self, other),
        }
    }

    pub fn sub(self, other: Expr) -> Expr {
        if other.is_zero_literal() {
            self
        } else {
            Expr::bin(BinOp::Sub, self, other)
        }
    }

    pub fn mul(self, other: Expr) -> Expr {
        if self.is_zero_literal() || other.is_zero_literal() {
            return Expr::Num(0.0);
        }
        match (&self, &other) {
            (Expr::Num(a), _) if *a == 1.0 => other,
            (_, Expr::Num(b)) if *b == 1.0 => self,
            _ => Expr::bin(BinOp::Mul, self, other),
        }
    }

    pub fn div(self, other: Expr) -> Expr {
        Expr::bin(BinOp::Div, self, other)
    }

    /// Every variable occurring in the tree, sorted and deduplicated.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Var(v) => out.push(*v),
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
            Expr::Num(_) | Expr::Const(_) => {}
        }
    }

    pub fn is_constant(&self) -> bool {
        match self {
            Expr::Var(_) => false,
            Expr::Neg(e) | Expr::Call(_, e) => e.is_constant(),
            Expr::Bin(_, l, r) => l.is_constant() && r.is_constant(),
            Expr::Num(_) | Expr::Const(_) => true,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.depth(),
            Expr::Bin(_, l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Neg(_) => PREC_NEG,
            Expr::Num(v) if v.is_sign_negative() => PREC_NEG,
            Expr::Bin(op, _, _) => op.precedence(),
            _ => PREC_ATOM,
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

fn write_wrapped(f: &mut fmt::Formatter<'_>, e: &Expr, wrap: bool) -> fmt::Result {
    if wrap {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

/// Prints with the minimal parentheses that make `parse` rebuild the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            // Debug formatting of f64 round-trips exactly and switches to
            // exponent notation for very large or small magnitudes.
            Expr::Num(v) => write!(f, "{v:?}"),
            Expr::Const(c) => f.write_str(c.name()),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                write_wrapped(f, e, e.precedence() < PREC_NEG)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Bin(BinOp::Pow, l, r) => {
                write_wrapped(f, l, l.precedence() < PREC_ATOM)?;
                f.write_str("^")?;
                write_wrapped(f, r, r.precedence() < PREC_NEG)
            }
            Expr::Bin(op, l, r) => {
                let p = op.precedence();
                write_wrapped(f, l, l.precedence() < p)?;
                write!(f, " {} ", op.symbol())?;
                write_wrapped(f, r, r.precedence() <= p)
            }
        }
    }
}
