use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};
use crate::scalar::{Dual, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound variable {0}")]
    Unbound(String),
    #[error("domain error: {op} of {arg}")]
    Domain { op: &'static str, arg: f64 },
    #[error("division by zero")]
    DivisionByZero,
    #[error("unknown variable name {0:?}")]
    BadName(String),
}

/// Variable bindings, ordered by variable.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalPoint(BTreeMap<Var, f64>);

impl EvalPoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, var: Var, value: f64) -> &mut Self {
        self.0.insert(var, value);
        self
    }

    pub fn bind_name(&mut self, name: &str, value: f64) -> Result<&mut Self, EvalError> {
        let var = Var::from_name(name).ok_or_else(|| EvalError::BadName(name.to_string()))?;
        Ok(self.bind(var, value))
    }

    /// Panics on malformed names; intended for literals in code and tests.
    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        let mut p = Self::new();
        for (name, value) in pairs {
            p.bind_name(name, *value).expect("valid variable name");
        }
        p
    }

    pub fn get(&self, var: Var) -> Option<f64> {
        self.0.get(&var).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (Var, f64)> + '_ {
        self.0.iter().map(|(k, v)| (*k, *v))
    }
}

/// Positional view of a point of `J¹(T, M)`.
///
/// `v` holds the jet coordinates row-major in the state index:
/// `x^i_α` lives at `v[i * p + α]`. Slices may be empty when an expression
/// does not need them.
#[derive(Debug, Clone, Copy)]
pub struct Coords<'a, T> {
    pub t: &'a [T],
    pub x: &'a [T],
    pub v: &'a [T],
    pub p: usize,
}

impl<'a, T: Scalar> Coords<'a, T> {
    pub fn new(t: &'a [T], x: &'a [T], v: &'a [T]) -> Self {
        Coords { t, x, v, p: t.len() }
    }

    pub fn get(&self, var: Var) -> Option<T> {
        match var {
            Var::T(a) => self.t.get(a).copied(),
            Var::X(i) => self.x.get(i).copied(),
            Var::Jet { i, alpha } => {
                if alpha < self.p {
                    self.v.get(i * self.p + alpha).copied()
                } else {
                    None
                }
            }
        }
    }
}

impl Expr {
    /// Evaluate over any scalar type at the positional point `c`.
    pub fn eval_at<T: Scalar>(&self, c: &Coords<'_, T>) -> Result<T, EvalError> {
        self.eval_with(&|v| c.get(v))
    }

    pub fn eval_with<T: Scalar>(&self, env: &dyn Fn(Var) -> Option<T>) -> Result<T, EvalError> {
        match self {
            Expr::Num(v) => Ok(T::from_f64(*v)),
            Expr::Const(c) => Ok(T::from_f64(c.value())),
            Expr::Var(v) => env(*v).ok_or_else(|| EvalError::Unbound(v.name())),
            Expr::Neg(e) => Ok(-e.eval_with(env)?),
            Expr::Call(f, arg) => apply(*f, arg.eval_with(env)?),
            Expr::Bin(BinOp::Pow, base, exp) => {
                let b = base.eval_with(env)?;
                if exp.is_constant() {
                    let c = exp.eval_with::<f64>(&|_| None)?;
                    return pow_const(b, c);
                }
                let r = exp.eval_with(env)?;
                let bv = b.value();
                if bv <= 0.0 {
                    return Err(EvalError::Domain {
                        op: "variable exponent of non-positive base",
                        arg: bv,
                    });
                }
                Ok((r * b.ln()).exp())
            }
            Expr::Bin(op, l, r) => {
                let a = l.eval_with(env)?;
                let b = r.eval_with(env)?;
                Ok(match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.value() == 0.0 {
                            return Err(EvalError::DivisionByZero);
                        }
                        a / b
                    }
                    BinOp::Pow => unreachable!(),
                })
            }
        }
    }
}

fn pow_const<T: Scalar>(b: T, c: f64) -> Result<T, EvalError> {
    let bv = b.value();
    if bv == 0.0 && c < 0.0 {
        return Err(EvalError::DivisionByZero);
    }
    if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
        return Ok(b.powi(c as i32));
    }
    if bv < 0.0 {
        return Err(EvalError::Domain {
            op: "non-integer power of negative base",
            arg: bv,
        });
    }
    Ok(b.powf(c))
}

fn apply<T: Scalar>(f: Func, a: T) -> Result<T, EvalError> {
    let av = a.value();
    Ok(match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Exp => a.exp(),
        Func::Log => {
            if av <= 0.0 {
                return Err(EvalError::Domain { op: "log", arg: av });
            }
            a.ln()
        }
        Func::Sqrt => {
            if av < 0.0 {
                return Err(EvalError::Domain { op: "sqrt", arg: av });
            }
            a.sqrt()
        }
        Func::Abs => a.abs(),
        Func::Sinh => a.sinh(),
        Func::Cosh => a.cosh(),
        Func::Tanh => a.tanh(),
    })
}

pub fn eval(e: &Expr, p: &EvalPoint) -> Result<f64, EvalError> {
    e.eval_with(&|v| p.get(v))
}

/// Exact partial derivative `∂e/∂var` at `p`.
pub fn d1(e: &Expr, var: Var, p: &EvalPoint) -> Result<f64, EvalError> {
    let r = e.eval_with(&|v| {
        p.get(v).map(|x| {
            if v == var {
                Dual::variable(x)
            } else {
                Dual::constant(x)
            }
        })
    })?;
    Ok(r.du)
}

/// Exact mixed partial `∂²e/∂v1∂v2` at `p`.
///
/// The two variables are put in a canonical order before seeding, which makes
/// the result bitwise symmetric in `(v1, v2)`.
pub fn d2(e: &Expr, v1: Var, v2: Var, p: &EvalPoint) -> Result<f64, EvalError> {
    let (outer, inner) = if v1 <= v2 { (v1, v2) } else { (v2, v1) };
    let r = e.eval_with(&|v| {
        p.get(v).map(|x| {
            let re = if v == inner {
                Dual::variable(x)
            } else {
                Dual::constant(x)
            };
            let du = if v == outer {
                Dual::constant(1.0)
            } else {
                Dual::constant(0.0)
            };
            Dual::new(re, du)
        })
    })?;
    Ok(r.du.du)
}
