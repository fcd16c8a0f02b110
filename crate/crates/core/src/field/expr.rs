//! Expression trees over the ambient coordinates `x1..x5`.

use std::fmt;

use crate::error::{Error, Result};

/// Denominators smaller than this in magnitude are a domain error.
pub const MIN_DENOMINATOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Ambient coordinate, zero based (`Var(0)` is `x1`).
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
}

use Expr::*;

// Constructors fold constants and drop neutral elements so that derivative
// trees stay small.
#[allow(clippy::should_implement_trait, clippy::redundant_guards)]
impl Expr {
    pub fn neg(a: Expr) -> Expr {
        match a {
            Const(c) => Const(-c),
            Neg(inner) => *inner,
            a => Neg(Box::new(a)),
        }
    }

    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Const(x), Const(y)) => Const(x + y),
            (Const(z), e) | (e, Const(z)) if z == 0.0 => e,
            (a, b) => Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Const(x), Const(y)) => Const(x - y),
            (e, Const(z)) if z == 0.0 => e,
            (Const(z), e) if z == 0.0 => Expr::neg(e),
            (a, b) => Sub(Box::new(a), Box::new(b)),
        }
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Const(x), Const(y)) => Const(x * y),
            (Const(z), _) | (_, Const(z)) if z == 0.0 => Const(0.0),
            (Const(o), e) | (e, Const(o)) if o == 1.0 => e,
            (a, b) => Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Const(z), _) if z == 0.0 => Const(0.0),
            (e, Const(o)) if o == 1.0 => e,
            (a, b) => Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, n: i32) -> Expr {
        match (a, n) {
            (_, 0) => Const(1.0),
            (e, 1) => e,
            (Const(c), n) if c != 0.0 || n > 0 => Const(c.powi(n)),
            (a, n) => Pow(Box::new(a), n),
        }
    }

    pub fn exp(a: Expr) -> Expr {
        match a {
            Const(c) => Const(c.exp()),
            a => Exp(Box::new(a)),
        }
    }

    pub fn sin(a: Expr) -> Expr {
        match a {
            Const(c) => Const(c.sin()),
            a => Sin(Box::new(a)),
        }
    }

    pub fn cos(a: Expr) -> Expr {
        match a {
            Const(c) => Const(c.cos()),
            a => Cos(Box::new(a)),
        }
    }

    /// Structural partial derivative with respect to `Var(k)`.
    pub fn derivative(&self, k: usize) -> Expr {
        match self {
            Const(_) => Const(0.0),
            Var(i) => Const(if *i == k { 1.0 } else { 0.0 }),
            Neg(a) => Expr::neg(a.derivative(k)),
            Add(a, b) => Expr::add(a.derivative(k), b.derivative(k)),
            Sub(a, b) => Expr::sub(a.derivative(k), b.derivative(k)),
            Mul(a, b) => {
                Expr::add(Expr::mul(a.derivative(k), (**b).clone()), Expr::mul((**a).clone(), b.derivative(k)))
            }
            Div(a, b) => {
                let num =
                    Expr::sub(Expr::mul(a.derivative(k), (**b).clone()), Expr::mul((**a).clone(), b.derivative(k)));
                Expr::div(num, Expr::pow((**b).clone(), 2))
            }
            Pow(a, n) => Expr::mul(Expr::mul(Const(*n as f64), Expr::pow((**a).clone(), n - 1)), a.derivative(k)),
            Exp(a) => Expr::mul(Expr::exp((**a).clone()), a.derivative(k)),
            Sin(a) => Expr::mul(Expr::cos((**a).clone()), a.derivative(k)),
            Cos(a) => Expr::neg(Expr::mul(Expr::sin((**a).clone()), a.derivative(k))),
        }
    }

    pub fn eval(&self, x: &[f64; 5]) -> Result<f64> {
        Ok(match self {
            Const(c) => *c,
            Var(i) => x[*i],
            Neg(a) => -a.eval(x)?,
            Add(a, b) => a.eval(x)? + b.eval(x)?,
            Sub(a, b) => a.eval(x)? - b.eval(x)?,
            Mul(a, b) => a.eval(x)? * b.eval(x)?,
            Div(a, b) => {
                let den = b.eval(x)?;
                if den.abs() < MIN_DENOMINATOR {
                    return Err(Error::EvaluationDomain(format!("division by {den:e} in {self}")));
                }
                a.eval(x)? / den
            }
            Pow(a, n) => {
                let base = a.eval(x)?;
                if *n < 0 && base.abs() < MIN_DENOMINATOR {
                    return Err(Error::EvaluationDomain(format!("negative power of {base:e} in {self}")));
                }
                base.powi(*n)
            }
            Exp(a) => a.eval(x)?.exp(),
            Sin(a) => a.eval(x)?.sin(),
            Cos(a) => a.eval(x)?.cos(),
        })
    }

    /// Replaces every `Var(i)` by `subs[i]`.
    pub fn substitute(&self, subs: &[Expr; 5]) -> Expr {
        let s = |e: &Expr| e.substitute(subs);
        match self {
            Const(c) => Const(*c),
            Var(i) => subs[*i].clone(),
            Neg(a) => Expr::neg(s(a)),
            Add(a, b) => Expr::add(s(a), s(b)),
            Sub(a, b) => Expr::sub(s(a), s(b)),
            Mul(a, b) => Expr::mul(s(a), s(b)),
            Div(a, b) => Expr::div(s(a), s(b)),
            Pow(a, n) => Expr::pow(s(a), *n),
            Exp(a) => Expr::exp(s(a)),
            Sin(a) => Expr::sin(s(a)),
            Cos(a) => Expr::cos(s(a)),
        }
    }
}

// Fully parenthesized; the output re-parses to the same tree up to folding.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Const(c) if *c < 0.0 => write!(f, "(-{:?})", -c),
            Const(c) => write!(f, "{c:?}"),
            Var(i) => write!(f, "x{}", i + 1),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, n) => write!(f, "({a})^{n}"),
            Exp(a) => write!(f, "exp({a})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
        }
    }
}
