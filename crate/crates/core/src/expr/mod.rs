//! Expression trees over chart coordinates `x1..xn` with exact rational
//! constants.
//!
//! Everything symbolic in the crate (vector field components, form
//! coefficients, functions) is an [`Expr`]. Polynomial expressions can be
//! expanded into a canonical [`Polynomial`] for exact comparisons and
//! weighted-degree bookkeeping; numeric work goes through [`Compiled`].

mod eval;
mod parse;
mod poly;

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use eval::{evaluate, Compiled};
pub use parse::parse;
pub use poly::{weighted_degree_range, DegreeRange, Exponents, Monomial, Polynomial};

/// Analytic primitives accepted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Symbolic expression. Variables are 1-based: `Var(1)` is `x1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Const(BigRational),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unknown identifier `{name}` at line {line}, column {column}")]
    UnknownIdentifier {
        name: String,
        line: usize,
        column: usize,
    },
    #[error("variable index out of range: x{index} with chart dimension {dim}")]
    VariableOutOfRange { index: usize, dim: usize },
    #[error("domain error in `{subexpr}`: {reason}")]
    Domain { subexpr: String, reason: String },
    #[error("point has length {got}, expected {expected}")]
    PointDimension { expected: usize, got: usize },
}

/// Marker error for operations that need a polynomial input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("expression is not a polynomial")]
pub struct NotPolynomial;

impl Expr {
    pub fn zero() -> Expr {
        Expr::Const(BigRational::zero())
    }

    pub fn one() -> Expr {
        Expr::Const(BigRational::one())
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::Const(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn var(index: usize) -> Expr {
        Expr::Var(index)
    }

    pub fn as_const(&self) -> Option<&BigRational> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Sum with light folding of constants and zeros.
    pub fn add(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x + y),
            (a, b) if a.is_zero() => b,
            (a, b) if b.is_zero() => a,
            (a, b) => Expr::Add(Box::new(a), Box::new(b)),
        }
    }

    pub fn sub(a: Expr, b: Expr) -> Expr {
        Expr::add(a, Expr::neg(b))
    }

    pub fn mul(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) => Expr::Const(x * y),
            (a, b) if a.is_zero() || b.is_zero() => Expr::zero(),
            (a, b) if a.is_one() => b,
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Mul(Box::new(a), Box::new(b)),
        }
    }

    pub fn neg(a: Expr) -> Expr {
        match a {
            Expr::Const(x) => Expr::Const(-x),
            Expr::Neg(inner) => *inner,
            a => Expr::Neg(Box::new(a)),
        }
    }

    pub fn div(a: Expr, b: Expr) -> Expr {
        match (a, b) {
            (Expr::Const(x), Expr::Const(y)) if !y.is_zero() => Expr::Const(x / y),
            (a, b) if a.is_zero() && !b.is_zero() => Expr::zero(),
            (a, b) if b.is_one() => a,
            (a, b) => Expr::Div(Box::new(a), Box::new(b)),
        }
    }

    pub fn pow(a: Expr, n: u32) -> Expr {
        match (a, n) {
            (_, 0) => Expr::one(),
            (a, 1) => a,
            (Expr::Const(x), n) => Expr::Const(num_traits::pow(x, n as usize)),
            (a, n) => Expr::Pow(Box::new(a), n),
        }
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    /// Largest variable index used (0 when the expression is constant).
    pub fn max_var(&self) -> usize {
        match self {
            Expr::Const(_) => 0,
            Expr::Var(i) => *i,
            Expr::Add(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
        }
    }

    /// Exact partial derivative with respect to `x{index}`.
    pub fn differentiate(&self, index: usize) -> Expr {
        match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(i) => {
                if *i == index {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Expr::Add(a, b) => Expr::add(a.differentiate(index), b.differentiate(index)),
            Expr::Mul(a, b) => Expr::add(
                Expr::mul(a.differentiate(index), (**b).clone()),
                Expr::mul((**a).clone(), b.differentiate(index)),
            ),
            Expr::Neg(a) => Expr::neg(a.differentiate(index)),
            Expr::Div(a, b) => {
                let da = a.differentiate(index);
                let db = b.differentiate(index);
                if db.is_zero() {
                    return Expr::div(da, (**b).clone());
                }
                let num = Expr::sub(
                    Expr::mul(da, (**b).clone()),
                    Expr::mul((**a).clone(), db),
                );
                Expr::div(num, Expr::pow((**b).clone(), 2))
            }
            Expr::Pow(a, n) => {
                let da = a.differentiate(index);
                if da.is_zero() {
                    return Expr::zero();
                }
                Expr::mul(
                    Expr::mul(Expr::int(*n as i64), Expr::pow((**a).clone(), n - 1)),
                    da,
                )
            }
            Expr::Call(f, a) => {
                let da = a.differentiate(index);
                if da.is_zero() {
                    return Expr::zero();
                }
                let inner = (**a).clone();
                let outer = match f {
                    Func::Exp => Expr::call(Func::Exp, inner),
                    Func::Sin => Expr::call(Func::Cos, inner),
                    Func::Cos => Expr::neg(Expr::call(Func::Sin, inner)),
                    Func::Sqrt => {
                        return Expr::div(da, Expr::mul(Expr::int(2), Expr::call(Func::Sqrt, inner)))
                    }
                };
                Expr::mul(outer, da)
            }
        }
    }

    /// Replace every `x{i}` by `values[i-1]`.
    pub fn substitute(&self, values: &[Expr]) -> Expr {
        match self {
            Expr::Const(_) => self.clone(),
            Expr::Var(i) => values[*i - 1].clone(),
            Expr::Add(a, b) => Expr::add(a.substitute(values), b.substitute(values)),
            Expr::Mul(a, b) => Expr::mul(a.substitute(values), b.substitute(values)),
            Expr::Neg(a) => Expr::neg(a.substitute(values)),
            Expr::Div(a, b) => Expr::div(a.substitute(values), b.substitute(values)),
            Expr::Pow(a, n) => Expr::pow(a.substitute(values), *n),
            Expr::Call(f, a) => Expr::call(*f, a.substitute(values)),
        }
    }

    /// Expand into canonical monomials, or report that the expression is not
    /// a polynomial (analytic primitive, or division by a non-constant).
    pub fn to_polynomial(&self, dim: usize) -> Result<Polynomial, NotPolynomial> {
        poly::expand(self, dim)
    }

    pub fn is_polynomial(&self, dim: usize) -> bool {
        self.to_polynomial(dim).is_ok()
    }

    /// Canonical polynomial form when possible, the expression itself
    /// otherwise.
    pub fn canonical(&self, dim: usize) -> Expr {
        match self.to_polynomial(dim) {
            Ok(p) => p.to_expr(),
            Err(_) => self.clone(),
        }
    }

    pub fn check_dim(&self, dim: usize) -> Result<(), ExprError> {
        let index = self.max_var();
        if index > dim {
            Err(ExprError::VariableOutOfRange { index, dim })
        } else {
            Ok(())
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(c) if c.is_negative() || !c.is_integer() => 0,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        let prec = self.precedence();
        if prec < min {
            write!(f, "(")?;
            self.write_bare(f)?;
            write!(f, ")")
        } else {
            self.write_bare(f)
        }
    }

    fn write_bare(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(i) => write!(f, "x{i}"),
            Expr::Add(a, b) => {
                a.write_prec(f, 1)?;
                match &**b {
                    Expr::Neg(inner) => {
                        write!(f, " - ")?;
                        inner.write_prec(f, 2)
                    }
                    Expr::Const(c) if c.is_negative() => write!(f, " - {}", -c.clone()),
                    other => {
                        write!(f, " + ")?;
                        other.write_prec(f, 2)
                    }
                }
            }
            Expr::Mul(a, b) => {
                a.write_prec(f, 2)?;
                write!(f, "*")?;
                b.write_prec(f, 3)
            }
            Expr::Div(a, b) => {
                a.write_prec(f, 2)?;
                write!(f, "/")?;
                b.write_prec(f, 3)
            }
            // -(a*b) and (-a)*b agree in value, so no parentheses needed
            Expr::Neg(a) => {
                write!(f, "-")?;
                a.write_prec(f, 2)
            }
            Expr::Pow(a, n) => {
                a.write_prec(f, 5)?;
                write!(f, "^{n}")
            }
            Expr::Call(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_bare(f)?;
                write!(f, ")")
            }
        }
    }
}

/// Prints in the grammar accepted by [`parse`].
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_bare(f)
    }
}

/// Partial derivative `∂e/∂x{index}`; `index` must lie in `1..=dim`.
pub fn differentiate(e: &Expr, index: usize, dim: usize) -> Result<Expr, ExprError> {
    if index == 0 || index > dim {
        return Err(ExprError::VariableOutOfRange { index, dim });
    }
    Ok(e.differentiate(index))
}

/// Expansion entry point matching the other free functions of this module.
pub fn to_polynomial(e: &Expr, dim: usize) -> Result<Polynomial, NotPolynomial> {
    e.to_polynomial(dim)
}
