use std::cmp::Ordering;
use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Expr, NotPolynomial};
use crate::weighted::WeightSequence;

/// Exponent vector, ordered graded-lexicographically (total degree first,
/// then lexicographic with `x1` most significant).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exponents(pub Vec<u32>);

impl Exponents {
    pub fn zero(n: usize) -> Exponents {
        Exponents(vec![0; n])
    }

    pub fn unit(n: usize, index: usize) -> Exponents {
        let mut e = vec![0; n];
        e[index] = 1;
        Exponents(e)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Weighted degree `Σ α_k w_k`.
    pub fn weighted(&self, w: &WeightSequence) -> i64 {
        self.0
            .iter()
            .zip(w.as_slice())
            .map(|(&a, &wk)| a as i64 * wk as i64)
            .sum()
    }

    fn add(&self, other: &Exponents) -> Exponents {
        Exponents(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

impl Ord for Exponents {
    fn cmp(&self, other: &Self) -> Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for Exponents {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A single term `coeff · x^exponents`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Monomial {
    pub coeff: BigRational,
    pub exponents: Exponents,
}

impl Monomial {
    pub fn to_expr(&self) -> Expr {
        term_expr(&self.coeff, &self.exponents)
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

/// Sparse polynomial over ℚ in `nvars` variables; zero coefficients are
/// never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<Exponents, BigRational>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Polynomial {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: BigRational) -> Polynomial {
        let mut p = Polynomial::zero(nvars);
        p.add_term(Exponents::zero(nvars), c);
        p
    }

    /// The coordinate `x{index}` (1-based).
    pub fn var(nvars: usize, index: usize) -> Polynomial {
        let mut p = Polynomial::zero(nvars);
        p.add_term(Exponents::unit(nvars, index - 1), BigRational::one());
        p
    }

    pub fn from_monomials(nvars: usize, monomials: impl IntoIterator<Item = Monomial>) -> Polynomial {
        let mut p = Polynomial::zero(nvars);
        for m in monomials {
            p.add_term(m.exponents, m.coeff);
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, exps: Exponents, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        debug_assert_eq!(exps.0.len(), self.nvars);
        match self.terms.entry(exps) {
            Entry::Vacant(v) => {
                v.insert(coeff);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coeff;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    /// Terms in ascending graded-lexicographic order.
    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn monomials(&self) -> Vec<Monomial> {
        self.terms
            .iter()
            .map(|(e, c)| Monomial {
                coeff: c.clone(),
                exponents: e.clone(),
            })
            .collect()
    }

    pub fn coeff(&self, exps: &Exponents) -> BigRational {
        self.terms.get(exps).cloned().unwrap_or_else(BigRational::zero)
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Polynomial) -> Polynomial {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Polynomial {
        self.scale(&-BigRational::one())
    }

    pub fn scale(&self, c: &BigRational) -> Polynomial {
        if c.is_zero() {
            return Polynomial::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, a)| (e.clone(), a * c)).collect(),
        }
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1.add(e2), c1 * c2);
            }
        }
        out
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        let mut out = Polynomial::constant(self.nvars, BigRational::one());
        for _ in 0..n {
            out = out.mul(self);
        }
        out
    }

    /// Partial derivative with respect to `x{index}` (1-based).
    pub fn derivative(&self, index: usize) -> Polynomial {
        let k = index - 1;
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            let a = e.0[k];
            if a == 0 {
                continue;
            }
            let mut e2 = e.clone();
            e2.0[k] -= 1;
            out.add_term(e2, c * BigRational::from_integer(BigInt::from(a)));
        }
        out
    }

    /// Keep the terms for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(&Exponents) -> bool) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(e, _)| keep(e))
                .map(|(e, c)| (e.clone(), c.clone()))
                .collect(),
        }
    }

    /// Multiply each term by `factor(exponents)`.
    pub fn map_coeffs(&self, mut factor: impl FnMut(&Exponents) -> BigRational) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), c * factor(e));
        }
        out
    }

    pub fn eval_f64(&self, p: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let mut v = c.to_f64().unwrap_or(f64::NAN);
                for (x, &a) in p.iter().zip(&e.0) {
                    if a > 0 {
                        v *= x.powi(a as i32);
                    }
                }
                v
            })
            .sum()
    }

    pub fn eval_rational(&self, p: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut v = c.clone();
            for (x, &a) in p.iter().zip(&e.0) {
                if a > 0 {
                    v *= num_traits::pow(x.clone(), a as usize);
                }
            }
            acc += v;
        }
        acc
    }

    /// Canonical expression: terms in ascending graded-lex order.
    pub fn to_expr(&self) -> Expr {
        let mut acc: Option<Expr> = None;
        for (e, c) in &self.terms {
            let term = term_expr(c, e);
            acc = Some(match acc {
                None => term,
                Some(prev) => Expr::Add(Box::new(prev), Box::new(term)),
            });
        }
        acc.unwrap_or_else(Expr::zero)
    }

    /// Resize to `nvars` variables; dropped variables must not occur.
    pub fn with_nvars(&self, nvars: usize) -> Polynomial {
        let mut out = Polynomial::zero(nvars);
        for (e, c) in &self.terms {
            let mut v = e.0.clone();
            debug_assert!(v.iter().skip(nvars).all(|&a| a == 0));
            v.resize(nvars, 0);
            out.add_term(Exponents(v), c.clone());
        }
        out
    }

    /// Substitute each variable by a polynomial (in a possibly different
    /// ring).
    pub fn compose(&self, values: &[Polynomial]) -> Polynomial {
        let target = values.first().map(|v| v.nvars).unwrap_or(0);
        let mut out = Polynomial::zero(target);
        for (e, c) in &self.terms {
            let mut term = Polynomial::constant(target, c.clone());
            for (v, &a) in values.iter().zip(&e.0) {
                if a > 0 {
                    term = term.mul(&v.pow(a));
                }
            }
            out = out.add(&term);
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_expr())
    }
}

fn term_expr(coeff: &BigRational, exps: &Exponents) -> Expr {
    let mut body: Option<Expr> = None;
    for (k, &a) in exps.0.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let factor = if a == 1 {
            Expr::Var(k + 1)
        } else {
            Expr::Pow(Box::new(Expr::Var(k + 1)), a)
        };
        body = Some(match body {
            None => factor,
            Some(b) => Expr::Mul(Box::new(b), Box::new(factor)),
        });
    }
    let negative = coeff.is_negative();
    let mag = coeff.abs();
    let numer = Expr::Const(BigRational::from_integer(mag.numer().clone()));
    let denom = mag.denom().clone();
    let mut e = match body {
        None => Expr::Const(mag.clone()),
        Some(b) if mag.numer().is_one() => b,
        Some(b) => Expr::Mul(Box::new(numer), Box::new(b)),
    };
    if body_is_some(exps) && !denom.is_one() {
        e = Expr::Div(Box::new(e), Box::new(Expr::Const(BigRational::from_integer(denom))));
    }
    if negative {
        match e {
            Expr::Const(c) => Expr::Const(-c),
            other => Expr::Neg(Box::new(other)),
        }
    } else {
        e
    }
}

fn body_is_some(exps: &Exponents) -> bool {
    exps.0.iter().any(|&a| a > 0)
}

pub(super) fn expand(e: &Expr, dim: usize) -> Result<Polynomial, NotPolynomial> {
    Ok(match e {
        Expr::Const(c) => Polynomial::constant(dim, c.clone()),
        Expr::Var(i) => {
            if *i == 0 || *i > dim {
                return Err(NotPolynomial);
            }
            Polynomial::var(dim, *i)
        }
        Expr::Add(a, b) => expand(a, dim)?.add(&expand(b, dim)?),
        Expr::Mul(a, b) => expand(a, dim)?.mul(&expand(b, dim)?),
        Expr::Neg(a) => expand(a, dim)?.neg(),
        Expr::Div(a, b) => {
            let den = expand(b, dim)?;
            let c = constant_value(&den).ok_or(NotPolynomial)?;
            if c.is_zero() {
                return Err(NotPolynomial);
            }
            expand(a, dim)?.scale(&c.recip())
        }
        Expr::Pow(a, n) => expand(a, dim)?.pow(*n),
        Expr::Call(..) => return Err(NotPolynomial),
    })
}

fn constant_value(p: &Polynomial) -> Option<BigRational> {
    match p.terms.len() {
        0 => Some(BigRational::zero()),
        1 => {
            let (e, c) = p.terms.iter().next().unwrap();
            if e.total() == 0 {
                Some(c.clone())
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Range of weighted degrees over the monomials of a polynomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeRange {
    /// The zero polynomial: conventionally `(+∞, −∞)`.
    Zero,
    Range { min: i64, max: i64 },
}

pub fn weighted_degree_range(e: &Expr, w: &WeightSequence) -> Result<DegreeRange, NotPolynomial> {
    let p = e.to_polynomial(w.dim())?;
    Ok(p.weighted_degree_range(w))
}

impl Polynomial {
    pub fn weighted_degree_range(&self, w: &WeightSequence) -> DegreeRange {
        let mut it = self.terms.keys().map(|e| e.weighted(w));
        match it.next() {
            None => DegreeRange::Zero,
            Some(first) => {
                let (min, max) = it.fold((first, first), |(lo, hi), d| (lo.min(d), hi.max(d)));
                DegreeRange::Range { min, max }
            }
        }
    }
}
