use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::{CalculusError, Graded, ObjectKind, VectorField, WeightSequence};
use crate::expr::{Expr, Monomial, Polynomial};

/// Filtration degree of an object; the zero object has degree `+∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Degree {
    Finite(i64),
    Infinite,
}

impl Degree {
    pub fn finite(self) -> Option<i64> {
        match self {
            Degree::Finite(k) => Some(k),
            Degree::Infinite => None,
        }
    }
}

impl fmt::Display for Degree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Degree::Finite(k) => write!(f, "{k}"),
            Degree::Infinite => write!(f, "+inf"),
        }
    }
}

/// One monomial of one component, tagged with its weighted degree.
#[derive(Clone, Debug, PartialEq)]
pub struct GradedTerm {
    pub component: usize,
    pub monomial: Monomial,
    pub degree: i64,
}

fn check_weights<O: Graded>(obj: &O, w: &WeightSequence) -> Result<(), CalculusError> {
    if obj.dim() != w.dim() {
        return Err(CalculusError::DimensionMismatch {
            left: obj.dim(),
            right: w.dim(),
        });
    }
    Ok(())
}

/// Every monomial of every component with its weighted degree (including
/// the kind-specific offset), in component order.
pub fn weighted_degrees<O: Graded>(obj: &O, w: &WeightSequence) -> Result<Vec<GradedTerm>, CalculusError> {
    check_weights(obj, w)?;
    let offsets = obj.offsets(w);
    let mut out = Vec::new();
    for (k, poly) in obj.polynomials()?.into_iter().enumerate() {
        for m in poly.monomials() {
            let degree = m.exponents.weighted(w) + offsets[k];
            out.push(GradedTerm {
                component: k,
                monomial: m,
                degree,
            });
        }
    }
    Ok(out)
}

/// `E = Σ w_i x_i ∂/∂x_i`.
pub fn weighted_euler_field(w: &WeightSequence) -> VectorField {
    let n = w.dim();
    let components = (0..n)
        .map(|i| {
            Polynomial::var(n, i + 1)
                .scale(&BigRational::from_integer(BigInt::from(w.get(i))))
                .to_expr()
        })
        .collect();
    VectorField::new(n, components).expect("well-formed by construction")
}

/// The homogeneous part of weighted degree `k`.
pub fn graded_component<O: Graded>(obj: &O, w: &WeightSequence, k: i64) -> Result<O, CalculusError> {
    check_weights(obj, w)?;
    let offsets = obj.offsets(w);
    let polys = obj.polynomials()?;
    let comps = polys
        .iter()
        .zip(offsets)
        .map(|(p, off)| p.filter(|e| e.weighted(w) + off == k).to_expr())
        .collect();
    Ok(obj.with_components(comps))
}

/// Minimum weighted degree over all monomials.
pub fn filtration_degree<O: Graded>(obj: &O, w: &WeightSequence) -> Result<Degree, CalculusError> {
    Ok(weighted_degrees(obj, w)?
        .iter()
        .map(|t| t.degree)
        .min()
        .map(Degree::Finite)
        .unwrap_or(Degree::Infinite))
}

/// Polynomial in `(t, x)` stored by powers of `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TimePolynomial {
    nvars: usize,
    powers: BTreeMap<u32, Polynomial>,
}

impl TimePolynomial {
    pub fn zero(nvars: usize) -> TimePolynomial {
        TimePolynomial {
            nvars,
            powers: BTreeMap::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Add `t^power · p`.
    pub fn add_term(&mut self, power: u32, p: &Polynomial) {
        let slot = self
            .powers
            .entry(power)
            .or_insert_with(|| Polynomial::zero(self.nvars));
        *slot = slot.add(p);
        if slot.is_zero() {
            self.powers.remove(&power);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.powers.is_empty()
    }

    /// `(power of t, coefficient polynomial in x)` pairs, ascending in `t`.
    pub fn powers(&self) -> impl Iterator<Item = (u32, &Polynomial)> {
        self.powers.iter().map(|(k, p)| (*k, p))
    }

    /// Substitute a rational value for `t`.
    pub fn at(&self, t: &BigRational) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (k, p) in &self.powers {
            out = out.add(&p.scale(&num_traits::pow(t.clone(), *k as usize)));
        }
        out
    }

    /// `∂/∂x{index}` (1-based), `t` held fixed.
    pub fn derivative(&self, index: usize) -> TimePolynomial {
        let mut out = TimePolynomial::zero(self.nvars);
        for (k, p) in &self.powers {
            out.add_term(*k, &p.derivative(index));
        }
        out
    }

    pub fn compile(&self) -> CompiledTimePolynomial {
        let mut terms = Vec::new();
        for (k, p) in &self.powers {
            for (e, c) in p.terms() {
                let factors = e
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a > 0)
                    .map(|(i, &a)| (i, a as i32))
                    .collect();
                terms.push((c.to_f64().unwrap_or(f64::NAN), *k as i32, factors));
            }
        }
        CompiledTimePolynomial { terms }
    }
}

impl fmt::Display for TimePolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.powers.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, p)) in self.powers.iter().enumerate() {
            if n > 0 {
                write!(f, " + ")?;
            }
            match k {
                0 => write!(f, "({p})")?,
                1 => write!(f, "t*({p})")?,
                k => write!(f, "t^{k}*({p})")?,
            }
        }
        Ok(())
    }
}

/// Binary64 evaluator for a [`TimePolynomial`].
#[derive(Clone, Debug)]
pub struct CompiledTimePolynomial {
    terms: Vec<(f64, i32, Vec<(usize, i32)>)>,
}

impl CompiledTimePolynomial {
    pub fn eval(&self, t: f64, p: &[f64]) -> f64 {
        let mut acc = 0.0;
        for (c, k, factors) in &self.terms {
            let mut v = *c;
            if *k > 0 {
                v *= t.powi(*k);
            }
            for &(i, a) in factors {
                v *= p[i].powi(a);
            }
            acc += v;
        }
        acc
    }
}

/// Result of `κ_t*` with `t` kept symbolic.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeScaled {
    pub kind: ObjectKind,
    pub dim: usize,
    pub labels: Vec<String>,
    pub components: Vec<TimePolynomial>,
}

impl TimeScaled {
    /// Specialize `t` to a rational value.
    pub fn at<O: Graded>(&self, like: &O, t: &BigRational) -> O {
        like.with_components(self.components.iter().map(|c| c.at(t).to_expr()).collect())
    }
}

/// `κ_t* obj` with symbolic `t`. Negative powers of `t` (only possible for
/// vector fields) are reported as errors rather than represented.
pub fn scaling_pullback<O: Graded>(obj: &O, w: &WeightSequence) -> Result<TimeScaled, CalculusError> {
    let n = obj.dim();
    let mut components = vec![TimePolynomial::zero(n); obj.components().len()];
    for term in weighted_degrees(obj, w)? {
        if term.degree < 0 {
            return Err(CalculusError::NegativeExponent {
                component: obj.label(term.component),
                monomial: term.monomial.to_string(),
                exponent: term.degree,
            });
        }
        let p = Polynomial::from_monomials(n, [term.monomial]);
        components[term.component].add_term(term.degree as u32, &p);
    }
    Ok(TimeScaled {
        kind: O::KIND,
        dim: n,
        labels: (0..components.len()).map(|k| obj.label(k)).collect(),
        components,
    })
}

fn rational_power(t: &BigRational, k: i64) -> Result<BigRational, CalculusError> {
    if k >= 0 {
        Ok(num_traits::pow(t.clone(), k as usize))
    } else if t.is_zero() {
        Err(CalculusError::ZeroScale)
    } else {
        Ok(num_traits::pow(t.recip(), (-k) as usize))
    }
}

/// `κ_t* obj` for a rational `t`. Exact per monomial on polynomial objects;
/// otherwise by substituting `x_i ↦ t^{w_i} x_i` in the expressions.
pub fn scaling_pullback_at<O: Graded>(
    obj: &O,
    w: &WeightSequence,
    t: &BigRational,
) -> Result<O, CalculusError> {
    check_weights(obj, w)?;
    let offsets = obj.offsets(w);
    if let Ok(polys) = obj.polynomials() {
        let mut comps = Vec::with_capacity(polys.len());
        for (p, off) in polys.iter().zip(&offsets) {
            let mut out = Polynomial::zero(obj.dim());
            for (e, c) in p.terms() {
                let factor = rational_power(t, e.weighted(w) + off)?;
                out.add_term(e.clone(), c * factor);
            }
            comps.push(out.to_expr());
        }
        return Ok(obj.with_components(comps));
    }
    let subs: Vec<Expr> = (0..obj.dim())
        .map(|i| {
            let s = num_traits::pow(t.clone(), w.get(i) as usize);
            Expr::mul(Expr::Const(s), Expr::var(i + 1))
        })
        .collect();
    let mut comps = Vec::with_capacity(offsets.len());
    for (e, off) in obj.components().iter().zip(&offsets) {
        let factor = rational_power(t, *off)?;
        let scaled = e.substitute(&subs);
        comps.push(if factor.is_one() {
            scaled
        } else {
            Expr::mul(Expr::Const(factor), scaled)
        });
    }
    Ok(obj.with_components(comps))
}
