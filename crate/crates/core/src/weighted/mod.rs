//! Weight sequences and the geometric objects living on a weighted chart:
//! functions, vector fields, 1-forms and 2-forms with [`Expr`]
//! coefficients.
//!
//! A weight sequence `w` defines the scaling `κ_t(x) = (t^{w_1} x_1, …)`,
//! the weighted Euler field `E = Σ w_i x_i ∂/∂x_i`, and a grading on every
//! object kind. Under `κ_t*` a monomial `c·x^α` in
//!
//! * a function scales by `t^{Σ α_k w_k}`,
//! * the `∂/∂x_i` component of a vector field by `t^{Σ α_k w_k − w_i}`,
//! * the `dx_j` component of a 1-form by `t^{Σ α_k w_k + w_j}`,
//! * the `dx_i∧dx_j` coefficient of a 2-form by `t^{Σ α_k w_k + w_i + w_j}`.
//!
//! That exponent is the monomial's weighted degree; [`graded_component`],
//! [`filtration_degree`] and [`scaling_pullback`] are all driven by it.

mod cartan;
mod euler_like;
mod primitive;
mod scaling;

use std::fmt;

use thiserror::Error;

use crate::expr::{Expr, ExprError, NotPolynomial, Polynomial};

pub use cartan::{
    contract, exterior_derivative, is_closed, lie_derivative, lie_derivative_one_form,
    lie_derivative_two_form, three_form_coefficients, ExteriorDerivative,
};
pub use euler_like::{
    euler_like_check, euler_like_check_numeric, CheckMethod, EulerLikeReport, OffendingTerm,
    NUMERIC_EULER_TOLERANCE,
};
pub(crate) use cartan::closedness_defect;
pub use primitive::{gauss_legendre, homotopy_primitive, NumericPrimitive};
pub use scaling::{
    filtration_degree, graded_component, scaling_pullback, scaling_pullback_at, weighted_degrees,
    weighted_euler_field, CompiledTimePolynomial, Degree, GradedTerm, TimePolynomial, TimeScaled,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("invalid weight sequence: {0}")]
    InvalidWeights(String),
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("wrong number of components: expected {expected}, got {got}")]
    ComponentCount { expected: usize, got: usize },
    #[error("two-form index ({i},{j}) must satisfy 1 <= i < j <= {dim}")]
    TwoFormIndex { i: usize, j: usize, dim: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("not polynomial")]
    NotPolynomial,
    #[error("negative power t^{exponent} from term {monomial} in component {component}")]
    NegativeExponent {
        component: String,
        monomial: String,
        exponent: i64,
    },
    #[error("not closed: d(omega) has nonzero coefficient {coefficient} at {indices}")]
    NotClosed { indices: String, coefficient: String },
    #[error("degree-0 obstruction: term {monomial} in component {component} has weighted degree 0")]
    DegreeZeroObstruction { component: String, monomial: String },
    #[error("scaling by t = 0 is undefined for this object")]
    ZeroScale,
}

impl From<NotPolynomial> for CalculusError {
    fn from(_: NotPolynomial) -> Self {
        CalculusError::NotPolynomial
    }
}

/// Per-coordinate weights `w_i ≥ 0`, at least one of them positive.
///
/// Coordinates of weight 0 span the submanifold `N = {x_i = 0 : w_i ≥ 1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightSequence(Vec<u32>);

impl WeightSequence {
    pub fn new(w: Vec<u32>) -> Result<WeightSequence, CalculusError> {
        if w.is_empty() {
            return Err(CalculusError::InvalidWeights("empty".into()));
        }
        if w.iter().all(|&x| x == 0) {
            return Err(CalculusError::InvalidWeights(
                "at least one weight must be positive".into(),
            ));
        }
        Ok(WeightSequence(w))
    }

    /// All weights equal to one: the classical (unweighted) setting.
    pub fn uniform(dim: usize) -> WeightSequence {
        WeightSequence(vec![1; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    /// Weight of the 0-based coordinate `i`.
    pub fn get(&self, i: usize) -> u32 {
        self.0[i]
    }

    pub fn max(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// 0-based indices of the weight-0 (base) coordinates.
    pub fn base_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.0[i] == 0).collect()
    }

    /// 0-based indices of the positive-weight (normal) coordinates.
    pub fn normal_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| self.0[i] > 0).collect()
    }

    /// `κ_t(p)`.
    pub fn scale_point(&self, t: f64, p: &[f64]) -> Vec<f64> {
        p.iter()
            .zip(&self.0)
            .map(|(x, &w)| x * t.powi(w as i32))
            .collect()
    }

    /// Sup-norm distance from `p` to `N`.
    pub fn distance_to_base(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(&self.0)
            .filter(|(_, &w)| w > 0)
            .fold(0.0, |acc, (x, _)| acc.max(x.abs()))
    }
}

impl fmt::Display for WeightSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, w) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{w}")?;
        }
        write!(f, ")")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ObjectKind {
    Scalar,
    Vector,
    OneForm,
    TwoForm,
}

/// Common view of the four object kinds as a list of coefficient
/// expressions, each carrying a weight offset.
pub trait Graded: Clone + fmt::Debug {
    const KIND: ObjectKind;

    fn dim(&self) -> usize;

    fn components(&self) -> &[Expr];

    /// Rebuild an object of the same kind and dimension.
    fn with_components(&self, components: Vec<Expr>) -> Self;

    /// Weight offset added to a monomial's weighted degree, per component.
    fn offsets(&self, w: &WeightSequence) -> Vec<i64>;

    /// Human-readable name of component `k`.
    fn label(&self, k: usize) -> String;

    fn polynomials(&self) -> Result<Vec<Polynomial>, NotPolynomial> {
        let n = self.dim();
        self.components().iter().map(|e| e.to_polynomial(n)).collect()
    }

    fn is_polynomial(&self) -> bool {
        self.polynomials().is_ok()
    }

    /// Exact equality of the expanded coefficients.
    fn same_as(&self, other: &Self) -> Result<bool, NotPolynomial> {
        let a = self.polynomials()?;
        let b = other.polynomials()?;
        Ok(a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| x == y))
    }

    fn is_zero_object(&self) -> Result<bool, NotPolynomial> {
        Ok(self.polynomials()?.iter().all(Polynomial::is_zero))
    }

    /// Componentwise sum (canonicalized where polynomial).
    fn plus(&self, other: &Self) -> Self {
        let n = self.dim();
        self.with_components(
            self.components()
                .iter()
                .zip(other.components())
                .map(|(a, b)| Expr::add(a.clone(), b.clone()).canonical(n))
                .collect(),
        )
    }

    fn minus(&self, other: &Self) -> Self {
        let n = self.dim();
        self.with_components(
            self.components()
                .iter()
                .zip(other.components())
                .map(|(a, b)| Expr::sub(a.clone(), b.clone()).canonical(n))
                .collect(),
        )
    }

    fn scaled(&self, c: &Expr) -> Self {
        let n = self.dim();
        self.with_components(
            self.components()
                .iter()
                .map(|a| Expr::mul(c.clone(), a.clone()).canonical(n))
                .collect(),
        )
    }

    fn canonical(&self) -> Self {
        let n = self.dim();
        self.with_components(self.components().iter().map(|a| a.canonical(n)).collect())
    }

    /// Evaluate every component at `p`.
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.components()
            .iter()
            .map(|e| crate::expr::evaluate(e, p))
            .collect()
    }
}

fn check_exprs(dim: usize, exprs: &[Expr]) -> Result<(), CalculusError> {
    for e in exprs {
        e.check_dim(dim)?;
    }
    Ok(())
}

fn parse_all(dim: usize, texts: &[&str]) -> Result<Vec<Expr>, CalculusError> {
    texts
        .iter()
        .map(|s| crate::expr::parse(s, dim).map_err(CalculusError::from))
        .collect()
}

/// A function `f` on the chart.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    dim: usize,
    body: Expr,
}

impl ScalarField {
    pub fn new(dim: usize, body: Expr) -> Result<ScalarField, CalculusError> {
        check_exprs(dim, std::slice::from_ref(&body))?;
        Ok(ScalarField { dim, body })
    }

    pub fn parse(dim: usize, text: &str) -> Result<ScalarField, CalculusError> {
        let body = crate::expr::parse(text, dim)?;
        Ok(ScalarField { dim, body })
    }

    pub fn body(&self) -> &Expr {
        &self.body
    }
}

impl Graded for ScalarField {
    const KIND: ObjectKind = ObjectKind::Scalar;

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[Expr] {
        std::slice::from_ref(&self.body)
    }

    fn with_components(&self, mut components: Vec<Expr>) -> Self {
        ScalarField {
            dim: self.dim,
            body: components.remove(0),
        }
    }

    fn offsets(&self, _w: &WeightSequence) -> Vec<i64> {
        vec![0]
    }

    fn label(&self, _k: usize) -> String {
        "f".into()
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.body)
    }
}

/// `X = Σ a_i ∂/∂x_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    dim: usize,
    components: Vec<Expr>,
}

impl VectorField {
    pub fn new(dim: usize, components: Vec<Expr>) -> Result<VectorField, CalculusError> {
        if components.len() != dim {
            return Err(CalculusError::ComponentCount {
                expected: dim,
                got: components.len(),
            });
        }
        check_exprs(dim, &components)?;
        Ok(VectorField { dim, components })
    }

    pub fn parse(dim: usize, texts: &[&str]) -> Result<VectorField, CalculusError> {
        VectorField::new(dim, parse_all(dim, texts)?)
    }

    pub fn zero(dim: usize) -> VectorField {
        VectorField {
            dim,
            components: vec![Expr::zero(); dim],
        }
    }

    pub fn component(&self, i: usize) -> &Expr {
        &self.components[i]
    }
}

impl Graded for VectorField {
    const KIND: ObjectKind = ObjectKind::Vector;

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[Expr] {
        &self.components
    }

    fn with_components(&self, components: Vec<Expr>) -> Self {
        VectorField {
            dim: self.dim,
            components,
        }
    }

    fn offsets(&self, w: &WeightSequence) -> Vec<i64> {
        w.as_slice().iter().map(|&x| -(x as i64)).collect()
    }

    fn label(&self, k: usize) -> String {
        format!("∂/∂x{}", k + 1)
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.components.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// `α = Σ α_j dx_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct OneForm {
    dim: usize,
    components: Vec<Expr>,
}

impl OneForm {
    pub fn new(dim: usize, components: Vec<Expr>) -> Result<OneForm, CalculusError> {
        if components.len() != dim {
            return Err(CalculusError::ComponentCount {
                expected: dim,
                got: components.len(),
            });
        }
        check_exprs(dim, &components)?;
        Ok(OneForm { dim, components })
    }

    pub fn parse(dim: usize, texts: &[&str]) -> Result<OneForm, CalculusError> {
        OneForm::new(dim, parse_all(dim, texts)?)
    }

    pub fn zero(dim: usize) -> OneForm {
        OneForm {
            dim,
            components: vec![Expr::zero(); dim],
        }
    }

    pub fn component(&self, j: usize) -> &Expr {
        &self.components[j]
    }
}

impl Graded for OneForm {
    const KIND: ObjectKind = ObjectKind::OneForm;

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[Expr] {
        &self.components
    }

    fn with_components(&self, components: Vec<Expr>) -> Self {
        OneForm {
            dim: self.dim,
            components,
        }
    }

    fn offsets(&self, w: &WeightSequence) -> Vec<i64> {
        w.as_slice().iter().map(|&x| x as i64).collect()
    }

    fn label(&self, k: usize) -> String {
        format!("dx{}", k + 1)
    }
}

impl fmt::Display for OneForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.components.iter().enumerate().map(|(k, c)| (c, self.label(k))))
    }
}

/// Strictly upper-triangular pairs `(i, j)`, `i < j`, in row-major order
/// (0-based).
pub fn upper_pairs(dim: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim * dim.saturating_sub(1) / 2);
    for i in 0..dim {
        for j in i + 1..dim {
            out.push((i, j));
        }
    }
    out
}

fn pair_slot(dim: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < dim);
    // rows 0..i contribute (dim-1) + (dim-2) + ... + (dim-i) entries
    i * dim - i * (i + 1) / 2 + (j - i - 1)
}

/// `ω = Σ_{i<j} ω_ij dx_i∧dx_j`; only the `i < j` coefficients are stored.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    dim: usize,
    upper: Vec<Expr>,
}

impl TwoForm {
    pub fn zero(dim: usize) -> TwoForm {
        TwoForm {
            dim,
            upper: vec![Expr::zero(); dim * dim.saturating_sub(1) / 2],
        }
    }

    /// Build from `((i, j), coefficient)` entries with 1-based `i < j`.
    pub fn from_entries(
        dim: usize,
        entries: impl IntoIterator<Item = ((usize, usize), Expr)>,
    ) -> Result<TwoForm, CalculusError> {
        let mut out = TwoForm::zero(dim);
        for ((i, j), e) in entries {
            if i == 0 || i >= j || j > dim {
                return Err(CalculusError::TwoFormIndex { i, j, dim });
            }
            e.check_dim(dim)?;
            let slot = pair_slot(dim, i - 1, j - 1);
            out.upper[slot] = Expr::add(out.upper[slot].clone(), e);
        }
        Ok(out)
    }

    pub fn parse(dim: usize, entries: &[((usize, usize), &str)]) -> Result<TwoForm, CalculusError> {
        let mut parsed = Vec::with_capacity(entries.len());
        for &(ij, text) in entries {
            parsed.push((ij, crate::expr::parse(text, dim)?));
        }
        TwoForm::from_entries(dim, parsed)
    }

    /// Antisymmetric completion `ω_ij` for any 0-based `i, j`.
    pub fn coeff(&self, i: usize, j: usize) -> Expr {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => Expr::zero(),
            Less => self.upper[pair_slot(self.dim, i, j)].clone(),
            Greater => Expr::neg(self.upper[pair_slot(self.dim, j, i)].clone()),
        }
    }

    /// Stored coefficient for 0-based `i < j`.
    pub fn upper(&self, i: usize, j: usize) -> &Expr {
        &self.upper[pair_slot(self.dim, i, j)]
    }

    /// The full antisymmetric coefficient matrix at `p`.
    pub fn matrix_at(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, ExprError> {
        let n = self.dim;
        let mut m = vec![vec![0.0; n]; n];
        for (slot, (i, j)) in upper_pairs(n).into_iter().enumerate() {
            let v = crate::expr::evaluate(&self.upper[slot], p)?;
            m[i][j] = v;
            m[j][i] = -v;
        }
        Ok(m)
    }
}

impl Graded for TwoForm {
    const KIND: ObjectKind = ObjectKind::TwoForm;

    fn dim(&self) -> usize {
        self.dim
    }

    fn components(&self) -> &[Expr] {
        &self.upper
    }

    fn with_components(&self, components: Vec<Expr>) -> Self {
        TwoForm {
            dim: self.dim,
            upper: components,
        }
    }

    fn offsets(&self, w: &WeightSequence) -> Vec<i64> {
        upper_pairs(self.dim)
            .into_iter()
            .map(|(i, j)| w.get(i) as i64 + w.get(j) as i64)
            .collect()
    }

    fn label(&self, k: usize) -> String {
        let (i, j) = upper_pairs(self.dim)[k];
        format!("dx{}^dx{}", i + 1, j + 1)
    }
}

impl fmt::Display for TwoForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_terms(f, self.upper.iter().enumerate().map(|(k, c)| (c, self.label(k))))
    }
}

fn write_terms<'a>(
    f: &mut fmt::Formatter<'_>,
    terms: impl Iterator<Item = (&'a Expr, String)>,
) -> fmt::Result {
    let mut first = true;
    for (c, label) in terms {
        if c.is_zero() {
            continue;
        }
        if !first {
            write!(f, " + ")?;
        }
        first = false;
        if c == &Expr::one() {
            write!(f, "{label}")?;
        } else {
            write!(f, "({c})*{label}")?;
        }
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_validated() {
        assert!(WeightSequence::new(vec![]).is_err());
        assert!(WeightSequence::new(vec![0, 0]).is_err());
        let w = WeightSequence::new(vec![0, 1, 1, 2]).unwrap();
        assert_eq!(w.base_indices(), vec![0]);
        assert_eq!(w.normal_indices(), vec![1, 2, 3]);
        assert_eq!(w.distance_to_base(&[5.0, 0.1, -0.3, 0.2]), 0.3);
    }

    #[test]
    fn pair_slots_are_row_major() {
        for n in 2..6 {
            for (k, (i, j)) in upper_pairs(n).into_iter().enumerate() {
                assert_eq!(pair_slot(n, i, j), k);
            }
        }
    }

    #[test]
    fn two_form_antisymmetric_completion() {
        let w = TwoForm::parse(3, &[((1, 2), "1 + x1"), ((2, 3), "x3")]).unwrap();
        assert_eq!(w.coeff(0, 1), crate::expr::parse("1 + x1", 3).unwrap());
        assert_eq!(w.coeff(1, 0), Expr::neg(crate::expr::parse("1 + x1", 3).unwrap()));
        assert!(w.coeff(2, 2).is_zero());
        assert!(w.coeff(0, 2).is_zero());
        assert!(TwoForm::parse(3, &[((2, 1), "1")]).is_err());
        assert!(TwoForm::parse(3, &[((1, 4), "1")]).is_err());
        let m = w.matrix_at(&[0.5, 0.0, 2.0]).unwrap();
        assert_eq!(m[0][1], 1.5);
        assert_eq!(m[1][0], -1.5);
        assert_eq!(m[2][1], -2.0);
    }

    #[test]
    fn component_count_checked() {
        assert!(VectorField::parse(2, &["x1"]).is_err());
        assert!(VectorField::parse(2, &["x1", "x3"]).is_err());
        assert!(ScalarField::new(1, Expr::var(2)).is_err());
    }
}
