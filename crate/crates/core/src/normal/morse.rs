use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use super::{
    input_digest, sample_points, NormalConfig, NormalError, NormalFormResult, Target, TaskKind,
};
use crate::expr::{Compiled, Exponents, Polynomial};
use crate::flow::{check_samples, moser_path_numeric, FlowMap};
use crate::numeric::{condition_number, solve_row_major, NumericError, PointField};
use crate::verify::{
    jacobian_at_origin, max_over, pullback_residual_function, GridSpec, ResidualEntry, ResidualReport,
};
use crate::weighted::{graded_component, Graded, ScalarField, WeightSequence};

/// Largest admissible condition number of the normal Hessian.
pub const MAX_HESSIAN_CONDITION: f64 = 1e8;

/// `f(x, y) = ½ yᵀA(x, y) y` with `y` the weight-1 variables, and
/// `∂f/∂y = B·y` with `B = A + ½ Σ_r y_r ∂A/∂y_r`.
#[derive(Clone, Debug, PartialEq)]
pub struct MorseFactorization {
    pub dim: usize,
    /// 0-based indices of weight-0 coordinates.
    pub base: Vec<usize>,
    /// 0-based indices of weight-1 coordinates; `A` and `B` are indexed
    /// by position in this list.
    pub normal: Vec<usize>,
    pub a: Vec<Vec<Polynomial>>,
    pub b: Vec<Vec<Polynomial>>,
    f: Polynomial,
}

fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl MorseFactorization {
    pub fn function(&self) -> &Polynomial {
        &self.f
    }

    fn normal_degree(&self, e: &Exponents) -> u32 {
        self.normal.iter().map(|&i| e.0[i]).sum()
    }

    fn y(&self, c: usize) -> Polynomial {
        Polynomial::var(self.dim, self.normal[c] + 1)
    }

    /// `y ↦ 0` in every normal coordinate.
    fn on_base(&self, p: &Polynomial) -> Polynomial {
        p.filter(|e| self.normal_degree(e) == 0)
    }

    pub fn is_symmetric(&self) -> bool {
        let k = self.normal.len();
        (0..k).all(|i| (0..i).all(|j| self.a[i][j] == self.a[j][i] && self.b[i][j] == self.b[j][i]))
    }

    /// `½ yᵀ A y = f` as polynomials.
    pub fn quadratic_identity(&self) -> bool {
        let k = self.normal.len();
        let mut sum = Polynomial::zero(self.dim);
        for i in 0..k {
            for j in 0..k {
                sum = sum.add(&self.a[i][j].mul(&self.y(i)).mul(&self.y(j)));
            }
        }
        sum.scale(&rational(1, 2)) == self.f
    }

    /// `∂f/∂y_b = Σ_c B_bc y_c` as polynomials.
    pub fn gradient_identity(&self) -> bool {
        (0..self.normal.len()).all(|i| {
            let by = (0..self.normal.len())
                .fold(Polynomial::zero(self.dim), |acc, c| acc.add(&self.b[i][c].mul(&self.y(c))));
            by == self.f.derivative(self.normal[i] + 1)
        })
    }

    /// `A(x, 0)` equals the normal Hessian of `f` along `N`.
    pub fn hessian_identity(&self) -> bool {
        let k = self.normal.len();
        (0..k).all(|i| {
            (0..k).all(|j| {
                let hess = self
                    .f
                    .derivative(self.normal[i] + 1)
                    .derivative(self.normal[j] + 1);
                self.on_base(&self.a[i][j]) == self.on_base(&hess)
            })
        })
    }

    /// `X·∇f = 2f` for `X = B⁻¹A y`, cleared of denominators with the
    /// adjugate: `(adj(B)·A·y)·∇_y f = 2 det(B) f`.
    pub fn euler_identity(&self) -> bool {
        let k = self.normal.len();
        let adj = adjugate(&self.b);
        let det = determinant(&self.b);
        let ay: Vec<Polynomial> = (0..k)
            .map(|i| (0..k).fold(Polynomial::zero(self.dim), |acc, c| acc.add(&self.a[i][c].mul(&self.y(c)))))
            .collect();
        let mut lhs = Polynomial::zero(self.dim);
        for i in 0..k {
            let xi = (0..k).fold(Polynomial::zero(self.dim), |acc, c| acc.add(&adj[i][c].mul(&ay[c])));
            lhs = lhs.add(&xi.mul(&self.f.derivative(self.normal[i] + 1)));
        }
        let rhs = det.mul(&self.f).scale(&rational(2, 1));
        lhs == rhs
    }
}

fn minor(m: &[Vec<Polynomial>], row: usize, col: usize) -> Vec<Vec<Polynomial>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| {
            r.iter()
                .enumerate()
                .filter(|(j, _)| *j != col)
                .map(|(_, v)| v.clone())
                .collect()
        })
        .collect()
}

/// Determinant of a small polynomial matrix by cofactor expansion.
fn determinant(m: &[Vec<Polynomial>]) -> Polynomial {
    match m.len() {
        0 => unreachable!("normal block is never empty"),
        1 => m[0][0].clone(),
        n => {
            let nvars = m[0][0].nvars();
            (0..n).fold(Polynomial::zero(nvars), |acc, j| {
                let term = m[0][j].mul(&determinant(&minor(m, 0, j)));
                if j % 2 == 0 {
                    acc.add(&term)
                } else {
                    acc.sub(&term)
                }
            })
        }
    }
}

fn adjugate(m: &[Vec<Polynomial>]) -> Vec<Vec<Polynomial>> {
    let n = m.len();
    let nvars = m[0][0].nvars();
    if n == 1 {
        return vec![vec![Polynomial::constant(nvars, BigRational::one())]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = determinant(&minor(m, j, i));
                    if (i + j) % 2 == 0 {
                        c
                    } else {
                        c.neg()
                    }
                })
                .collect()
        })
        .collect()
}

/// Exact factorization of a function vanishing to second order along the
/// weight-0 coordinates.
pub fn morse_factor(f: &ScalarField, w: &WeightSequence) -> Result<MorseFactorization, NormalError> {
    if f.dim() != w.dim() || w.as_slice().iter().any(|&v| v > 1) {
        return Err(NormalError::Weights {
            weights: w.to_string(),
            reason: format!("expected {} entries from {{0, 1}}", f.dim()),
        });
    }
    let normal = w.normal_indices();
    if normal.is_empty() {
        return Err(NormalError::Weights {
            weights: w.to_string(),
            reason: "no normal (weight-1) coordinates".into(),
        });
    }
    let n = f.dim();
    let poly = f.body().to_polynomial(n)?;
    let mut fact = MorseFactorization {
        dim: n,
        base: w.base_indices(),
        normal,
        a: Vec::new(),
        b: Vec::new(),
        f: poly,
    };
    let jet: Vec<String> = fact
        .f
        .monomials()
        .into_iter()
        .filter(|m| fact.normal_degree(&m.exponents) < 2)
        .map(|m| m.to_string())
        .collect();
    if !jet.is_empty() {
        return Err(NormalError::NotSecondOrder { jet });
    }
    let k = fact.normal.len();
    let mut a = vec![vec![Polynomial::zero(n); k]; k];
    let mut b = vec![vec![Polynomial::zero(n); k]; k];
    for i in 0..k {
        for j in 0..k {
            let hess = fact
                .f
                .derivative(fact.normal[i] + 1)
                .derivative(fact.normal[j] + 1);
            // ∫₀¹ 2(1−s) s^d ds = 2/((d+1)(d+2)); B picks up the factor (1 + d/2)
            a[i][j] = hess.map_coeffs(|e| {
                let d = fact.normal_degree(e) as i64;
                rational(2, (d + 1) * (d + 2))
            });
            b[i][j] = hess.map_coeffs(|e| rational(1, fact.normal_degree(e) as i64 + 1));
        }
    }
    fact.a = a;
    fact.b = b;
    Ok(fact)
}

/// `X = Σ (B⁻¹A y)_b ∂/∂y_b`, zero along the base directions, evaluated by
/// pointwise linear solves.
#[derive(Clone, Debug)]
pub struct MorseField {
    dim: usize,
    normal: Vec<usize>,
    a: Vec<Vec<Option<Compiled>>>,
    b: Vec<Vec<Option<Compiled>>>,
    /// `A − B`, giving `X − E = B⁻¹(A − B)y` without cancellation.
    c: Vec<Vec<Option<Compiled>>>,
}

fn compile(m: &[Vec<Polynomial>]) -> Vec<Vec<Option<Compiled>>> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|p| (!p.is_zero()).then(|| Compiled::new(&p.to_expr())))
                .collect()
        })
        .collect()
}

fn eval_matrix(m: &[Vec<Option<Compiled>>], p: &[f64]) -> Result<Vec<Vec<f64>>, NumericError> {
    m.iter()
        .map(|row| {
            row.iter()
                .map(|c| match c {
                    Some(c) => Ok(c.eval(p)?),
                    None => Ok(0.0),
                })
                .collect()
        })
        .collect()
}

impl MorseField {
    pub fn new(fact: &MorseFactorization) -> MorseField {
        MorseField {
            dim: fact.dim,
            normal: fact.normal.clone(),
            a: compile(&fact.a),
            b: compile(&fact.b),
            c: compile(
                &fact
                    .a
                    .iter()
                    .zip(&fact.b)
                    .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a.sub(b)).collect())
                    .collect::<Vec<_>>(),
            ),
        }
    }

    /// `A(p)` over the normal indices.
    pub fn a_at(&self, p: &[f64]) -> Result<Vec<Vec<f64>>, NumericError> {
        eval_matrix(&self.a, p)
    }
}

impl PointField for MorseField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        self.solve_against(&self.a, p)
    }

    fn eval_minus_euler(&self, p: &[f64], _: &WeightSequence) -> Result<Vec<f64>, NumericError> {
        // Base weights are 0 and normal weights 1.
        self.solve_against(&self.c, p)
    }
}

impl MorseField {
    /// `B⁻¹ M y` placed in the normal slots.
    fn solve_against(&self, m: &[Vec<Option<Compiled>>], p: &[f64]) -> Result<Vec<f64>, NumericError> {
        let r = self.normal.len();
        let (mut b_stack, mut rhs_stack) = ([0.0; 36], [0.0; 6]);
        let (mut b_heap, mut rhs_heap) = (Vec::new(), Vec::new());
        let (b, rhs): (&mut [f64], &mut [f64]) = if r <= 6 {
            (&mut b_stack[..r * r], &mut rhs_stack[..r])
        } else {
            b_heap.resize(r * r, 0.0);
            rhs_heap.resize(r, 0.0);
            (&mut b_heap, &mut rhs_heap)
        };
        for row in 0..r {
            for col in 0..r {
                let y = p[self.normal[col]];
                if let Some(c) = &m[row][col] {
                    rhs[row] += c.eval(p)? * y;
                }
                if let Some(c) = &self.b[row][col] {
                    b[row * r + col] = c.eval(p)?;
                }
            }
        }
        let x = solve_row_major(r, b, rhs).ok_or_else(|| NumericError::Singular {
            point: p.to_vec(),
            detail: "B is singular".into(),
        })?;
        let mut out = vec![0.0; self.dim];
        for (c, &i) in self.normal.iter().enumerate() {
            out[i] = x[c];
        }
        Ok(out)
    }
}

/// Origin plus the grid trace on `N` (normal coordinates set to zero).
fn base_samples(grid: &GridSpec, dim: usize, base: &[usize]) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; dim]];
    if base.is_empty() {
        return out;
    }
    for q in grid.points(base.len()) {
        let mut p = vec![0.0; dim];
        for (v, &i) in q.iter().zip(base) {
            p[i] = *v;
        }
        if p.iter().any(|v| *v != 0.0) {
            out.push(p);
        }
    }
    out
}

/// `φ` with `φ*f = f_[2]` (Morse lemma, fiberwise along `N`).
pub fn morse_normalize(f: &ScalarField, w: &WeightSequence, cfg: &NormalConfig) -> Result<NormalFormResult, NormalError> {
    let fact = morse_factor(f, w)?;
    let field = Arc::new(MorseField::new(&fact));
    for p in base_samples(&cfg.grid, fact.dim, &fact.base) {
        let condition = condition_number(&field.a_at(&p)?);
        if !(condition <= MAX_HESSIAN_CONDITION) {
            return Err(NormalError::DegenerateHessian { point: p, condition });
        }
    }
    let n = fact.dim;
    let path = moser_path_numeric(field.clone(), w, &check_samples(&cfg.grid, n))?;
    let flow = FlowMap::forward(Arc::new(path), cfg.integrator)?;
    let target = graded_component(f, w, 2)?;

    let mut residuals = ResidualReport::new();
    residuals.push(pullback_residual_function(&flow, f, &target, &cfg.grid)?);
    let fc = Compiled::new(&fact.f.to_expr());
    let grad: Vec<Compiled> = (1..=n).map(|i| Compiled::new(&fact.f.derivative(i).to_expr())).collect();
    let max = max_over(&sample_points(&cfg.grid, n), |p| {
        let x = field.eval(p)?;
        let mut lie = 0.0;
        for (xi, g) in x.iter().zip(&grad) {
            if *xi != 0.0 {
                lie += xi * g.eval(p)?;
            }
        }
        Ok((lie - 2.0 * fc.eval(p)?).abs())
    })?;
    residuals.push(ResidualEntry::new("lie_derivative", None, max, 1e-10));
    residuals.push(jacobian_at_origin(&flow)?);

    let mut warnings = Vec::new();
    if !fact.euler_identity() {
        warnings.push("X·∇f = 2f does not hold as a polynomial identity".to_string());
    }
    let verdict = residuals.verdict() && warnings.is_empty();
    Ok(NormalFormResult {
        task: TaskKind::Morse,
        input_digest: input_digest(TaskKind::Morse, w, f),
        flow,
        field,
        target: Target::Function(target),
        residuals,
        verdict,
        warnings,
        degree: None,
        primitive: None,
        factorization: Some(fact),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    fn poly(dim: usize, s: &str) -> Polynomial {
        crate::expr::parse(s, dim).unwrap().to_polynomial(dim).unwrap()
    }

    #[test]
    fn morse_fixture_factorization() {
        let f = ScalarField::parse(2, "x1^2 - x2^2 + x1^3").unwrap();
        let fact = morse_factor(&f, &w(&[1, 1])).unwrap();
        assert_eq!(fact.a[0][0], poly(2, "2 + 2*x1"));
        assert!(fact.a[0][1].is_zero() && fact.a[1][0].is_zero());
        assert_eq!(fact.a[1][1], poly(2, "-2"));
        assert_eq!(fact.b[0][0], poly(2, "2 + 3*x1"));
        assert_eq!(fact.b[1][1], poly(2, "-2"));
        assert!(fact.is_symmetric());
        assert!(fact.quadratic_identity());
        assert!(fact.gradient_identity());
        assert!(fact.hessian_identity());
        assert!(fact.euler_identity());
    }

    #[test]
    fn morse_bott_fixture_factorization() {
        let f = ScalarField::parse(2, "(1 + x1^2)*x2^2 + x2^4").unwrap();
        let fact = morse_factor(&f, &w(&[0, 1])).unwrap();
        assert_eq!(fact.base, vec![0]);
        assert_eq!(fact.a[0][0], poly(2, "2*(1 + x1^2) + 2*x2^2"));
        assert_eq!(fact.b[0][0], poly(2, "2*(1 + x1^2) + 4*x2^2"));
        assert!(fact.quadratic_identity() && fact.gradient_identity() && fact.euler_identity());
    }

    #[test]
    fn factor_errors() {
        let f = ScalarField::parse(2, "x2").unwrap();
        match morse_factor(&f, &w(&[0, 1])) {
            Err(NormalError::NotSecondOrder { jet }) => assert_eq!(jet, vec!["x2".to_string()]),
            other => panic!("{other:?}"),
        }
        let f = ScalarField::parse(2, "x1 + x2^2").unwrap();
        assert!(matches!(morse_factor(&f, &w(&[0, 1])), Err(NormalError::NotSecondOrder { .. })));
        let f = ScalarField::parse(2, "x2^2").unwrap();
        assert!(matches!(morse_factor(&f, &w(&[0, 2])), Err(NormalError::Weights { .. })));
        let f = ScalarField::parse(2, "cos(x2)").unwrap();
        assert_eq!(morse_factor(&f, &w(&[0, 1])), Err(NormalError::NotPolynomial));
    }

    #[test]
    fn three_normal_directions() {
        let f = ScalarField::parse(3, "x1^2 + x2*x3 + x1*x2*x3 - x3^4").unwrap();
        let fact = morse_factor(&f, &w(&[1, 1, 1])).unwrap();
        assert!(fact.is_symmetric());
        assert!(fact.quadratic_identity() && fact.gradient_identity());
        assert!(fact.hessian_identity() && fact.euler_identity());
    }

    #[test]
    fn morse_bott_field_has_no_base_component() {
        let f = ScalarField::parse(2, "(1 + x1^2)*x2^2 + x2^4").unwrap();
        let field = MorseField::new(&morse_factor(&f, &w(&[0, 1])).unwrap());
        let v = field.eval(&[0.3, 0.2]).unwrap();
        assert_eq!(v[0], 0.0);
        let expected = 0.2 * (2.0 * 1.09 + 2.0 * 0.04) / (2.0 * 1.09 + 4.0 * 0.04);
        assert!((v[1] - expected).abs() < 1e-15);
    }

    #[test]
    fn degenerate_hessian_is_rejected() {
        let f = ScalarField::parse(2, "x1*x2^2").unwrap();
        match morse_normalize(&f, &w(&[0, 1]), &NormalConfig::for_dim(2)) {
            Err(NormalError::DegenerateHessian { point, .. }) => assert_eq!(point, vec![0.0, 0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn saddle_is_already_normal() {
        let f = ScalarField::parse(2, "x1*x2").unwrap();
        let r = morse_normalize(&f, &w(&[1, 1]), &NormalConfig::for_dim(2)).unwrap();
        assert!(r.verdict, "{r:?}");
        let y = r.flow.apply(&[0.3, -0.2]).unwrap();
        assert!((y[0] - 0.3).abs() < 1e-12 && (y[1] + 0.2).abs() < 1e-12);
    }
}
