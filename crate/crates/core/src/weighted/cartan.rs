use super::{upper_pairs, CalculusError, Graded, OneForm, ScalarField, TwoForm, VectorField};
use crate::expr::Expr;

fn same_dim(a: usize, b: usize) -> Result<(), CalculusError> {
    if a != b {
        return Err(CalculusError::DimensionMismatch { left: a, right: b });
    }
    Ok(())
}

fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().fold(Expr::zero(), Expr::add)
}

/// `L_X f = Σ a_i ∂f/∂x_i`.
pub fn lie_derivative(x: &VectorField, f: &ScalarField) -> Result<ScalarField, CalculusError> {
    same_dim(x.dim(), f.dim())?;
    let n = x.dim();
    let body = sum((0..n).map(|i| Expr::mul(x.component(i).clone(), f.body().differentiate(i + 1))));
    ScalarField::new(n, body.canonical(n))
}

/// `(L_X α)_j = Σ_i a_i ∂_i α_j + Σ_i α_i ∂_j a_i`.
pub fn lie_derivative_one_form(x: &VectorField, alpha: &OneForm) -> Result<OneForm, CalculusError> {
    same_dim(x.dim(), alpha.dim())?;
    let n = x.dim();
    let comps = (0..n)
        .map(|j| {
            let transport = (0..n).map(|i| {
                Expr::mul(x.component(i).clone(), alpha.component(j).differentiate(i + 1))
            });
            let twist = (0..n).map(|i| {
                Expr::mul(alpha.component(i).clone(), x.component(i).differentiate(j + 1))
            });
            sum(transport.chain(twist)).canonical(n)
        })
        .collect();
    OneForm::new(n, comps)
}

/// `(L_X ω)_ij = Σ_k a_k ∂_k ω_ij + Σ_k ω_kj ∂_i a_k + Σ_k ω_ik ∂_j a_k`.
pub fn lie_derivative_two_form(x: &VectorField, omega: &TwoForm) -> Result<TwoForm, CalculusError> {
    same_dim(x.dim(), omega.dim())?;
    let n = x.dim();
    let comps = upper_pairs(n)
        .into_iter()
        .map(|(i, j)| {
            let terms = (0..n).flat_map(|k| {
                [
                    Expr::mul(x.component(k).clone(), omega.coeff(i, j).differentiate(k + 1)),
                    Expr::mul(omega.coeff(k, j), x.component(k).differentiate(i + 1)),
                    Expr::mul(omega.coeff(i, k), x.component(k).differentiate(j + 1)),
                ]
            });
            sum(terms).canonical(n)
        })
        .collect();
    Ok(omega.with_components(comps))
}

/// `ι_X ω`, component `j` being `Σ_i a_i ω_ij`.
pub fn contract(x: &VectorField, omega: &TwoForm) -> Result<OneForm, CalculusError> {
    same_dim(x.dim(), omega.dim())?;
    let n = x.dim();
    let comps = (0..n)
        .map(|j| sum((0..n).map(|i| Expr::mul(x.component(i).clone(), omega.coeff(i, j)))).canonical(n))
        .collect();
    OneForm::new(n, comps)
}

/// The de Rham differential on functions and 1-forms.
pub trait ExteriorDerivative {
    type Output;
    fn d(&self) -> Self::Output;
}

impl ExteriorDerivative for ScalarField {
    type Output = OneForm;

    fn d(&self) -> OneForm {
        let n = self.dim();
        let comps = (0..n).map(|i| self.body().differentiate(i + 1).canonical(n)).collect();
        OneForm::new(n, comps).expect("same dimension")
    }
}

impl ExteriorDerivative for OneForm {
    type Output = TwoForm;

    /// `(dα)_ij = ∂α_j/∂x_i − ∂α_i/∂x_j`.
    fn d(&self) -> TwoForm {
        let n = self.dim();
        let comps = upper_pairs(n)
            .into_iter()
            .map(|(i, j)| {
                Expr::sub(
                    self.component(j).differentiate(i + 1),
                    self.component(i).differentiate(j + 1),
                )
                .canonical(n)
            })
            .collect();
        TwoForm::zero(n).with_components(comps)
    }
}

pub fn exterior_derivative<T: ExteriorDerivative>(x: &T) -> T::Output {
    x.d()
}

/// Coefficients of `dω` on `dx_i∧dx_j∧dx_k`, `i < j < k` (0-based).
pub fn three_form_coefficients(omega: &TwoForm) -> Vec<((usize, usize, usize), Expr)> {
    let n = omega.dim();
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let c = Expr::add(
                    Expr::sub(
                        omega.upper(j, k).differentiate(i + 1),
                        omega.upper(i, k).differentiate(j + 1),
                    ),
                    omega.upper(i, j).differentiate(k + 1),
                );
                out.push(((i, j, k), c.canonical(n)));
            }
        }
    }
    out
}

/// Sample points for closedness checks of non-polynomial forms.
fn probe_points(n: usize) -> Vec<Vec<f64>> {
    // fixed low-discrepancy points in [-0.45, 0.45]^n
    let alphas = [0.618_033_988_7, 0.754_877_666_2, 0.569_840_290_9, 0.852_799_024_3];
    (1..=24)
        .map(|s| {
            (0..n)
                .map(|d| {
                    let a = alphas[d % alphas.len()] + 0.1 * (d / alphas.len()) as f64;
                    ((s as f64 * a).fract() - 0.5) * 0.9
                })
                .collect()
        })
        .collect()
}

pub(crate) fn closedness_defect(omega: &TwoForm) -> Option<(String, String)> {
    let n = omega.dim();
    for ((i, j, k), c) in three_form_coefficients(omega) {
        let label = format!("dx{}^dx{}^dx{}", i + 1, j + 1, k + 1);
        match c.to_polynomial(n) {
            Ok(p) if p.is_zero() => continue,
            Ok(p) => return Some((label, p.to_string())),
            Err(_) => {
                for p in probe_points(n) {
                    match crate::expr::evaluate(&c, &p) {
                        Ok(v) if v.abs() <= 1e-9 => {}
                        _ => return Some((label, c.to_string())),
                    }
                }
            }
        }
    }
    None
}

/// `dω = 0`: exact for polynomial coefficients, sampled otherwise.
/// Vacuously true for `n ≤ 2`.
pub fn is_closed(omega: &TwoForm) -> bool {
    closedness_defect(omega).is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighted::{weighted_euler_field, WeightSequence};

    fn w(v: &[u32]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn lie_derivative_examples() {
        let f = ScalarField::parse(2, "x1^2 - x2^2").unwrap();
        let g = lie_derivative(&weighted_euler_field(&w(&[1, 1])), &f).unwrap();
        assert!(g.same_as(&ScalarField::parse(2, "2*x1^2 - 2*x2^2").unwrap()).unwrap());

        let f = ScalarField::parse(2, "x2").unwrap();
        let g = lie_derivative(&weighted_euler_field(&w(&[1, 2])), &f).unwrap();
        assert_eq!(g.to_string(), "2*x2");

        let x = VectorField::parse(2, &["x2", "0"]).unwrap();
        let f = ScalarField::parse(2, "x1").unwrap();
        assert_eq!(lie_derivative(&x, &f).unwrap().to_string(), "x2");
    }

    #[test]
    fn contraction_examples() {
        let om = TwoForm::parse(2, &[((1, 2), "1")]).unwrap();
        let a = contract(&weighted_euler_field(&w(&[1, 1])), &om).unwrap();
        assert_eq!(a.component(0).to_string(), "-x2");
        assert_eq!(a.component(1).to_string(), "x1");

        let om = TwoForm::parse(2, &[((1, 2), "1 + x1")]).unwrap();
        let x = VectorField::parse(2, &["1", "0"]).unwrap();
        let a = contract(&x, &om).unwrap();
        assert!(a.component(0).is_zero());
        let v = a.eval(&[0.3, 0.2]).unwrap();
        assert!((v[1] - 1.3).abs() < 1e-15);

        let a = contract(&VectorField::zero(3), &TwoForm::parse(3, &[((1, 3), "x2")]).unwrap()).unwrap();
        assert!(a.is_zero_object().unwrap());
    }

    #[test]
    fn exterior_derivative_examples() {
        let alpha = OneForm::parse(2, &["-x2/2 - x1*x2/3", "x1/2 + x1^2/3"]).unwrap();
        let d = exterior_derivative(&alpha);
        assert!(d.same_as(&TwoForm::parse(2, &[((1, 2), "1 + x1")]).unwrap()).unwrap());

        let f = ScalarField::parse(2, "x1*x2").unwrap();
        assert_eq!(f.d().to_string(), "(x2)*dx1 + (x1)*dx2");

        let f = ScalarField::parse(2, "x1^3*x2").unwrap();
        assert!(f.d().d().is_zero_object().unwrap());
    }

    #[test]
    fn closedness() {
        assert!(is_closed(&TwoForm::parse(2, &[((1, 2), "1 + x1")]).unwrap()));
        assert!(!is_closed(&TwoForm::parse(4, &[((1, 2), "x3")]).unwrap()));
        let iso = TwoForm::parse(4, &[((1, 4), "1 - x2"), ((1, 2), "-x4"), ((2, 3), "1")]).unwrap();
        assert!(is_closed(&iso));
        // non-polynomial: d(exp(x1) dx2) = exp(x1) dx1∧dx2 is closed on R^3
        let alpha = OneForm::parse(3, &["0", "exp(x1)", "sin(x2)"]).unwrap();
        assert!(is_closed(&alpha.d()));
        let bad = TwoForm::parse(3, &[((1, 2), "exp(x3)")]).unwrap();
        assert!(!is_closed(&bad));
    }

    #[test]
    fn cartan_formula_on_two_forms() {
        // L_X ω = d ι_X ω for closed ω
        let om = TwoForm::parse(3, &[((1, 2), "x3 - x3^2"), ((1, 3), "2*x1 - 2*x2*x3"), ((2, 3), "-x1")]).unwrap();
        assert!(is_closed(&om));
        let x = VectorField::parse(3, &["x1 + x2^2", "x3", "x1*x2"]).unwrap();
        let lhs = lie_derivative_two_form(&x, &om).unwrap();
        let rhs = contract(&x, &om).unwrap().d();
        assert!(lhs.same_as(&rhs).unwrap());
    }
}
