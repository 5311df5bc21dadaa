use num_bigint::BigInt;
use num_rational::BigRational;

use super::cartan::closedness_defect;
use super::{
    contract, graded_component, weighted_euler_field, CalculusError, Graded, OneForm, TwoForm,
    WeightSequence,
};
use crate::expr::{Compiled, Polynomial};
use crate::numeric::NumericError;

fn precheck(omega: &TwoForm, w: &WeightSequence) -> Result<(), CalculusError> {
    if omega.dim() != w.dim() {
        return Err(CalculusError::DimensionMismatch {
            left: omega.dim(),
            right: w.dim(),
        });
    }
    if let Some((indices, coefficient)) = closedness_defect(omega) {
        return Err(CalculusError::NotClosed {
            indices,
            coefficient,
        });
    }
    Ok(())
}

/// Primitive `α` of a closed polynomial 2-form with `dα = ω`, given by
/// the weighted homotopy operator `α = ∫₀¹ t⁻¹ κ_t* ι_E ω dt`.
///
/// On polynomials the integral is exact per degree: a monomial of
/// `ι_E ω` with weighted form-degree `D` contributes its value divided by
/// `D`. A nonzero weight-0 part of `ω` cannot be recovered this way and is
/// reported as a degree-0 obstruction.
pub fn homotopy_primitive(omega: &TwoForm, w: &WeightSequence) -> Result<OneForm, CalculusError> {
    precheck(omega, w)?;
    let n = omega.dim();
    omega.polynomials()?;
    let degree_zero = graded_component(omega, w, 0)?;
    for (k, c) in degree_zero.components().iter().enumerate() {
        if !c.is_zero() {
            return Err(CalculusError::DegreeZeroObstruction {
                component: degree_zero.label(k),
                monomial: c.to_string(),
            });
        }
    }
    let radial = contract(&weighted_euler_field(w), omega)?;
    let mut comps = Vec::with_capacity(n);
    for (j, poly) in radial.polynomials()?.into_iter().enumerate() {
        let mut out = Polynomial::zero(n);
        for m in poly.monomials() {
            let degree = m.exponents.weighted(w) + w.get(j) as i64;
            if degree <= 0 {
                return Err(CalculusError::DegreeZeroObstruction {
                    component: radial.label(j),
                    monomial: m.to_string(),
                });
            }
            out.add_term(
                m.exponents,
                m.coeff / BigRational::from_integer(BigInt::from(degree)),
            );
        }
        comps.push(out.to_expr());
    }
    OneForm::new(n, comps)
}

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p1, mut p2) = (1.0, 0.0);
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
            }
            dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / dp;
            if (z - z1).abs() < 1e-15 {
                break;
            }
        }
        let wgt = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = 0.5 * (1.0 - z);
        nodes[n - 1 - i] = 0.5 * (1.0 + z);
        weights[i] = 0.5 * wgt;
        weights[n - 1 - i] = 0.5 * wgt;
    }
    (nodes, weights)
}

/// Quadrature evaluation of the homotopy primitive at individual points,
/// for closed forms whose coefficients are not polynomial.
#[derive(Clone, Debug)]
pub struct NumericPrimitive {
    weights: WeightSequence,
    coeffs: Vec<Vec<Option<Compiled>>>,
    nodes: Vec<f64>,
    node_weights: Vec<f64>,
}

impl NumericPrimitive {
    pub fn new(omega: &TwoForm, w: &WeightSequence, nodes: usize) -> Result<NumericPrimitive, CalculusError> {
        precheck(omega, w)?;
        let n = omega.dim();
        let coeffs = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let c = omega.coeff(i, j);
                        (!c.is_zero()).then(|| Compiled::new(&c))
                    })
                    .collect()
            })
            .collect();
        let (nodes, node_weights) = gauss_legendre(nodes);
        Ok(NumericPrimitive {
            weights: w.clone(),
            coeffs,
            nodes,
            node_weights,
        })
    }

    /// `(ι_E ω)(q)`.
    fn radial(&self, q: &[f64]) -> Result<Vec<f64>, NumericError> {
        let n = q.len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let e = self.weights.get(i) as f64 * q[i];
            if e == 0.0 {
                continue;
            }
            for (j, slot) in out.iter_mut().enumerate() {
                if let Some(c) = &self.coeffs[i][j] {
                    *slot += e * c.eval(q)?;
                }
            }
        }
        Ok(out)
    }

    pub fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        let n = p.len();
        let mut alpha = vec![0.0; n];
        for (t, wt) in self.nodes.iter().zip(&self.node_weights) {
            let q = self.weights.scale_point(*t, p);
            let beta = self.radial(&q)?;
            for j in 0..n {
                alpha[j] += wt * t.powi(self.weights.get(j) as i32 - 1) * beta[j];
            }
        }
        Ok(alpha)
    }
}
