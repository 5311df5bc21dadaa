use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{max_over, GridSpec, VerifyError};
use crate::expr::Polynomial;
use crate::flow::{moser_path, FlowMap, IntegratorConfig};
use crate::weighted::{weighted_euler_field, Graded, VectorField, WeightSequence};

pub const REGRESSION_TOLERANCE: f64 = 1e-6;

/// The two perturbed Euler fields on the plane with weights (1, 2).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClosedForm {
    /// `(x + y^m) ∂x + 2y ∂y`, printed coordinate change `x̃ = x + y^m/(1−2m)`.
    A,
    /// `x ∂x + (2y + x^m) ∂y`, printed coordinate change `ỹ = y + x^m/(m−2)`.
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegressionCase {
    pub id: &'static str,
    pub family: ClosedForm,
    pub m: u32,
}

pub fn regression_cases() -> &'static [RegressionCase] {
    const CASES: [RegressionCase; 5] = [
        RegressionCase { id: "2a-m1", family: ClosedForm::A, m: 1 },
        RegressionCase { id: "2a-m2", family: ClosedForm::A, m: 2 },
        RegressionCase { id: "2a-m3", family: ClosedForm::A, m: 3 },
        RegressionCase { id: "2b-m3", family: ClosedForm::B, m: 3 },
        RegressionCase { id: "2b-m4", family: ClosedForm::B, m: 4 },
    ];
    &CASES
}

/// Which way a closed-form map relates to the engine flow `φ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orientation {
    /// The map is `φ`: `Dψ·E = X∘ψ`.
    Direct,
    /// The map is `φ⁻¹`: `Dψ·X = E∘ψ`.
    Inverse,
}

impl Orientation {
    pub fn label(self) -> &'static str {
        match self {
            Orientation::Direct => "direct",
            Orientation::Inverse => "inverse",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegressionOutcome {
    pub id: String,
    pub field: VectorField,
    /// The printed map, component by component.
    pub map: Vec<Polynomial>,
    pub direct_deviation: f64,
    pub inverse_deviation: f64,
    /// Orientation in which the engine flow matches the map on the grid.
    pub matched: Option<Orientation>,
    /// Orientation in which the map conjugates `X` to `E` exactly.
    pub symbolic: Option<Orientation>,
    pub passed: bool,
}

impl RegressionCase {
    pub fn field(&self) -> VectorField {
        let m = self.m;
        match self.family {
            ClosedForm::A => VectorField::parse(2, &[&format!("x1 + x2^{m}"), "2*x2"]),
            ClosedForm::B => VectorField::parse(2, &["x1", &format!("2*x2 + x1^{m}")]),
        }
        .expect("fixture parses")
    }

    pub fn weights(&self) -> WeightSequence {
        WeightSequence::new(vec![1, 2]).expect("valid weights")
    }

    /// The coordinate change exactly as printed for the example.
    pub fn printed_map(&self) -> Vec<Polynomial> {
        let m = self.m as i64;
        let x = Polynomial::var(2, 1);
        let y = Polynomial::var(2, 2);
        let frac = |d: i64| BigRational::new(BigInt::from(1), BigInt::from(d));
        match self.family {
            ClosedForm::A => vec![x.add(&y.pow(self.m).scale(&frac(1 - 2 * m))), y],
            ClosedForm::B => {
                let shifted = y.add(&x.pow(self.m).scale(&frac(m - 2)));
                vec![x, shifted]
            }
        }
    }
}

fn jacobian_times(map: &[Polynomial], v: &[Polynomial]) -> Vec<Polynomial> {
    map.iter()
        .map(|c| {
            v.iter()
                .enumerate()
                .fold(Polynomial::zero(c.nvars()), |acc, (j, vj)| acc.add(&c.derivative(j + 1).mul(vj)))
        })
        .collect()
}

/// Exact check of both conjugation identities for a polynomial map `ψ`.
pub fn symbolic_orientation(
    map: &[Polynomial],
    x: &VectorField,
    w: &WeightSequence,
) -> Result<Option<Orientation>, VerifyError> {
    let xs = x.polynomials().map_err(crate::weighted::CalculusError::from)?;
    let es = weighted_euler_field(w)
        .polynomials()
        .map_err(crate::weighted::CalculusError::from)?;
    let compose = |f: &[Polynomial]| -> Vec<Polynomial> { f.iter().map(|c| c.compose(map)).collect() };
    if jacobian_times(map, &es) == compose(&xs) {
        return Ok(Some(Orientation::Direct));
    }
    if jacobian_times(map, &xs) == compose(&es) {
        return Ok(Some(Orientation::Inverse));
    }
    Ok(None)
}

pub fn closed_form_regression(id: &str) -> Result<RegressionOutcome, VerifyError> {
    closed_form_regression_with(id, &GridSpec::default_for(2), IntegratorConfig::default())
}

/// Compare the engine flow and its inverse with the printed map on the
/// grid, and decide the orientation of the printed map symbolically.
pub fn closed_form_regression_with(
    id: &str,
    grid: &GridSpec,
    config: IntegratorConfig,
) -> Result<RegressionOutcome, VerifyError> {
    let case = regression_cases()
        .iter()
        .find(|c| c.id == id)
        .ok_or_else(|| VerifyError::UnknownCase(id.to_string()))?;
    let x = case.field();
    let w = case.weights();
    let map = case.printed_map();
    let forward = FlowMap::forward(Arc::new(moser_path(&x, &w)?), config)?;
    let backward = forward.inverse();
    let points = grid.points(2);
    let deviation = |flow: &FlowMap| {
        max_over(&points, |p| {
            let image = flow.apply(p)?;
            Ok(map
                .iter()
                .zip(&image)
                .map(|(c, v)| (c.eval_f64(p) - v).abs())
                .fold(0.0, f64::max))
        })
    };
    let direct_deviation = deviation(&forward)?.0;
    let inverse_deviation = deviation(&backward)?.0;
    let matched = if direct_deviation <= REGRESSION_TOLERANCE {
        Some(Orientation::Direct)
    } else if inverse_deviation <= REGRESSION_TOLERANCE {
        Some(Orientation::Inverse)
    } else {
        None
    };
    let symbolic = symbolic_orientation(&map, &x, &w)?;
    Ok(RegressionOutcome {
        id: case.id.to_string(),
        field: x,
        map,
        direct_deviation,
        inverse_deviation,
        matched,
        passed: matched.is_some() && matched == symbolic,
        symbolic,
    })
}
