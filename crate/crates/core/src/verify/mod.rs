//! Residual suites that certify normal forms independently of the code
//! paths that produced them. Flow Jacobians here come from central finite
//! differences, never from the variational equation.

mod grid;
mod regression;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::Compiled;
use crate::flow::{FlowError, FlowMap};
use crate::numeric::{
    condition_number, fd_jacobian, identity, mat_mul, matrix_distance, solve, transpose,
    CompiledField, NumericError, PointField,
};
use crate::weighted::{CalculusError, Graded, ScalarField, TwoForm, VectorField, WeightSequence};

pub use grid::{GridError, GridSpec};
pub use regression::{
    closed_form_regression, regression_cases, ClosedForm, Orientation, RegressionCase,
    closed_form_regression_with, symbolic_orientation, RegressionOutcome, REGRESSION_TOLERANCE,
};

/// Central-difference step for flow Jacobians.
pub const FD_STEP: f64 = 1e-5;
/// Finite-difference Jacobians worse conditioned than this are rejected.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("finite-difference Jacobian is singular at {point:?} (condition number {condition:e})")]
    SingularJacobian { point: Vec<f64>, condition: f64 },
    #[error("non-finite residual at {point:?}")]
    NonFinite { point: Vec<f64> },
    #[error("dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("unknown regression case `{0}`")]
    UnknownCase(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Calculus(#[from] CalculusError),
}

impl From<crate::expr::ExprError> for VerifyError {
    fn from(e: crate::expr::ExprError) -> Self {
        VerifyError::Numeric(NumericError::Eval(e))
    }
}

/// One certified identity: the largest residual over a point set.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualEntry {
    pub name: String,
    pub grid: Option<GridSpec>,
    pub max_residual: f64,
    pub location: Option<Vec<f64>>,
    pub tolerance: f64,
    pub passed: bool,
}

impl ResidualEntry {
    pub fn new(name: &str, grid: Option<GridSpec>, max: (f64, Option<Vec<f64>>), tolerance: f64) -> ResidualEntry {
        ResidualEntry {
            name: name.to_string(),
            grid,
            max_residual: max.0,
            location: max.1,
            tolerance,
            passed: max.0 <= tolerance,
        }
    }

    /// Same measurement judged against another tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> ResidualEntry {
        self.tolerance = tolerance;
        self.passed = self.max_residual <= tolerance;
        self
    }

    pub fn named(mut self, name: &str) -> ResidualEntry {
        self.name = name.to_string();
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualReport {
    pub entries: Vec<ResidualEntry>,
}

impl ResidualReport {
    pub fn new() -> ResidualReport {
        ResidualReport::default()
    }

    pub fn push(&mut self, entry: ResidualEntry) {
        self.entries.push(entry);
    }

    pub fn verdict(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ResidualEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// Evaluate `f` at every point (in parallel) and return the largest value
/// with its point; ties keep the earliest point so results do not depend
/// on scheduling.
pub fn max_over<F>(points: &[Vec<f64>], f: F) -> Result<(f64, Option<Vec<f64>>), VerifyError>
where
    F: Fn(&[f64]) -> Result<f64, VerifyError> + Sync,
{
    let values: Vec<Result<f64, VerifyError>> = points.par_iter().map(|p| f(p)).collect();
    let mut best = (0.0, None);
    for (p, v) in points.iter().zip(values) {
        let v = v?;
        if !v.is_finite() {
            return Err(VerifyError::NonFinite { point: p.clone() });
        }
        if best.1.is_none() || v > best.0 {
            best = (v, Some(p.clone()));
        }
    }
    Ok(best)
}

/// Image and finite-difference Jacobian of the flow at `p`.
pub fn fd_flow_jacobian(flow: &FlowMap, p: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), VerifyError> {
    let image = flow.apply(p)?;
    let jac = fd_jacobian(|q| flow.apply(q), p, FD_STEP)?;
    let condition = condition_number(&jac);
    if !(condition <= MAX_CONDITION) {
        return Err(VerifyError::SingularJacobian {
            point: p.to_vec(),
            condition,
        });
    }
    Ok((image, jac))
}

fn check_dim(left: usize, right: usize) -> Result<(), VerifyError> {
    if left != right {
        return Err(VerifyError::Dimension { left, right });
    }
    Ok(())
}

/// `max_p ‖J(p)⁻¹·X(φ(p)) − E(p)‖∞`, the pointwise form of `φ*X = E`.
pub fn pullback_residual_field(
    flow: &FlowMap,
    x: &VectorField,
    w: &WeightSequence,
    grid: &GridSpec,
) -> Result<ResidualEntry, VerifyError> {
    pullback_residual_point_field(flow, &CompiledField::new(x), w, grid)
}

pub fn pullback_residual_point_field(
    flow: &FlowMap,
    x: &dyn PointField,
    w: &WeightSequence,
    grid: &GridSpec,
) -> Result<ResidualEntry, VerifyError> {
    check_dim(flow.dim(), x.dim())?;
    check_dim(flow.dim(), w.dim())?;
    let max = max_over(&grid.points(flow.dim()), |p| {
        let (image, jac) = fd_flow_jacobian(flow, p)?;
        let pushed = x.eval(&image)?;
        let pulled = solve(&jac, &pushed).ok_or_else(|| VerifyError::SingularJacobian {
            point: p.to_vec(),
            condition: f64::INFINITY,
        })?;
        Ok(pulled
            .iter()
            .enumerate()
            .map(|(i, v)| (v - w.get(i) as f64 * p[i]).abs())
            .fold(0.0, f64::max))
    })?;
    Ok(ResidualEntry::new("pullback", Some(*grid), max, 1e-7))
}

/// `max_p ‖Jᵀ·Ω(φ(p))·J − T(p)‖∞` for coefficient matrices `Ω`, `T`.
pub fn pullback_residual_form(
    flow: &FlowMap,
    omega: &TwoForm,
    target: &TwoForm,
    grid: &GridSpec,
) -> Result<ResidualEntry, VerifyError> {
    check_dim(flow.dim(), omega.dim())?;
    check_dim(flow.dim(), target.dim())?;
    let max = max_over(&grid.points(flow.dim()), |p| {
        let (image, jac) = fd_flow_jacobian(flow, p)?;
        let om = omega.matrix_at(&image)?;
        let pulled = mat_mul(&transpose(&jac), &mat_mul(&om, &jac));
        Ok(matrix_distance(&pulled, &target.matrix_at(p)?))
    })?;
    Ok(ResidualEntry::new("form_pullback", Some(*grid), max, 1e-7))
}

/// `max_p |f(φ(p)) − g(p)|`.
pub fn pullback_residual_function(
    flow: &FlowMap,
    f: &ScalarField,
    target: &ScalarField,
    grid: &GridSpec,
) -> Result<ResidualEntry, VerifyError> {
    check_dim(flow.dim(), f.dim())?;
    let (fc, gc) = (Compiled::new(f.body()), Compiled::new(target.body()));
    let max = max_over(&grid.points(flow.dim()), |p| {
        let image = flow.apply(p)?;
        Ok((fc.eval(&image)? - gc.eval(p)?).abs())
    })?;
    Ok(ResidualEntry::new("function_pullback", Some(*grid), max, 1e-8))
}

/// `‖Dφ(0) − I‖∞` from the variational equation.
pub fn jacobian_at_origin(flow: &FlowMap) -> Result<ResidualEntry, VerifyError> {
    let n = flow.dim();
    let origin = vec![0.0; n];
    let (_, jac) = flow.jacobian(&origin)?;
    let d = matrix_distance(&jac, &identity(n));
    Ok(ResidualEntry::new("jacobian_at_origin", None, (d, Some(origin)), 1e-8))
}

/// Largest deviation from weighted homogeneity of degree `k`,
/// `|t^{o_c} g_c(κ_t p) − t^k g_c(p)|` over the grid, components `c` with
/// offsets `o_c`, and `t ∈ {1, 1/2, 1/4, 1/8}`.
pub fn homogeneity_residual<O: Graded>(
    g: &O,
    w: &WeightSequence,
    k: i64,
    grid: &GridSpec,
) -> Result<ResidualEntry, VerifyError> {
    check_dim(g.dim(), w.dim())?;
    let offsets = g.offsets(w);
    let compiled: Vec<Compiled> = g.components().iter().map(Compiled::new).collect();
    let max = max_over(&grid.points(g.dim()), |p| {
        let mut worst = 0.0f64;
        for s in 0..4 {
            let t = 0.5f64.powi(s);
            let q = w.scale_point(t, p);
            for (c, o) in compiled.iter().zip(&offsets) {
                let lhs = t.powi(*o as i32) * c.eval(&q)?;
                let rhs = t.powi(k as i32) * c.eval(p)?;
                worst = worst.max((lhs - rhs).abs());
            }
        }
        Ok(worst)
    })?;
    Ok(ResidualEntry::new("homogeneity", Some(*grid), max, 1e-12))
}

/// Largest gap between the variational and finite-difference Jacobians.
pub fn jacobian_agreement(flow: &FlowMap, grid: &GridSpec) -> Result<ResidualEntry, VerifyError> {
    let max = max_over(&grid.points(flow.dim()), |p| {
        let (_, fd) = fd_flow_jacobian(flow, p)?;
        let (_, var) = flow.jacobian(p)?;
        Ok(matrix_distance(&fd, &var))
    })?;
    Ok(ResidualEntry::new("jacobian_agreement", Some(*grid), max, 1e-5))
}
