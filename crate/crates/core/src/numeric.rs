//! Pointwise numeric fields and the small dense linear algebra they need.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use thiserror::Error;

use crate::expr::{Compiled, ExprError};
use crate::weighted::{Graded, VectorField, WeightSequence};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericError {
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error("singular linear system at {point:?}: {detail}")]
    Singular { point: Vec<f64>, detail: String },
    #[error("non-finite value at {point:?}")]
    NonFinite { point: Vec<f64> },
}

/// A vector field known only through point evaluations.
pub trait PointField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError>;

    /// `X(p) − E(p)` for the weighted Euler field `E`. Fields that can form
    /// the difference without cancellation should override this; the Moser
    /// path divides it by powers of a small `t`.
    fn eval_minus_euler(&self, p: &[f64], w: &WeightSequence) -> Result<Vec<f64>, NumericError> {
        let mut v = self.eval(p)?;
        for (i, vi) in v.iter_mut().enumerate() {
            *vi -= w.get(i) as f64 * p[i];
        }
        Ok(v)
    }
}

/// Compiled components of a symbolic [`VectorField`].
#[derive(Clone, Debug)]
pub struct CompiledField {
    components: Vec<Compiled>,
}

impl CompiledField {
    pub fn new(x: &VectorField) -> CompiledField {
        CompiledField {
            components: x.components().iter().map(Compiled::new).collect(),
        }
    }
}

impl PointField for CompiledField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        let mut out = Vec::with_capacity(self.components.len());
        for c in &self.components {
            let v = c.eval(p)?;
            if !v.is_finite() {
                return Err(NumericError::NonFinite { point: p.to_vec() });
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Closure-backed [`PointField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, NumericError> + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> FnField<F> {
        FnField { dim, f }
    }
}

impl<F> PointField for FnField<F>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, NumericError> + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        (self.f)(p)
    }
}

/// Solve `a·x = b` by LU with partial pivoting.
pub fn solve(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let flat: Vec<f64> = a.iter().flat_map(|row| row.iter().copied()).collect();
    solve_row_major(n, &flat, b)
}

/// [`solve`] with `a` stored row-major in a flat slice. Small systems go
/// through fixed-size matrices, which keeps the pointwise fields in the
/// Moser flow free of heap traffic.
pub fn solve_row_major(n: usize, a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    macro_rules! fixed {
        ($n:literal) => {
            SMatrix::<f64, $n, $n>::from_row_slice(a)
                .lu()
                .solve(&SVector::<f64, $n>::from_column_slice(b))
                .map(|x| x.as_slice().to_vec())
        };
    }
    let x = match n {
        1 => fixed!(1),
        2 => fixed!(2),
        3 => fixed!(3),
        4 => fixed!(4),
        5 => fixed!(5),
        6 => fixed!(6),
        _ => DMatrix::from_row_slice(n, n, a)
            .lu()
            .solve(&DVector::from_column_slice(b))
            .map(|x| x.as_slice().to_vec()),
    }?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// 2-norm condition number; `+∞` for singular matrices.
pub fn condition_number(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 0 {
        return 1.0;
    }
    let m = DMatrix::from_fn(n, n, |i, j| a[i][j]);
    let sv = m.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn determinant(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i][j]).determinant()
}

pub fn invert(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let inv = DMatrix::from_fn(n, n, |i, j| a[i][j]).try_inverse()?;
    Some((0..n).map(|i| (0..n).map(|j| inv[(i, j)]).collect()).collect())
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(r, v)| r * v).sum())
        .collect()
}

pub fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b.first().map_or(0, Vec::len);
    let k = b.len();
    (0..n)
        .map(|i| (0..m).map(|j| (0..k).map(|l| a[i][l] * b[l][j]).sum()).collect())
        .collect()
}

pub fn transpose(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = a.first().map_or(0, Vec::len);
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `max |a_ij − b_ij|`.
pub fn matrix_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(r, s)| r.iter().zip(s).map(|(x, y)| (x - y).abs()))
        .fold(0.0, f64::max)
}

/// Central finite-difference Jacobian `J[i][j] = ∂f_i/∂x_j`.
pub fn fd_jacobian<E>(
    f: impl Fn(&[f64]) -> Result<Vec<f64>, E>,
    p: &[f64],
    h: f64,
) -> Result<Vec<Vec<f64>>, E> {
    let n = p.len();
    let mut columns = Vec::with_capacity(n);
    let mut q = p.to_vec();
    for j in 0..n {
        let (up, down) = (p[j] + h, p[j] - h);
        // divide by the step actually taken, not by the rounded 2h
        let width = up - down;
        q[j] = up;
        let plus = f(&q)?;
        q[j] = down;
        let minus = f(&q)?;
        q[j] = p[j];
        columns.push(
            plus.iter()
                .zip(&minus)
                .map(|(a, b)| (a - b) / width)
                .collect::<Vec<f64>>(),
        );
    }
    let m = columns.first().map_or(0, Vec::len);
    Ok((0..m).map(|i| (0..n).map(|j| columns[j][i]).collect()).collect())
}
