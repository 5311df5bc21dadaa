//! The Moser path `W_t = (κ_t*X − E)/t` and its time-one flow `φ`, which
//! satisfies `φ*X = E`.
//!
//! Orientation: with `Φ_t` the flow of `W_t` in the Lie-derivative
//! convention, `ψ(t) = Φ_{−t}(p)` solves `ψ' = W_t(ψ)`, so `φ = Φ_{−1}` is
//! the time-one map of the ODE `γ'(t) = W_t(γ(t))` integrated from
//! `t = 0` to `t = 1`. The backward direction integrates from 1 to 0 and
//! gives `φ⁻¹`.

mod probe;

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::expr::Polynomial;
use crate::numeric::{identity, mat_mul, sup_norm, CompiledField, NumericError, PointField};
use crate::verify::GridSpec;
use crate::weighted::{
    euler_like_check, euler_like_check_numeric, weighted_degrees, CompiledTimePolynomial,
    EulerLikeReport, Graded, TimePolynomial, VectorField, WeightSequence,
};

pub use probe::{domain_probe, domain_probe_field, ProbeConfig, ProbeOutcome};

/// Step of the central differences used for `DW_t` on numeric paths.
pub const NUMERIC_JACOBIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("not Euler-like: {}", describe_offending(.0))]
    NotEulerLike(EulerLikeReport),
    #[error("invalid integrator configuration: {0}")]
    InvalidConfig(String),
    #[error("trajectory escaped at t = {t}: norm {norm} exceeds bound {bound}")]
    Escape { t: f64, norm: f64, bound: f64 },
    #[error("non-finite value at t = {t}")]
    NonFinite { t: f64 },
    #[error("point has dimension {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

fn describe_offending(report: &EulerLikeReport) -> String {
    if !report.offending_terms.is_empty() {
        return report
            .offending_terms
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(", ");
    }
    match &report.method {
        crate::weighted::CheckMethod::Numeric { max_deviation, .. } => {
            format!("numeric limit deviation {max_deviation:e}")
        }
        _ => "unknown".into(),
    }
}

/// Fixed-step classical RK4 settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    pub steps: usize,
    /// Floor below which numeric paths stop evaluating the difference
    /// quotient directly.
    pub t0: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            steps: 256,
            t0: 1e-6,
        }
    }
}

impl IntegratorConfig {
    pub fn new(steps: usize, t0: f64) -> Result<IntegratorConfig, FlowError> {
        let cfg = IntegratorConfig { steps, t0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if self.steps < 8 {
            return Err(FlowError::InvalidConfig(format!(
                "steps must be at least 8, got {}",
                self.steps
            )));
        }
        if !(self.t0 > 0.0 && self.t0 <= 1e-3) {
            return Err(FlowError::InvalidConfig(format!(
                "t0 must lie in (0, 1e-3], got {}",
                self.t0
            )));
        }
        Ok(())
    }
}

enum Repr {
    Exact {
        components: Vec<TimePolynomial>,
        values: Vec<CompiledTimePolynomial>,
        /// `jacobian[i][j] = ∂W_i/∂x_j`
        jacobian: Vec<Vec<CompiledTimePolynomial>>,
    },
    Numeric {
        field: Arc<dyn PointField>,
    },
}

/// Generator of the normalizing flow.
pub struct MoserPath {
    dim: usize,
    weights: WeightSequence,
    repr: Repr,
    provenance: EulerLikeReport,
}

impl fmt::Debug for MoserPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut d = f.debug_struct("MoserPath");
        d.field("dim", &self.dim).field("weights", &self.weights);
        match &self.repr {
            Repr::Exact { components, .. } => d.field("exact", components),
            Repr::Numeric { .. } => d.field("numeric", &true),
        };
        d.finish()
    }
}

/// Build `W_t` for an Euler-like field: exactly when `X` is polynomial,
/// otherwise as a numeric evaluator.
pub fn moser_path(x: &VectorField, w: &WeightSequence) -> Result<MoserPath, FlowError> {
    if x.dim() != w.dim() {
        return Err(FlowError::Dimension {
            expected: w.dim(),
            got: x.dim(),
        });
    }
    let report = euler_like_check(x, w);
    if !report.verdict {
        return Err(FlowError::NotEulerLike(report));
    }
    let terms = match weighted_degrees(x, w) {
        Ok(terms) => terms,
        Err(_) => {
            return Ok(MoserPath {
                dim: x.dim(),
                weights: w.clone(),
                repr: Repr::Numeric {
                    field: Arc::new(CompiledField::new(x)),
                },
                provenance: report,
            })
        }
    };
    let n = x.dim();
    let mut components = vec![TimePolynomial::zero(n); n];
    for term in terms {
        // the weight-0 part equals E and cancels; nothing has negative weight
        if term.degree >= 1 {
            let p = Polynomial::from_monomials(n, [term.monomial]);
            components[term.component].add_term(term.degree as u32 - 1, &p);
        }
    }
    Ok(MoserPath::from_exact(w.clone(), components, report))
}

/// Numeric `W_t` for a field known only pointwise; the Euler-like
/// hypothesis is checked numerically on `samples`.
pub fn moser_path_numeric(
    field: Arc<dyn PointField>,
    w: &WeightSequence,
    samples: &[Vec<f64>],
) -> Result<MoserPath, FlowError> {
    if field.dim() != w.dim() {
        return Err(FlowError::Dimension {
            expected: w.dim(),
            got: field.dim(),
        });
    }
    let report = euler_like_check_numeric(field.as_ref(), w, samples);
    if !report.verdict {
        return Err(FlowError::NotEulerLike(report));
    }
    Ok(MoserPath {
        dim: field.dim(),
        weights: w.clone(),
        repr: Repr::Numeric { field },
        provenance: report,
    })
}

impl MoserPath {
    fn from_exact(weights: WeightSequence, components: Vec<TimePolynomial>, provenance: EulerLikeReport) -> MoserPath {
        let n = components.len();
        let values = components.iter().map(TimePolynomial::compile).collect();
        let jacobian = components
            .iter()
            .map(|c| (1..=n).map(|j| c.derivative(j).compile()).collect())
            .collect();
        MoserPath {
            dim: n,
            weights,
            repr: Repr::Exact {
                components,
                values,
                jacobian,
            },
            provenance,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &WeightSequence {
        &self.weights
    }

    pub fn provenance(&self) -> &EulerLikeReport {
        &self.provenance
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.repr, Repr::Exact { .. })
    }

    /// Components of `W_t` as polynomials in `(t, x)` on exact paths.
    pub fn exact_components(&self) -> Option<&[TimePolynomial]> {
        match &self.repr {
            Repr::Exact { components, .. } => Some(components),
            Repr::Numeric { .. } => None,
        }
    }

    /// `W_t ≡ 0`, so the flow is the identity.
    pub fn is_trivial(&self) -> bool {
        self.exact_components()
            .is_some_and(|c| c.iter().all(TimePolynomial::is_zero))
    }

    /// `W_t(p)`; below `t0` numeric paths extrapolate linearly from
    /// `W_{t0}` and `W_{2t0}`.
    pub fn velocity(&self, t: f64, p: &[f64], t0: f64) -> Result<Vec<f64>, FlowError> {
        match &self.repr {
            Repr::Exact { values, .. } => Ok(values.iter().map(|c| c.eval(t, p)).collect()),
            Repr::Numeric { field } if t >= t0 => self.difference_quotient(field.as_ref(), t, p),
            Repr::Numeric { field } => {
                // a constant W_{t0} would put an O(h·t0) error into the first
                // step and mask the order of the integrator
                let a = self.difference_quotient(field.as_ref(), t0, p)?;
                let b = self.difference_quotient(field.as_ref(), 2.0 * t0, p)?;
                let s = (t - t0) / t0;
                Ok(a.iter().zip(&b).map(|(a, b)| a + s * (b - a)).collect())
            }
        }
    }

    /// `(κ_t*X − E)(p)/t`, using `κ_t*E = E`.
    fn difference_quotient(&self, field: &dyn PointField, t: f64, p: &[f64]) -> Result<Vec<f64>, FlowError> {
        let q = self.weights.scale_point(t, p);
        let mut d = field.eval_minus_euler(&q, &self.weights)?;
        for (i, di) in d.iter_mut().enumerate() {
            *di /= t.powi(self.weights.get(i) as i32 + 1);
        }
        Ok(d)
    }

    /// `DW_t(p)`, symbolic on exact paths and by central differences
    /// otherwise.
    pub fn velocity_jacobian(&self, t: f64, p: &[f64], t0: f64) -> Result<Vec<Vec<f64>>, FlowError> {
        match &self.repr {
            Repr::Exact { jacobian, .. } => Ok(jacobian
                .iter()
                .map(|row| row.iter().map(|c| c.eval(t, p)).collect())
                .collect()),
            Repr::Numeric { .. } => Ok(crate::numeric::fd_jacobian(
                |q| self.velocity(t, q, t0),
                p,
                NUMERIC_JACOBIAN_STEP,
            )?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `φ`: integrate `t` from 0 to 1.
    Forward,
    /// `φ⁻¹`: integrate `t` from 1 to 0.
    Backward,
}

/// The time-one map of a [`MoserPath`] in one direction.
#[derive(Clone, Debug)]
pub struct FlowMap {
    path: Arc<MoserPath>,
    config: IntegratorConfig,
    direction: Direction,
}

impl FlowMap {
    pub fn new(path: Arc<MoserPath>, config: IntegratorConfig, direction: Direction) -> Result<FlowMap, FlowError> {
        config.validate()?;
        Ok(FlowMap {
            path,
            config,
            direction,
        })
    }

    pub fn forward(path: Arc<MoserPath>, config: IntegratorConfig) -> Result<FlowMap, FlowError> {
        FlowMap::new(path, config, Direction::Forward)
    }

    pub fn inverse(&self) -> FlowMap {
        FlowMap {
            path: self.path.clone(),
            config: self.config,
            direction: match self.direction {
                Direction::Forward => Direction::Backward,
                Direction::Backward => Direction::Forward,
            },
        }
    }

    pub fn with_config(&self, config: IntegratorConfig) -> Result<FlowMap, FlowError> {
        FlowMap::new(self.path.clone(), config, self.direction)
    }

    pub fn path(&self) -> &MoserPath {
        &self.path
    }

    pub fn config(&self) -> IntegratorConfig {
        self.config
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn dim(&self) -> usize {
        self.path.dim
    }

    fn schedule(&self) -> (f64, f64) {
        let h = 1.0 / self.config.steps as f64;
        match self.direction {
            Direction::Forward => (0.0, h),
            Direction::Backward => (1.0, -h),
        }
    }

    fn check_point(&self, p: &[f64]) -> Result<(), FlowError> {
        if p.len() != self.dim() {
            return Err(FlowError::Dimension {
                expected: self.dim(),
                got: p.len(),
            });
        }
        Ok(())
    }

    fn guard(t: f64, y: &[f64], bound: f64) -> Result<(), FlowError> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(FlowError::NonFinite { t });
        }
        let norm = sup_norm(y);
        if norm > bound {
            return Err(FlowError::Escape { t, norm, bound });
        }
        Ok(())
    }

    /// Image of `p` under the map.
    pub fn apply(&self, p: &[f64]) -> Result<Vec<f64>, FlowError> {
        self.check_point(p)?;
        if self.path.is_trivial() {
            return Ok(p.to_vec());
        }
        let bound = 10.0 * sup_norm(p) + 1.0;
        let t0 = self.config.t0;
        let (mut t, h) = self.schedule();
        let mut y = p.to_vec();
        let mut stage = vec![0.0; y.len()];
        let w = |t: f64, y: &[f64]| self.path.velocity(t, y, t0);
        let shift = |stage: &mut Vec<f64>, y: &[f64], a: f64, k: &[f64]| {
            for ((s, y), k) in stage.iter_mut().zip(y).zip(k) {
                *s = y + a * k;
            }
        };
        for _ in 0..self.config.steps {
            let k1 = w(t, &y)?;
            shift(&mut stage, &y, h / 2.0, &k1);
            let k2 = w(t + h / 2.0, &stage)?;
            shift(&mut stage, &y, h / 2.0, &k2);
            let k3 = w(t + h / 2.0, &stage)?;
            shift(&mut stage, &y, h, &k3);
            let k4 = w(t + h, &stage)?;
            for i in 0..y.len() {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t += h;
            Self::guard(t, &y, bound)?;
        }
        Ok(y)
    }

    /// Image of `p` and the Jacobian of the map at `p`, from the
    /// variational equation `J' = DW_t(γ)·J`, `J(start) = I`.
    pub fn jacobian(&self, p: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>), FlowError> {
        self.check_point(p)?;
        let n = self.dim();
        if self.path.is_trivial() {
            return Ok((p.to_vec(), identity(n)));
        }
        let bound = 10.0 * sup_norm(p) + 1.0;
        let t0 = self.config.t0;
        let (mut t, h) = self.schedule();
        let mut y = p.to_vec();
        let mut jac = identity(n);
        let rhs = |t: f64, y: &[f64], j: &[Vec<f64>]| -> Result<(Vec<f64>, Vec<Vec<f64>>), FlowError> {
            let v = self.path.velocity(t, y, t0)?;
            let dw = self.path.velocity_jacobian(t, y, t0)?;
            Ok((v, mat_mul(&dw, j)))
        };
        for _ in 0..self.config.steps {
            let (k1, l1) = rhs(t, &y, &jac)?;
            let (k2, l2) = rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k1), &maxpy(&jac, h / 2.0, &l1))?;
            let (k3, l3) = rhs(t + h / 2.0, &axpy(&y, h / 2.0, &k2), &maxpy(&jac, h / 2.0, &l2))?;
            let (k4, l4) = rhs(t + h, &axpy(&y, h, &k3), &maxpy(&jac, h, &l3))?;
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                for j in 0..n {
                    jac[i][j] += h / 6.0 * (l1[i][j] + 2.0 * l2[i][j] + 2.0 * l3[i][j] + l4[i][j]);
                }
            }
            t += h;
            Self::guard(t, &y, bound)?;
            if jac.iter().flatten().any(|v| !v.is_finite()) {
                return Err(FlowError::NonFinite { t });
            }
        }
        Ok((y, jac))
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

fn maxpy(y: &[Vec<f64>], a: f64, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
    y.iter().zip(x).map(|(r, s)| axpy(r, a, s)).collect()
}

/// Default sample set for the numeric Euler-like check of pipeline fields.
pub(crate) fn check_samples(grid: &GridSpec, dim: usize) -> Vec<Vec<f64>> {
    let coarse = GridSpec::new(grid.radius(), grid.points_per_axis().min(5)).expect("valid grid");
    coarse.points(dim)
}
