//! Normal-form pipelines: weighted linearization, the Morse and Morse-Bott
//! lemma, and symplectic normalization (Darboux, Weinstein, isotropic).

mod linearize;
mod morse;
mod symplectic;

use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::flow::{FlowError, FlowMap, IntegratorConfig};
use crate::numeric::{NumericError, PointField};
use crate::verify::{GridSpec, ResidualReport, VerifyError};
use crate::weighted::{CalculusError, EulerLikeReport, OneForm, ScalarField, TwoForm, VectorField, WeightSequence};

pub use linearize::linearize;
pub use morse::{morse_factor, morse_normalize, MorseFactorization, MorseField, MAX_HESSIAN_CONDITION};
pub use symplectic::{
    isotropic_model_form, symplectic_normalize, IsotropicModel, ModelCheck, SymplecticField,
};

/// Seed of the random sample points used for derivative spot checks.
pub const SAMPLE_SEED: u64 = 0x5EED_2020;
pub const SAMPLE_COUNT: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NormalError {
    #[error("weights {weights} not allowed here: {reason}")]
    Weights { weights: String, reason: String },
    #[error("does not vanish to second order on N: {}", .jet.join(", "))]
    NotSecondOrder { jet: Vec<String> },
    #[error("not polynomial")]
    NotPolynomial,
    #[error("degenerate normal Hessian at {point:?} (condition number {condition:e})")]
    DegenerateHessian { point: Vec<f64>, condition: f64 },
    #[error("ω degenerate at 0 (determinant {determinant:e})")]
    DegenerateForm { determinant: f64 },
    #[error("leading form ω_[{k}] degenerate at 0 (determinant {determinant:e})")]
    DegenerateLeadingForm { k: i64, determinant: f64 },
    #[error("filtration degree {degree} of ω is not positive")]
    FiltrationDegree { degree: String },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Numeric(#[from] NumericError),
}

impl From<crate::expr::NotPolynomial> for NormalError {
    fn from(_: crate::expr::NotPolynomial) -> Self {
        NormalError::NotPolynomial
    }
}

impl NormalError {
    /// The Euler-like report carried by a rejected input, if any.
    pub fn euler_like_report(&self) -> Option<&EulerLikeReport> {
        match self {
            NormalError::Flow(FlowError::NotEulerLike(r)) => Some(r),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskKind {
    Linearize,
    Morse,
    Symplectic,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Linearize => "linearize",
            TaskKind::Morse => "morse",
            TaskKind::Symplectic => "symplectic",
        }
    }
}

/// The normal form `φ*X = E`, `φ*f = f_[2]` or `φ*ω = ω_[k]`.
#[derive(Clone, Debug, PartialEq)]
pub enum Target {
    Field(VectorField),
    Function(ScalarField),
    Form(TwoForm),
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Target::Field(x) => write!(f, "{x}"),
            Target::Function(g) => write!(f, "{g}"),
            Target::Form(om) => write!(f, "{om}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalConfig {
    pub integrator: IntegratorConfig,
    pub grid: GridSpec,
}

impl NormalConfig {
    pub fn for_dim(dim: usize) -> NormalConfig {
        NormalConfig {
            integrator: IntegratorConfig::default(),
            grid: GridSpec::default_for(dim),
        }
    }
}

pub struct NormalFormResult {
    pub task: TaskKind,
    pub input_digest: String,
    pub flow: FlowMap,
    /// The Euler-like field whose Moser flow is `φ`.
    pub field: Arc<dyn PointField>,
    pub target: Target,
    pub residuals: ResidualReport,
    pub verdict: bool,
    pub warnings: Vec<String>,
    /// Filtration degree `k` of a symplectic input.
    pub degree: Option<i64>,
    pub primitive: Option<OneForm>,
    pub factorization: Option<MorseFactorization>,
}

impl fmt::Debug for NormalFormResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NormalFormResult")
            .field("task", &self.task)
            .field("input_digest", &self.input_digest)
            .field("target", &self.target)
            .field("residuals", &self.residuals)
            .field("verdict", &self.verdict)
            .field("warnings", &self.warnings)
            .field("degree", &self.degree)
            .finish()
    }
}

/// SHA-256 over the task, the weights and the canonical printed input.
pub fn input_digest(task: TaskKind, w: &WeightSequence, object: &dyn fmt::Display) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}\n{}\n{}", task.name(), w, object));
    hex::encode(h.finalize())
}

/// Seeded uniform sample points in the grid box.
pub fn sample_points(grid: &GridSpec, dim: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
    let r = grid.radius();
    (0..SAMPLE_COUNT)
        .map(|_| (0..dim).map(|_| rng.gen_range(-r..=r)).collect())
        .collect()
}

/// Determinant over the rationals by Gaussian elimination.
pub(crate) fn rational_det(m: &[Vec<BigRational>]) -> BigRational {
    let n = m.len();
    let mut a = m.to_vec();
    let mut det = BigRational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !a[r][col].is_zero()) else {
            return BigRational::zero();
        };
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let p = a[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] / &p;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
        }
    }
    det
}
