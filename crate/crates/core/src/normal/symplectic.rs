use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;

use super::{
    input_digest, rational_det, sample_points, NormalConfig, NormalError, NormalFormResult, Target,
    TaskKind,
};
use crate::expr::{Compiled, Expr, Polynomial};
use crate::flow::{check_samples, moser_path_numeric, FlowMap};
use crate::numeric::{determinant, fd_jacobian, solve_row_major, NumericError, PointField};
use crate::verify::{
    jacobian_at_origin, max_over, pullback_residual_form, ResidualEntry, ResidualReport, FD_STEP,
};
use crate::weighted::{
    closedness_defect, contract, filtration_degree, upper_pairs, weighted_euler_field, graded_component, homotopy_primitive, weighted_degrees,
    CalculusError, Degree, Graded, OneForm, TwoForm, WeightSequence,
};

/// Determinants at or below this are treated as zero.
const DEGENERACY_THRESHOLD: f64 = 1e-12;

/// `X` defined by `ι_X ω = k·α`, solved pointwise.
#[derive(Clone, Debug)]
pub struct SymplecticField {
    dim: usize,
    k: f64,
    /// Upper-triangle entries `((i, j), ω_ij)`, `i < j`.
    omega: Vec<((usize, usize), Compiled)>,
    alpha: Vec<Option<Compiled>>,
    /// `k·α − ι_E ω`, so that `X − E` solves without cancellation.
    defect: Vec<Option<Compiled>>,
}

impl SymplecticField {
    pub fn new(omega: &TwoForm, alpha: &OneForm, k: i64, w: &WeightSequence) -> Result<SymplecticField, NormalError> {
        let n = omega.dim();
        let compile = |e: &Expr| (!e.is_zero()).then(|| Compiled::new(e));
        let iota_e = contract(&weighted_euler_field(w), omega)?;
        let defect = (0..n)
            .map(|j| {
                let ka = Expr::mul(Expr::rational(k, 1), alpha.components()[j].clone());
                compile(&Expr::sub(ka, iota_e.components()[j].clone()).canonical(n))
            })
            .collect();
        Ok(SymplecticField {
            dim: n,
            k: k as f64,
            omega: upper_pairs(n)
                .into_iter()
                .filter_map(|(i, j)| compile(omega.upper(i, j)).map(|c| ((i, j), c)))
                .collect(),
            alpha: alpha.components().iter().map(compile).collect(),
            defect,
        })
    }

    /// Writes `Ωᵀ` at `p` row-major into `m`, where `Ω_ij = ω_ij`.
    fn transposed_into(&self, p: &[f64], m: &mut [f64]) -> Result<(), NumericError> {
        let n = self.dim;
        m.fill(0.0);
        for &((i, j), ref c) in &self.omega {
            let v = c.eval(p)?;
            m[j * n + i] = v;
            m[i * n + j] = -v;
        }
        Ok(())
    }

    fn solve_against(&self, p: &[f64], rhs: &[Option<Compiled>], scale: f64) -> Result<Vec<f64>, NumericError> {
        let n = self.dim;
        let (mut a_stack, mut b_stack) = ([0.0; 36], [0.0; 6]);
        let (mut a_heap, mut b_heap) = (Vec::new(), Vec::new());
        let (a, b): (&mut [f64], &mut [f64]) = if n <= 6 {
            (&mut a_stack[..n * n], &mut b_stack[..n])
        } else {
            a_heap.resize(n * n, 0.0);
            b_heap.resize(n, 0.0);
            (&mut a_heap, &mut b_heap)
        };
        for (j, c) in rhs.iter().enumerate() {
            if let Some(c) = c {
                b[j] = scale * c.eval(p)?;
            }
        }
        self.transposed_into(p, a)?;
        solve_row_major(n, a, b).ok_or_else(|| NumericError::Singular {
            point: p.to_vec(),
            detail: "ω is degenerate".into(),
        })
    }

    /// `ι_X ω` at `p`, component `j` being `Σ_i X_i ω_ij`.
    pub fn contraction(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        let x = self.eval(p)?;
        let n = self.dim;
        let mut om_t = vec![0.0; n * n];
        self.transposed_into(p, &mut om_t)?;
        Ok((0..n).map(|j| (0..n).map(|i| om_t[j * n + i] * x[i]).sum()).collect())
    }
}

impl PointField for SymplecticField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, p: &[f64]) -> Result<Vec<f64>, NumericError> {
        self.solve_against(p, &self.alpha, self.k)
    }

    fn eval_minus_euler(&self, p: &[f64], _: &WeightSequence) -> Result<Vec<f64>, NumericError> {
        self.solve_against(p, &self.defect, 1.0)
    }
}

fn require_closed(omega: &TwoForm) -> Result<(), NormalError> {
    match closedness_defect(omega) {
        Some((indices, coefficient)) => Err(CalculusError::NotClosed { indices, coefficient }.into()),
        None => Ok(()),
    }
}

fn check_nondegenerate(omega: &TwoForm, w: &WeightSequence) -> Result<i64, NormalError> {
    let n = omega.dim();
    if n != w.dim() {
        return Err(CalculusError::DimensionMismatch {
            left: n,
            right: w.dim(),
        }
        .into());
    }
    omega.polynomials()?;
    require_closed(omega)?;
    let k = match filtration_degree(omega, w)? {
        Degree::Finite(k) if k >= 1 => k,
        d => return Err(NormalError::FiltrationDegree { degree: d.to_string() }),
    };
    let origin = vec![0.0; n];
    let det = determinant(&omega.matrix_at(&origin).map_err(NumericError::from)?);
    if !(det.abs() > DEGENERACY_THRESHOLD) {
        return Err(NormalError::DegenerateForm { determinant: det });
    }
    let leading = graded_component(omega, w, k)?;
    let det = determinant(&leading.matrix_at(&origin).map_err(NumericError::from)?);
    if !(det.abs() > DEGENERACY_THRESHOLD) {
        return Err(NormalError::DegenerateLeadingForm { k, determinant: det });
    }
    Ok(k)
}

/// `φ` with `φ*ω = ω_[k]`, `k` the filtration degree of `ω`. A caller's
/// expected `k` only produces a warning when it disagrees.
pub fn symplectic_normalize(
    omega: &TwoForm,
    w: &WeightSequence,
    cfg: &NormalConfig,
    expected_k: Option<i64>,
) -> Result<NormalFormResult, NormalError> {
    let k = check_nondegenerate(omega, w)?;
    let n = omega.dim();
    let alpha = homotopy_primitive(omega, w)?;
    let field = Arc::new(SymplecticField::new(omega, &alpha, k, w)?);
    let path = moser_path_numeric(field.clone(), w, &check_samples(&cfg.grid, n))?;
    let flow = FlowMap::forward(Arc::new(path), cfg.integrator)?;
    let target = graded_component(omega, w, k)?;

    let mut residuals = ResidualReport::new();
    residuals.push(pullback_residual_form(&flow, omega, &target, &cfg.grid)?);
    // L_X ω − kω = d(ι_X ω) − kω, differentiated numerically
    let max = max_over(&sample_points(&cfg.grid, n), |p| {
        let dbeta = fd_jacobian(|q| field.contraction(q), p, FD_STEP)?;
        let mut om_t = vec![0.0; n * n];
        field.transposed_into(p, &mut om_t)?;
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i + 1..n {
                let d = dbeta[j][i] - dbeta[i][j];
                worst = worst.max((d - k as f64 * om_t[j * n + i]).abs());
            }
        }
        Ok(worst)
    })?;
    residuals.push(ResidualEntry::new("lie_derivative", None, max, 1e-8));
    residuals.push(jacobian_at_origin(&flow)?);

    let mut warnings = Vec::new();
    if let Some(e) = expected_k {
        if e != k {
            warnings.push(format!("expected k = {e} but the filtration degree of ω is {k}"));
        }
    }
    let verdict = residuals.verdict();
    Ok(NormalFormResult {
        task: TaskKind::Symplectic,
        input_digest: input_digest(TaskKind::Symplectic, w, omega),
        flow,
        field,
        target: Target::Form(target),
        residuals,
        verdict,
        warnings,
        degree: Some(k),
        primitive: Some(alpha),
        factorization: None,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelCheck {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IsotropicModel {
    pub omega2: TwoForm,
    pub checks: Vec<ModelCheck>,
}

impl IsotropicModel {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&ModelCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn indices_of(w: &WeightSequence, weight: u32) -> Vec<usize> {
    (0..w.dim()).filter(|&i| w.get(i) == weight).collect()
}

/// Degree-2 part of `ω` for weights in `{0, 1, 2}` and the structure checks
/// of the isotropic local model: filtration degree at least 2, `ω_[2]`
/// nondegenerate at 0, and along `N` the block pattern
///
/// ```text
///          w=0   w=1   w=2
///   w=0  [  0     0     P  ]
///   w=1  [  0     S     0  ]
///   w=2  [ -Pᵀ    0     0  ]
/// ```
///
/// with `S` and the pairing `P` invertible at 0.
pub fn isotropic_model_form(omega: &TwoForm, w: &WeightSequence) -> Result<IsotropicModel, NormalError> {
    let n = omega.dim();
    if n != w.dim() || w.as_slice().iter().any(|&v| v > 2) {
        return Err(NormalError::Weights {
            weights: w.to_string(),
            reason: format!("expected {n} entries from {{0, 1, 2}}"),
        });
    }
    omega.polynomials()?;
    require_closed(omega)?;
    let omega2 = graded_component(omega, w, 2)?;
    let mut checks = Vec::new();

    let low: Vec<String> = weighted_degrees(omega, w)?
        .into_iter()
        .filter(|t| t.degree < 2)
        .map(|t| {
            let label = omega.label(t.component);
            let m = t.monomial.to_string();
            let term = if m == "1" { label } else { format!("({m})*{label}") };
            format!("{term} at degree {}", t.degree)
        })
        .collect();
    let degree = filtration_degree(omega, w)?;
    checks.push(ModelCheck {
        name: "filtration_degree",
        passed: low.is_empty(),
        detail: if low.is_empty() {
            format!("filtration degree {degree}")
        } else {
            low.join(", ")
        },
    });

    // coefficients restricted to N, as polynomials in the base variables
    let zero_normal: Vec<Polynomial> = (0..n)
        .map(|i| {
            if w.get(i) == 0 {
                Polynomial::var(n, i + 1)
            } else {
                Polynomial::zero(n)
            }
        })
        .collect();
    let entry = |i: usize, j: usize| -> Polynomial {
        let c = omega2.coeff(i, j).to_polynomial(n).expect("polynomial form");
        c.compose(&zero_normal)
    };
    let origin = vec![BigRational::zero(); n];
    let det_at_origin = |rows: &[usize], cols: &[usize]| -> BigRational {
        let m: Vec<Vec<BigRational>> = rows
            .iter()
            .map(|&i| cols.iter().map(|&j| entry(i, j).eval_rational(&origin)).collect())
            .collect();
        rational_det(&m)
    };

    let full: Vec<usize> = (0..n).collect();
    let det = det_at_origin(&full, &full);
    checks.push(ModelCheck {
        name: "nondegenerate_at_origin",
        passed: !det.is_zero(),
        detail: format!("det ω_[2](0) = {det}"),
    });

    let (w0, w1, w2) = (indices_of(w, 0), indices_of(w, 1), indices_of(w, 2));
    let vanishing = |name: &'static str, rows: &[usize], cols: &[usize]| -> ModelCheck {
        let bad: Vec<String> = rows
            .iter()
            .flat_map(|&i| cols.iter().map(move |&j| (i, j)))
            .filter(|&(i, j)| i != j && (rows != cols || i < j))
            .filter_map(|(i, j)| {
                let p = entry(i, j);
                (!p.is_zero()).then(|| format!("dx{}^dx{}: {p}", i + 1, j + 1))
            })
            .collect();
        ModelCheck {
            name,
            passed: bad.is_empty(),
            detail: if bad.is_empty() { "vanishes on N".into() } else { bad.join(", ") },
        }
    };
    checks.push(vanishing("block_00_vanishes", &w0, &w0));
    checks.push(vanishing("block_22_vanishes", &w2, &w2));
    checks.push(vanishing("block_01_vanishes", &w0, &w1));
    checks.push(vanishing("block_21_vanishes", &w2, &w1));

    let det = det_at_origin(&w1, &w1);
    checks.push(ModelCheck {
        name: "block_11_invertible",
        passed: !det.is_zero(),
        detail: format!("det = {det}"),
    });
    let square = w0.len() == w2.len();
    let det = if square { det_at_origin(&w0, &w2) } else { BigRational::zero() };
    checks.push(ModelCheck {
        name: "block_02_invertible",
        passed: square && !det.is_zero(),
        detail: if square {
            format!("det = {det}")
        } else {
            format!("{} weight-0 against {} weight-2 coordinates", w0.len(), w2.len())
        },
    });
    Ok(IsotropicModel { omega2, checks })
}
