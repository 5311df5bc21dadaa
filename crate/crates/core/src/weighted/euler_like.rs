use std::fmt;

use super::{graded_component, weighted_degrees, weighted_euler_field, Graded, VectorField, WeightSequence};
use crate::expr::Monomial;
use crate::numeric::{CompiledField, PointField};
use crate::verify::GridSpec;

/// Tolerance on the Richardson-extrapolated limit deviation.
pub const NUMERIC_EULER_TOLERANCE: f64 = 1e-7;

/// Dyadic scales `t = 2^-k`, `k = 0..=NUMERIC_LEVELS`.
const NUMERIC_LEVELS: i32 = 20;

/// A monomial that keeps `X` from being weighted Euler-like.
#[derive(Clone, Debug, PartialEq)]
pub struct OffendingTerm {
    pub monomial: Monomial,
    /// 0-based index of the `∂/∂x` component.
    pub component: usize,
    pub weight: i64,
}

impl fmt::Display for OffendingTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} ∂/∂x{} (weight {})",
            self.monomial,
            self.component + 1,
            self.weight
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CheckMethod {
    Polynomial,
    Numeric {
        max_deviation: f64,
        /// Sample point and 0-based component of the largest deviation.
        location: Option<(Vec<f64>, usize)>,
        samples: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct EulerLikeReport {
    pub verdict: bool,
    pub offending_terms: Vec<OffendingTerm>,
    pub method: CheckMethod,
    pub notes: Vec<String>,
}

/// Is `lim_{t→0} κ_t* X = E`?
///
/// Polynomial fields are decided exactly: no monomial may have negative
/// weight and the weight-0 part must equal `E`. Anything else goes through
/// [`euler_like_check_numeric`] on a small grid around the origin.
pub fn euler_like_check(x: &VectorField, w: &WeightSequence) -> EulerLikeReport {
    let terms = match weighted_degrees(x, w) {
        Ok(t) => t,
        Err(_) => {
            let samples = GridSpec::new(0.5, 5).expect("valid grid").points(x.dim());
            return euler_like_check_numeric(&CompiledField::new(x), w, &samples);
        }
    };
    let mut offending: Vec<OffendingTerm> = terms
        .into_iter()
        .filter(|t| t.degree < 0)
        .map(|t| OffendingTerm {
            monomial: t.monomial,
            component: t.component,
            weight: t.degree,
        })
        .collect();
    let linear = graded_component(x, w, 0).expect("polynomial");
    let deviation = linear.minus(&weighted_euler_field(w));
    for (component, poly) in deviation.polynomials().expect("polynomial").into_iter().enumerate() {
        for monomial in poly.monomials() {
            offending.push(OffendingTerm {
                monomial,
                component,
                weight: 0,
            });
        }
    }
    EulerLikeReport {
        verdict: offending.is_empty(),
        offending_terms: offending,
        method: CheckMethod::Polynomial,
        notes: Vec::new(),
    }
}

/// Sampled version: at each point `p` and component `i`, evaluates
/// `g(t) = t^{-w_i} a_i(κ_t p)` for `t = 1, 1/2, …, 2^-20`, extrapolates
/// `2g(t/2) − g(t)` at the finest pair and compares with `w_i p_i`.
pub fn euler_like_check_numeric(
    field: &dyn PointField,
    w: &WeightSequence,
    samples: &[Vec<f64>],
) -> EulerLikeReport {
    let mut max_deviation = 0.0f64;
    let mut location = None;
    let mut notes = Vec::new();
    'points: for p in samples {
        let mut fine = None;
        let mut finer = None;
        for k in (NUMERIC_LEVELS - 1)..=NUMERIC_LEVELS {
            let t = 2f64.powi(-k);
            let q = w.scale_point(t, p);
            let v = match field.eval(&q) {
                Ok(v) => v,
                Err(e) => {
                    notes.push(format!("evaluation failed near {p:?}: {e}"));
                    max_deviation = f64::INFINITY;
                    location = Some((p.clone(), 0));
                    continue 'points;
                }
            };
            let g: Vec<f64> = v
                .iter()
                .enumerate()
                .map(|(i, a)| a / t.powi(w.get(i) as i32))
                .collect();
            if k == NUMERIC_LEVELS - 1 {
                fine = Some(g);
            } else {
                finer = Some(g);
            }
        }
        let (fine, finer) = (fine.unwrap(), finer.unwrap());
        for i in 0..p.len() {
            let limit = 2.0 * finer[i] - fine[i];
            let dev = (limit - w.get(i) as f64 * p[i]).abs();
            let dev = if dev.is_finite() { dev } else { f64::INFINITY };
            if location.is_none() || dev > max_deviation {
                max_deviation = dev;
                location = Some((p.clone(), i));
            }
        }
    }
    EulerLikeReport {
        verdict: max_deviation <= NUMERIC_EULER_TOLERANCE,
        offending_terms: Vec::new(),
        method: CheckMethod::Numeric {
            max_deviation,
            location,
            samples: samples.len(),
        },
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn perturbed_euler_field_is_euler_like_for_all_m() {
        for m in 1..6 {
            let first = format!("x1 + x2^{m}");
            let x = VectorField::parse(2, &[&first, "2*x2"]).unwrap();
            assert!(euler_like_check(&x, &w(&[1, 2])).verdict, "m = {m}");
        }
    }

    #[test]
    fn weight_zero_perturbation_is_rejected() {
        let x = VectorField::parse(2, &["x1", "2*x2 + x1^2"]).unwrap();
        let r = euler_like_check(&x, &w(&[1, 2]));
        assert!(!r.verdict);
        assert_eq!(r.offending_terms.len(), 1);
        assert_eq!(r.offending_terms[0].to_string(), "x1^2 ∂/∂x2 (weight 0)");

        let x = VectorField::parse(2, &["x1", "2*x2 + x1^3"]).unwrap();
        assert!(euler_like_check(&x, &w(&[1, 2])).verdict);
    }

    #[test]
    fn negative_weight_terms_are_listed() {
        let x = VectorField::parse(2, &["x1 + 1", "2*x2 + x1"]).unwrap();
        let r = euler_like_check(&x, &w(&[1, 2]));
        let weights: Vec<i64> = r.offending_terms.iter().map(|t| t.weight).collect();
        assert_eq!(weights, vec![-1, -1]);
    }

    #[test]
    fn euler_field_passes_for_every_weight() {
        for ws in [vec![1, 1], vec![1, 2], vec![0, 1], vec![0, 1, 1, 2], vec![3, 0, 5]] {
            let ws = w(&ws);
            let e = weighted_euler_field(&ws);
            assert!(euler_like_check(&e, &ws).verdict);
            let pts = GridSpec::new(0.5, 3).unwrap().points(ws.dim());
            assert!(euler_like_check_numeric(&CompiledField::new(&e), &ws, &pts).verdict);
        }
    }

    #[test]
    fn numeric_path_agrees_on_polynomial_fixtures() {
        let cases: &[(&[&str], &[u32])] = &[
            (&["x1 + x2^2", "2*x2"], &[1, 2]),
            (&["x1 + x2", "2*x2"], &[1, 2]),
            (&["x1", "2*x2 + x1^2"], &[1, 2]),
            (&["x1", "2*x2 + x1^3"], &[1, 2]),
            (&["x1", "2*x2 + 1"], &[1, 2]),
            (&["0", "x2 + x1*x2"], &[0, 1]),
            (&["x1", "x2"], &[0, 1]),
        ];
        let pts = GridSpec::new(0.5, 5).unwrap().points(2);
        for (comps, ws) in cases {
            let x = VectorField::parse(2, comps).unwrap();
            let ws = w(ws);
            let exact = euler_like_check(&x, &ws).verdict;
            let numeric = euler_like_check_numeric(&CompiledField::new(&x), &ws, &pts).verdict;
            assert_eq!(exact, numeric, "{comps:?}");
        }
    }

    #[test]
    fn non_polynomial_fields_use_the_numeric_path() {
        let x = VectorField::parse(2, &["sin(x1)", "2*x2"]).unwrap();
        let r = euler_like_check(&x, &w(&[1, 2]));
        assert!(r.verdict);
        assert!(matches!(r.method, CheckMethod::Numeric { .. }));
        let x = VectorField::parse(2, &["exp(x1) - 1", "2*x2 + x1^2*cos(x2)"]).unwrap();
        assert!(!euler_like_check(&x, &w(&[1, 2])).verdict);
    }
}
