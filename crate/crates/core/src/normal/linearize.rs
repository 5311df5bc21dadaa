use std::sync::Arc;

use super::{input_digest, NormalConfig, NormalError, NormalFormResult, Target, TaskKind};
use crate::flow::{moser_path, FlowMap};
use crate::numeric::CompiledField;
use crate::verify::{jacobian_at_origin, pullback_residual_field, ResidualReport};
use crate::weighted::{weighted_euler_field, VectorField, WeightSequence};

/// `φ` with `φ*X = E` for a weighted Euler-like `X`.
pub fn linearize(x: &VectorField, w: &WeightSequence, cfg: &NormalConfig) -> Result<NormalFormResult, NormalError> {
    let path = moser_path(x, w)?;
    let flow = FlowMap::forward(Arc::new(path), cfg.integrator)?;
    let mut residuals = ResidualReport::new();
    residuals.push(pullback_residual_field(&flow, x, w, &cfg.grid)?);
    residuals.push(jacobian_at_origin(&flow)?);
    let verdict = residuals.verdict();
    Ok(NormalFormResult {
        task: TaskKind::Linearize,
        input_digest: input_digest(TaskKind::Linearize, w, x),
        flow,
        field: Arc::new(CompiledField::new(x)),
        target: Target::Field(weighted_euler_field(w)),
        residuals,
        verdict,
        warnings: Vec::new(),
        degree: None,
        primitive: None,
        factorization: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[u32]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn linearize_examples() {
        let cfg = NormalConfig::for_dim(2);
        let x = VectorField::parse(2, &["x1 + x2^2", "2*x2"]).unwrap();
        let r = linearize(&x, &w(&[1, 2]), &cfg).unwrap();
        assert!(r.verdict, "{r:?}");
        assert!(r.residuals.get("pullback").unwrap().max_residual < 1e-7);

        let x = VectorField::parse(2, &["x1", "2*x2 + x1^2"]).unwrap();
        let err = linearize(&x, &w(&[1, 2]), &cfg).unwrap_err();
        assert!(err.euler_like_report().is_some());
        assert!(err.to_string().contains("not Euler-like"));

        let e = weighted_euler_field(&w(&[1, 1]));
        let r = linearize(&e, &w(&[1, 1]), &cfg).unwrap();
        assert!(r.verdict);
        assert_eq!(r.residuals.get("pullback").unwrap().max_residual, 0.0);
        assert_eq!(r.flow.apply(&[0.25, -0.5]).unwrap(), vec![0.25, -0.5]);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let x = VectorField::parse(2, &["x1", "x2"]).unwrap();
        assert!(linearize(&x, &w(&[1, 1, 1]), &NormalConfig::for_dim(2)).is_err());
    }
}
