use moser_normal::flow::{moser_path, FlowMap, IntegratorConfig};
use moser_normal::normal::{
    isotropic_model_form, linearize, morse_normalize, symplectic_normalize, NormalConfig, NormalError, Target,
};
use moser_normal::verify::{homogeneity_residual, jacobian_agreement, GridSpec};
use moser_normal::weighted::{
    exterior_derivative, CalculusError, Graded, ScalarField, TwoForm, VectorField, WeightSequence,
};
use std::sync::Arc;

fn w(v: &[u32]) -> WeightSequence {
    WeightSequence::new(v.to_vec()).unwrap()
}

fn small(dim: usize) -> NormalConfig {
    NormalConfig {
        grid: GridSpec::new(0.3, 5).unwrap(),
        ..NormalConfig::for_dim(dim)
    }
}

fn sup(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn inverse_flow_undoes_the_forward_flow() {
    let x = VectorField::parse(2, &["x1 + x2^3", "2*x2"]).unwrap();
    let flow = FlowMap::forward(Arc::new(moser_path(&x, &w(&[1, 2])).unwrap()), IntegratorConfig::default()).unwrap();
    let back = flow.inverse();
    for p in GridSpec::new(0.5, 5).unwrap().points(2) {
        let q = back.apply(&flow.apply(&p).unwrap()).unwrap();
        assert!(sup(&p, &q) < 1e-10, "{p:?} -> {q:?}");
    }
}

#[test]
fn exact_path_flow_matches_the_closed_form_map() {
    // X = (x + y²)∂x + 2y∂y with weights (1, 2); φ⁻¹(x, y) = (x − y²/3, y)
    let x = VectorField::parse(2, &["x1 + x2^2", "2*x2"]).unwrap();
    let res = linearize(&x, &w(&[1, 2]), &NormalConfig::for_dim(2)).unwrap();
    assert!(res.verdict);
    assert!(res.flow.path().is_exact());
    let back = res.flow.inverse();
    let p = [0.4, -0.3];
    let q = back.apply(&p).unwrap();
    assert!(sup(&q, &[0.4 - 0.09 / 3.0, -0.3]) < 1e-10, "{q:?}");
}

#[test]
fn variational_jacobian_agrees_with_differences() {
    let f = ScalarField::parse(2, "x1^2 - x2^2 + x1^3").unwrap();
    let res = morse_normalize(&f, &w(&[1, 1]), &small(2)).unwrap();
    let entry = jacobian_agreement(&res.flow, &GridSpec::new(0.3, 5).unwrap()).unwrap();
    assert!(entry.passed, "{entry:?}");
}

#[test]
fn targets_are_homogeneous() {
    let omega = TwoForm::parse(4, &[((1, 4), "1 - x2"), ((1, 2), "-x4"), ((2, 3), "1")]).unwrap();
    let ws = w(&[0, 1, 1, 2]);
    let model = isotropic_model_form(&omega, &ws).unwrap();
    let g = GridSpec::new(0.3, 3).unwrap();
    assert!(homogeneity_residual(&model.omega2, &ws, 2, &g).unwrap().passed);

    let f = ScalarField::parse(2, "(1 + x1^2)*x2^2 + x2^4").unwrap();
    let res = morse_normalize(&f, &w(&[0, 1]), &small(2)).unwrap();
    let Target::Function(t) = &res.target else {
        panic!("function target expected");
    };
    assert!(homogeneity_residual(t, &w(&[0, 1]), 2, &g).unwrap().passed);
}

#[test]
fn symplectic_primitive_and_expected_degree() {
    let omega = TwoForm::parse(2, &[((1, 2), "1 + x2")]).unwrap();
    let res = symplectic_normalize(&omega, &w(&[0, 1]), &small(2), Some(2)).unwrap();
    assert_eq!(res.degree, Some(1));
    assert!(res.warnings.iter().any(|m| m.contains("expected k = 2")), "{:?}", res.warnings);
    let alpha = res.primitive.as_ref().unwrap();
    assert!(exterior_derivative(alpha).same_as(&omega).unwrap());
}

#[test]
fn hypothesis_failures_are_reported() {
    let cfg = small(2);
    let x = VectorField::parse(2, &["x1", "2*x2 + x1^2"]).unwrap();
    let e = linearize(&x, &w(&[1, 2]), &cfg).unwrap_err();
    assert!(e.euler_like_report().is_some());

    let flat = ScalarField::parse(2, "x1^2 + x2^4").unwrap();
    assert!(matches!(
        morse_normalize(&flat, &w(&[1, 1]), &cfg),
        Err(NormalError::DegenerateHessian { .. })
    ));

    let linear = ScalarField::parse(2, "x2 + x2^2").unwrap();
    assert!(matches!(
        morse_normalize(&linear, &w(&[0, 1]), &cfg),
        Err(NormalError::NotSecondOrder { .. })
    ));

    let degenerate = TwoForm::parse(2, &[((1, 2), "x1")]).unwrap();
    assert!(matches!(
        symplectic_normalize(&degenerate, &w(&[1, 1]), &cfg, None),
        Err(NormalError::DegenerateForm { .. })
    ));

    let open = TwoForm::parse(4, &[((1, 2), "1 + x3"), ((3, 4), "1")]).unwrap();
    assert!(matches!(
        symplectic_normalize(&open, &w(&[1, 1, 1, 1]), &small(4), None),
        Err(NormalError::Calculus(CalculusError::NotClosed { .. }))
    ));
}

#[test]
fn isotropic_model_flags_low_degree_terms() {
    // dx2∧dx3 has degree 2 but x1·dx1∧dx2 has degree 1 under (0, 1, 1, 2)
    let omega = TwoForm::parse(4, &[((1, 4), "1"), ((2, 3), "1"), ((1, 2), "x1")]).unwrap();
    let model = isotropic_model_form(&omega, &w(&[0, 1, 1, 2])).unwrap();
    let check = model.check("filtration_degree").unwrap();
    assert!(!check.passed);
    assert!(check.detail.contains("degree 1"), "{}", check.detail);
    assert!(!model.passed());
}

#[test]
fn morse_radius_limit_is_reported_by_the_residual() {
    // φ leaves the region where f stays Morse before the corners of a
    // radius-0.5 box; the residual records the failure instead of hiding it
    let f = ScalarField::parse(2, "x1^2 - x2^2 + x1^3").unwrap();
    let cfg = NormalConfig::for_dim(2);
    match morse_normalize(&f, &w(&[1, 1]), &cfg) {
        Ok(res) => assert!(!res.verdict),
        Err(e) => assert!(matches!(e, NormalError::Flow(_) | NormalError::Verify(_)), "{e}"),
    }
}
