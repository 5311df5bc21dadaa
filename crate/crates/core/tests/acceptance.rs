//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero when any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use moser_normal::expr::Expr;
use moser_normal::flow::{domain_probe, domain_probe_field, FlowMap, IntegratorConfig, ProbeConfig};
use moser_normal::normal::{
    isotropic_model_form, linearize, morse_normalize, symplectic_normalize, NormalConfig, NormalFormResult,
};
use moser_normal::numeric::PointField;
use moser_normal::verify::{
    closed_form_regression, jacobian_at_origin, pullback_residual_point_field, regression_cases, GridSpec,
};
use moser_normal::weighted::{
    contract, euler_like_check, exterior_derivative, filtration_degree, graded_component, homotopy_primitive,
    lie_derivative, lie_derivative_one_form, scaling_pullback_at, weighted_degrees, weighted_euler_field, Degree,
    Graded, OneForm, ScalarField, TwoForm, VectorField, WeightSequence,
};
use num_bigint::BigInt;
use num_rational::BigRational;

/// Wall-clock budget of a single criterion.
const BUDGET: Duration = Duration::from_secs(5);

const CLOSED_FORM_TOL: f64 = 1e-6;
const FIELD_PULLBACK_TOL: f64 = 1e-7;
const JACOBIAN_TOL: f64 = 1e-8;
const FUNCTION_PULLBACK_TOL: f64 = 1e-8;
const FORM_PULLBACK_TOL: f64 = 1e-7;
const LIE_TOL: f64 = 1e-8;
const ISOTROPIC_PULLBACK_TOL: f64 = 1e-6;
/// Richardson ratio for a fourth-order method, ±20 %.
const RICHARDSON_TARGET: f64 = 16.0;
const RICHARDSON_SLACK: f64 = 0.2;
/// Differences below this are roundoff and carry no order information.
const RICHARDSON_FLOOR: f64 = 1e-12;
const T0_TOL: f64 = 1e-5;

type Outcome = Result<String, String>;

fn w(v: &[u32]) -> WeightSequence {
    WeightSequence::new(v.to_vec()).unwrap()
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn grid(radius: f64, points: usize) -> GridSpec {
    GridSpec::new(radius, points).unwrap()
}

fn cfg(dim: usize, g: GridSpec) -> NormalConfig {
    NormalConfig {
        grid: g,
        ..NormalConfig::for_dim(dim)
    }
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

struct Fixtures;

impl Fixtures {
    fn morse_f() -> ScalarField {
        ScalarField::parse(2, "x1^2 - x2^2 + x1^3").unwrap()
    }

    fn morse_bott_f() -> ScalarField {
        ScalarField::parse(2, "(1 + x1^2)*x2^2 + x2^4").unwrap()
    }

    fn darboux() -> TwoForm {
        TwoForm::parse(2, &[((1, 2), "1 + x1")]).unwrap()
    }

    fn weinstein() -> TwoForm {
        TwoForm::parse(2, &[((1, 2), "1 + x2")]).unwrap()
    }

    fn isotropic() -> TwoForm {
        TwoForm::parse(4, &[((1, 4), "1 - x2"), ((1, 2), "-x4"), ((2, 3), "1")]).unwrap()
    }

    fn morse() -> Result<NormalFormResult, String> {
        morse_normalize(&Self::morse_f(), &w(&[1, 1]), &cfg(2, grid(0.3, 11))).map_err(err)
    }

    fn morse_bott() -> Result<NormalFormResult, String> {
        morse_normalize(&Self::morse_bott_f(), &w(&[0, 1]), &NormalConfig::for_dim(2)).map_err(err)
    }

    fn darboux_result() -> Result<NormalFormResult, String> {
        symplectic_normalize(&Self::darboux(), &w(&[1, 1]), &cfg(2, grid(0.4, 11)), None).map_err(err)
    }

    fn weinstein_result() -> Result<NormalFormResult, String> {
        symplectic_normalize(&Self::weinstein(), &w(&[0, 1]), &cfg(2, grid(0.4, 11)), None).map_err(err)
    }

    fn isotropic_result() -> Result<NormalFormResult, String> {
        symplectic_normalize(&Self::isotropic(), &w(&[0, 1, 1, 2]), &NormalConfig::for_dim(4), None).map_err(err)
    }

    /// Every pipeline with a numerically evaluated Moser path, with its
    /// weights.
    fn numeric_pipelines() -> Result<Vec<(&'static str, NormalFormResult, WeightSequence)>, String> {
        Ok(vec![
            ("morse", Self::morse()?, w(&[1, 1])),
            ("morse-bott", Self::morse_bott()?, w(&[0, 1])),
            ("darboux", Self::darboux_result()?, w(&[1, 1])),
            ("weinstein", Self::weinstein_result()?, w(&[0, 1])),
            ("isotropic", Self::isotropic_result()?, w(&[0, 1, 1, 2])),
        ])
    }

    /// The symbolic Euler-like fields: the closed-form examples and the
    /// Euler fields themselves.
    fn symbolic_fields() -> Vec<(String, VectorField, WeightSequence)> {
        let mut out: Vec<(String, VectorField, WeightSequence)> = regression_cases()
            .iter()
            .map(|c| (c.id.to_string(), c.field(), c.weights()))
            .collect();
        for ws in [w(&[1, 2]), w(&[1, 1]), w(&[0, 1, 1, 2])] {
            out.push((format!("E{ws}"), weighted_euler_field(&ws), ws));
        }
        out
    }
}

fn c01() -> Outcome {
    let mut notes = Vec::new();
    for case in regression_cases() {
        let out = closed_form_regression(case.id).map_err(err)?;
        let deviation = out.direct_deviation.min(out.inverse_deviation);
        ensure(
            deviation < CLOSED_FORM_TOL,
            format!("{}: grid deviation {deviation:e}", case.id),
        )?;
        let symbolic = out
            .symbolic
            .ok_or_else(|| format!("{}: printed map conjugates X to E in neither direction", case.id))?;
        ensure(out.passed, format!("{}: numeric and symbolic orientations disagree", case.id))?;
        notes.push(format!("{} {} {deviation:.1e}", case.id, symbolic.label()));
    }
    Ok(notes.join(", "))
}

fn c02() -> Outcome {
    let x = VectorField::parse(2, &["x1", "2*x2 + x1^2"]).unwrap();
    let report = euler_like_check(&x, &w(&[1, 2]));
    ensure(!report.verdict, "accepted as Euler-like")?;
    let terms: Vec<String> = report.offending_terms.iter().map(|t| t.to_string()).collect();
    ensure(
        terms.iter().any(|t| t == "x1^2 ∂/∂x2 (weight 0)"),
        format!("offending terms {terms:?}"),
    )?;
    Ok(format!("rejected: {}", terms.join(", ")))
}

fn c03() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = (0.0f64, 0.0f64);
    let mut judge = |name: &str, pullback: f64, jac: f64| {
        worst = (worst.0.max(pullback), worst.1.max(jac));
        if !(pullback < FIELD_PULLBACK_TOL) {
            failures.push(format!("{name}: pullback {pullback:e}"));
        }
        if !(jac < JACOBIAN_TOL) {
            failures.push(format!("{name}: ‖Dφ(0) − I‖ = {jac:e}"));
        }
    };
    for (name, x, ws) in Fixtures::symbolic_fields() {
        let res = linearize(&x, &ws, &NormalConfig::for_dim(x.dim())).map_err(err)?;
        let pullback = res.residuals.get("pullback").unwrap().max_residual;
        let jac = res.residuals.get("jacobian_at_origin").unwrap().max_residual;
        judge(&name, pullback, jac);
    }
    for (name, res, ws) in Fixtures::numeric_pipelines()? {
        let g = res.residuals.entries[0].grid.unwrap();
        let pullback = pullback_residual_point_field(&res.flow, res.field.as_ref(), &ws, &g)
            .map_err(err)?
            .max_residual;
        let jac = jacobian_at_origin(&res.flow).map_err(err)?.max_residual;
        judge(name, pullback, jac);
    }
    let summary = format!("max pullback {:.1e}, max ‖Dφ(0) − I‖ {:.1e}", worst.0, worst.1);
    if failures.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{} ({summary})", failures.join("; ")))
    }
}

fn c04() -> Outcome {
    let res = Fixtures::morse()?;
    let r = res.residuals.get("function_pullback").unwrap().max_residual;
    ensure(r < FUNCTION_PULLBACK_TOL, format!("|f∘φ − f_[2]| = {r:e}"))?;
    let fact = res.factorization.as_ref().unwrap();
    ensure(fact.quadratic_identity(), "½xᵀAx ≠ f")?;
    ensure(fact.gradient_identity(), "∂f ≠ Bx")?;
    ensure(fact.euler_identity(), "X·∇f ≠ 2f")?;
    ensure(
        res.target.to_string() == ScalarField::parse(2, "x1^2 - x2^2").unwrap().to_string(),
        format!("target {}", res.target),
    )?;
    Ok(format!("|f∘φ − f_[2]| {r:.1e}, identities exact"))
}

fn c05() -> Outcome {
    let res = Fixtures::morse_bott()?;
    let r = res.residuals.get("function_pullback").unwrap().max_residual;
    ensure(r < FUNCTION_PULLBACK_TOL, format!("|f∘φ − f_[2]| = {r:e}"))?;
    let target = ScalarField::parse(2, "(1 + x1^2)*x2^2").unwrap();
    ensure(
        res.target.to_string() == target.canonical().to_string(),
        format!("target {}", res.target),
    )?;
    for p in NormalConfig::for_dim(2).grid.points(2) {
        let v = res.field.eval(&p).map_err(err)?;
        ensure(v[0] == 0.0, format!("base component {} at {p:?}", v[0]))?;
    }
    Ok(format!("|f∘φ − f_[2]| {r:.1e}, base component identically 0"))
}

fn c06() -> Outcome {
    let res = Fixtures::darboux_result()?;
    let r = res.residuals.get("form_pullback").unwrap().max_residual;
    ensure(r < FORM_PULLBACK_TOL, format!("form pullback {r:e}"))?;
    let alpha = res.primitive.as_ref().unwrap();
    ensure(
        exterior_derivative(alpha).same_as(&Fixtures::darboux()).map_err(err)?,
        format!("dα ≠ ω for α = {alpha}"),
    )?;
    let lie = res.residuals.get("lie_derivative").unwrap().max_residual;
    ensure(lie < LIE_TOL, format!("L_Xω − 2ω = {lie:e}"))?;
    ensure(res.degree == Some(2), format!("k = {:?}", res.degree))?;
    Ok(format!("pullback {r:.1e}, dα = ω exact, L_Xω − 2ω {lie:.1e}"))
}

fn c07() -> Outcome {
    let res = Fixtures::weinstein_result()?;
    ensure(res.degree == Some(1), format!("k = {:?}", res.degree))?;
    let r = res.residuals.get("form_pullback").unwrap().max_residual;
    ensure(r < FORM_PULLBACK_TOL, format!("form pullback {r:e}"))?;
    let target = TwoForm::parse(2, &[((1, 2), "1")]).unwrap();
    ensure(res.target.to_string() == target.to_string(), format!("target {}", res.target))?;
    Ok(format!("k = 1, pullback {r:.1e}"))
}

fn c08() -> Outcome {
    let omega = Fixtures::isotropic();
    let ws = w(&[0, 1, 1, 2]);
    let degree = filtration_degree(&omega, &ws).map_err(err)?;
    ensure(degree == Degree::Finite(2), format!("filtration degree {degree}"))?;
    let model = isotropic_model_form(&omega, &ws).map_err(err)?;
    for c in &model.checks {
        ensure(c.passed, format!("{}: {}", c.name, c.detail))?;
    }
    let expected = TwoForm::parse(4, &[((1, 4), "1"), ((2, 3), "1")]).unwrap();
    ensure(
        model.omega2.same_as(&expected).map_err(err)?,
        format!("ω_[2] = {}", model.omega2),
    )?;
    let res = Fixtures::isotropic_result()?;
    let entry = res.residuals.get("form_pullback").unwrap();
    ensure(
        entry.grid.map(|g| g.radius()) == Some(0.3),
        format!("grid {:?}", entry.grid),
    )?;
    ensure(
        entry.max_residual < ISOTROPIC_PULLBACK_TOL,
        format!("form pullback {:e}", entry.max_residual),
    )?;
    Ok(format!(
        "degree 2, {} block checks, pullback {:.1e}",
        model.checks.len(),
        entry.max_residual
    ))
}

fn degrees<O: Graded>(obj: &O, ws: &WeightSequence) -> Result<Vec<i64>, String> {
    let mut d: Vec<i64> = weighted_degrees(obj, ws)
        .map_err(err)?
        .iter()
        .map(|t| t.degree)
        .collect();
    d.sort_unstable();
    d.dedup();
    Ok(d)
}

fn c09() -> Outcome {
    let mut checked = 0usize;
    let k_expr = |k: i64| Expr::int(k);

    // L_E f_[k] = k·f_[k]
    let functions = [
        (Fixtures::morse_f(), w(&[1, 1])),
        (Fixtures::morse_bott_f(), w(&[0, 1])),
    ];
    for (f, ws) in &functions {
        let e = weighted_euler_field(ws);
        for k in degrees(f, ws)? {
            let fk = graded_component(f, ws, k).map_err(err)?;
            let lhs = lie_derivative(&e, &fk).map_err(err)?;
            ensure(
                lhs.same_as(&fk.scaled(&k_expr(k))).map_err(err)?,
                format!("L_E f_[{k}] ≠ {k}·f_[{k}] for {f}"),
            )?;
            checked += 1;
        }
    }

    // ι_E ω_[k] = k·α_[k] for the homotopy primitive α
    let forms = [
        (Fixtures::darboux(), w(&[1, 1])),
        (Fixtures::weinstein(), w(&[0, 1])),
        (Fixtures::isotropic(), w(&[0, 1, 1, 2])),
    ];
    let mut primitives = Vec::new();
    for (om, ws) in &forms {
        let e = weighted_euler_field(ws);
        let alpha = homotopy_primitive(om, ws).map_err(err)?;
        for k in degrees(om, ws)? {
            let omk = graded_component(om, ws, k).map_err(err)?;
            let ak = graded_component(&alpha, ws, k).map_err(err)?;
            ensure(
                contract(&e, &omk).map_err(err)?.same_as(&ak.scaled(&k_expr(k))).map_err(err)?,
                format!("ι_E ω_[{k}] ≠ {k}·α_[{k}] for {om}"),
            )?;
            checked += 1;
        }
        primitives.push((alpha, ws.clone()));
    }

    // (L_X α)_[m] = Σ_{k+ℓ=m} L_{X_[k]} α_[ℓ], each term homogeneous
    let w12 = w(&[1, 2]);
    let one_forms = [
        exterior_derivative(&Fixtures::morse_f()),
        homotopy_primitive(&Fixtures::darboux(), &w12).map_err(err)?,
        OneForm::parse(2, &["x2", "x1^2*x2"]).unwrap(),
    ];
    for (name, x, ws) in Fixtures::symbolic_fields().into_iter().filter(|(_, _, ws)| *ws == w12) {
        for alpha in &one_forms {
            let total = lie_derivative_one_form(&x, alpha).map_err(err)?;
            let dx = degrees(&x, &ws)?;
            let da = degrees(alpha, &ws)?;
            for m in degrees(&total, &ws)? {
                let mut sum = OneForm::zero(2);
                for &k in &dx {
                    let l = m - k;
                    if !da.contains(&l) {
                        continue;
                    }
                    let term = lie_derivative_one_form(
                        &graded_component(&x, &ws, k).map_err(err)?,
                        &graded_component(alpha, &ws, l).map_err(err)?,
                    )
                    .map_err(err)?;
                    ensure(
                        graded_component(&term, &ws, m).map_err(err)?.same_as(&term).map_err(err)?,
                        format!("{name}: L_(X_[{k}]) α_[{l}] not homogeneous of degree {m}"),
                    )?;
                    sum = sum.plus(&term);
                }
                ensure(
                    graded_component(&total, &ws, m).map_err(err)?.same_as(&sum).map_err(err)?,
                    format!("{name}: (L_X α)_[{m}] ≠ Σ L_(X_[k]) α_[ℓ] for α = {alpha}"),
                )?;
                checked += 1;
            }
        }
    }

    // κ_s*∘κ_t* = κ_{st}*
    let scales = [(rat(1, 2), rat(3, 1)), (rat(-1, 3), rat(2, 1)), (rat(5, 4), rat(1, 5))];
    fn monoid<O: Graded>(obj: &O, ws: &WeightSequence, s: &BigRational, t: &BigRational) -> Result<(), String> {
        let composed = scaling_pullback_at(&scaling_pullback_at(obj, ws, t).map_err(err)?, ws, s).map_err(err)?;
        let direct = scaling_pullback_at(obj, ws, &(s * t)).map_err(err)?;
        ensure(
            composed.same_as(&direct).map_err(err)?,
            format!("κ_{s}*∘κ_{t}* ≠ κ_{}* on {obj:?}", s * t),
        )
    }
    for (s, t) in &scales {
        for (f, ws) in &functions {
            monoid(f, ws, s, t)?;
        }
        for (om, ws) in &forms {
            monoid(om, ws, s, t)?;
        }
        for (alpha, ws) in &primitives {
            monoid(alpha, ws, s, t)?;
        }
        for (_, x, ws) in Fixtures::symbolic_fields() {
            monoid(&x, &ws, s, t)?;
        }
        checked += 1;
    }
    Ok(format!("{checked} identity groups exact"))
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Points for the order check: the whole grid in the plane, its corners
/// in higher dimensions.
fn order_points(g: &GridSpec, dim: usize) -> Vec<Vec<f64>> {
    if dim <= 2 {
        return g.points(dim);
    }
    let r = g.radius();
    (0..1usize << dim)
        .map(|mask| (0..dim).map(|i| if mask >> i & 1 == 1 { r } else { -r }).collect())
        .collect()
}

fn c10() -> Outcome {
    let mut notes = Vec::new();
    let mut resolved = 0;
    for (name, res, _) in Fixtures::numeric_pipelines()? {
        let g = res.residuals.entries[0].grid.unwrap();
        let t0 = res.flow.config().t0;
        let flows: Vec<FlowMap> = [256, 512, 1024]
            .iter()
            .map(|&s| res.flow.with_config(IntegratorConfig::new(s, t0).unwrap()).map_err(err))
            .collect::<Result<_, _>>()?;
        // point with the largest coarse difference
        let mut best = (0.0f64, 0.0f64, Vec::new());
        for p in order_points(&g, res.flow.dim()) {
            let phi: Vec<Vec<f64>> = flows.iter().map(|f| f.apply(&p)).collect::<Result<_, _>>().map_err(err)?;
            let d1 = max_diff(&phi[0], &phi[1]);
            if d1 > best.0 {
                best = (d1, max_diff(&phi[1], &phi[2]), p);
            }
        }
        let (d1, d2, p) = best;
        if d1 < RICHARDSON_FLOOR {
            notes.push(format!("{name} exact to roundoff (d1 {d1:.1e})"));
        } else {
            let ratio = d1 / d2;
            ensure(
                (ratio - RICHARDSON_TARGET).abs() <= RICHARDSON_SLACK * RICHARDSON_TARGET,
                format!("{name}: ratio {ratio:.3} at {p:?} (d1 {d1:e}, d2 {d2:e})"),
            )?;
            resolved += 1;
            notes.push(format!("{name} ratio {ratio:.2}"));
        }

        let coarse = res.flow.with_config(IntegratorConfig::new(256, 1e-4).unwrap()).map_err(err)?;
        let fine = res.flow.with_config(IntegratorConfig::new(256, 1e-6).unwrap()).map_err(err)?;
        let mut shift = 0.0f64;
        for p in order_points(&g, res.flow.dim()) {
            shift = shift.max(max_diff(&coarse.apply(&p).map_err(err)?, &fine.apply(&p).map_err(err)?));
        }
        ensure(shift < T0_TOL, format!("{name}: t0 1e-4 → 1e-6 moves φ by {shift:e}"))?;
    }
    ensure(resolved > 0, "no fixture resolves the integration error")?;
    Ok(notes.join(", "))
}

fn c11() -> Outcome {
    let probe = ProbeConfig::default();
    let mut starts = 0usize;
    let radius = 0.3;
    for (name, x, ws) in Fixtures::symbolic_fields() {
        for p in grid(radius, 11.min(GridSpec::default_for(x.dim()).points_per_axis())).points(x.dim()) {
            let out = domain_probe(&x, &ws, &p, &probe);
            ensure(out.converged(), format!("{name} from {p:?}: {out:?}"))?;
            starts += 1;
        }
    }
    for (name, res, ws) in Fixtures::numeric_pipelines()? {
        let field: Arc<dyn PointField> = res.field.clone();
        let n = field.dim();
        for p in grid(radius, GridSpec::default_for(n).points_per_axis()).points(n) {
            let out = domain_probe_field(field.as_ref(), &ws, &p, &probe);
            ensure(out.converged(), format!("{name} from {p:?}: {out:?}"))?;
            starts += 1;
        }
    }
    let ws = w(&[1, 1]);
    let reversed = VectorField::parse(2, &["-x1", "-x2"]).unwrap();
    let mut escapes = 0usize;
    for p in grid(radius, 11).points(2) {
        if p.iter().all(|v| *v == 0.0) {
            continue;
        }
        let out = domain_probe(&reversed, &ws, &p, &probe);
        ensure(out.label() == "escaped", format!("reversed E from {p:?}: {out:?}"))?;
        escapes += 1;
    }
    Ok(format!("{starts} starts converged to N, reversed E escaped from {escapes}"))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

/// The report text up to the timing block, which is the only part allowed
/// to vary between runs.
fn body_text(stdout: &[u8]) -> Result<String, String> {
    let text = String::from_utf8(stdout.to_vec()).map_err(err)?;
    let cut = text
        .find("\n  \"timing\"")
        .ok_or_else(|| "report has no timing block".to_string())?;
    Ok(text[..cut].to_string())
}

fn c12() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_moser-normal");
    let fixtures = Command::new(bin).arg("--fixtures").output().map_err(err)?;
    ensure(
        fixtures.status.code() == Some(0),
        format!("--fixtures exited {:?}", fixtures.status.code()),
    )?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(workspace_root().join("problems"))
        .map_err(err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(err)?;
    files.retain(|p| p.extension().is_some_and(|e| e == "json"));
    files.sort();
    ensure(!files.is_empty(), "no problem files")?;
    for path in &files {
        let first = Command::new(bin).arg(path).output().map_err(err)?;
        let second = Command::new(bin)
            .arg(path)
            .env("MOSER_NORMAL_THREADS", "2")
            .output()
            .map_err(err)?;
        let name = path.file_name().unwrap().to_string_lossy();
        ensure(
            first.status.code() == second.status.code(),
            format!("{name}: exit codes {:?} and {:?}", first.status.code(), second.status.code()),
        )?;
        ensure(
            body_text(&first.stdout)? == body_text(&second.stdout)?,
            format!("{name}: report bodies differ"),
        )?;
    }
    Ok(format!("--fixtures exit 0, {} problem files byte-identical", files.len()))
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 12] = [
        ("C01", "closed-form regressions", c01),
        ("C02", "non-linearizable rejection", c02),
        ("C03", "linearization contract", c03),
        ("C04", "Morse lemma", c04),
        ("C05", "Morse-Bott lemma", c05),
        ("C06", "Darboux", c06),
        ("C07", "Weinstein local model", c07),
        ("C08", "isotropic local model", c08),
        ("C09", "graded calculus identities", c09),
        ("C10", "integrator order", c10),
        ("C11", "domain probe", c11),
        ("C12", "CLI determinism", c12),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > BUDGET => Err(format!("over budget ({detail})")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name} [{:.2}s]: {detail}", elapsed.as_secs_f64()),
            Err(reason) => {
                failed += 1;
                println!("FAIL {id} {name} [{:.2}s]: {reason}", elapsed.as_secs_f64());
            }
        }
    }
    println!("{} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
