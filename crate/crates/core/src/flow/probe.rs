use crate::numeric::{sup_norm, CompiledField, PointField};
use crate::weighted::{VectorField, WeightSequence};

/// Settings of the flow-limit probe along `γ' = −X(γ)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProbeConfig {
    pub horizon: f64,
    pub step: f64,
    /// Escape radius; `None` means `10‖p‖∞ + 1`.
    pub radius: Option<f64>,
    pub tolerance: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            horizon: 30.0,
            step: 0.05,
            radius: None,
            tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeOutcome {
    /// The trajectory settled onto `N` with the final point recorded.
    ConvergedToBase { limit: Vec<f64>, distance: f64 },
    Escaped { s: f64, norm: f64 },
    Undecided { distance: f64 },
}

impl ProbeOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            ProbeOutcome::ConvergedToBase { .. } => "converged-to-N",
            ProbeOutcome::Escaped { .. } => "escaped",
            ProbeOutcome::Undecided { .. } => "undecided",
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, ProbeOutcome::ConvergedToBase { .. })
    }
}

pub fn domain_probe(x: &VectorField, w: &WeightSequence, p: &[f64], cfg: &ProbeConfig) -> ProbeOutcome {
    domain_probe_field(&CompiledField::new(x), w, p, cfg)
}

/// Does `lim_{s→∞} Φ_s(p)` exist and lie in `N`? Decided by fixed-step RK4
/// up to the horizon: converged when the distance to `N` ends below the
/// tolerance and never increases over the last quarter of the run.
pub fn domain_probe_field(x: &dyn PointField, w: &WeightSequence, p: &[f64], cfg: &ProbeConfig) -> ProbeOutcome {
    let radius = cfg.radius.unwrap_or(10.0 * sup_norm(p) + 1.0);
    let steps = (cfg.horizon / cfg.step).round().max(1.0) as usize;
    let h = cfg.horizon / steps as f64;
    let window_start = steps - steps / 4;
    let rhs = |y: &[f64]| -> Option<Vec<f64>> {
        let v = x.eval(y).ok()?;
        v.iter().all(|a| a.is_finite()).then(|| v.iter().map(|a| -a).collect())
    };
    let mut y = p.to_vec();
    let mut monotone = true;
    let mut last = w.distance_to_base(&y);
    for k in 1..=steps {
        let s = k as f64 * h;
        let escaped = |norm| ProbeOutcome::Escaped { s, norm };
        let Some(k1) = rhs(&y) else { return escaped(f64::INFINITY) };
        let Some(k2) = rhs(&offset(&y, h / 2.0, &k1)) else { return escaped(f64::INFINITY) };
        let Some(k3) = rhs(&offset(&y, h / 2.0, &k2)) else { return escaped(f64::INFINITY) };
        let Some(k4) = rhs(&offset(&y, h, &k3)) else { return escaped(f64::INFINITY) };
        for i in 0..y.len() {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = sup_norm(&y);
        if !norm.is_finite() || norm > radius {
            return escaped(norm);
        }
        let d = w.distance_to_base(&y);
        if k > window_start && d > last {
            monotone = false;
        }
        last = d;
    }
    if last < cfg.tolerance && monotone {
        ProbeOutcome::ConvergedToBase {
            limit: y,
            distance: last,
        }
    } else {
        ProbeOutcome::Undecided { distance: last }
    }
}

fn offset(y: &[f64], a: f64, k: &[f64]) -> Vec<f64> {
    y.iter().zip(k).map(|(y, k)| y + a * k).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weighted::weighted_euler_field;

    fn w(v: &[u32]) -> WeightSequence {
        WeightSequence::new(v.to_vec()).unwrap()
    }

    #[test]
    fn probe_examples() {
        let cfg = ProbeConfig::default();
        let e = weighted_euler_field(&w(&[1, 1]));
        assert!(domain_probe(&e, &w(&[1, 1]), &[0.5, 0.5], &cfg).converged());

        let x = VectorField::parse(2, &["x1 + x2^2", "2*x2"]).unwrap();
        assert!(domain_probe(&x, &w(&[1, 2]), &[0.3, 0.2], &cfg).converged());

        let rev = VectorField::parse(2, &["-x1", "-x2"]).unwrap();
        let out = domain_probe(&rev, &w(&[1, 1]), &[0.1, 0.1], &cfg);
        assert_eq!(out.label(), "escaped");
    }

    #[test]
    fn base_directions_keep_their_limit() {
        let x = VectorField::parse(2, &["0", "x2 + x1*x2"]).unwrap();
        match domain_probe(&x, &w(&[0, 1]), &[-0.3, 0.3], &ProbeConfig::default()) {
            ProbeOutcome::ConvergedToBase { limit, .. } => assert!((limit[0] + 0.3).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rotation_is_undecided() {
        let x = VectorField::parse(2, &["-x2", "x1"]).unwrap();
        let out = domain_probe(&x, &w(&[1, 1]), &[0.2, 0.0], &ProbeConfig::default());
        assert_eq!(out.label(), "undecided");
    }
}
