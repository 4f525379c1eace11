//! Empirical constant of the level-set Poincaré inequality on an interval
//! `B`:
//!
//! `int_B int_B |u(x) - u(y)|^p <= C (|B|^{(N+p)/N} int_B int_B_{|u(x) - u(y)| > delta} delta^p / |x - y|^{N+p} + delta^p |B|^2)`.

use serde::Serialize;

use crate::error::{invalid, LabError, Result};
use crate::field::ScalarField;
use crate::functional::{eval_functional, Estimate, FunctionalSpec, IntegrationPlan};
use crate::geometry::Aabb;
use crate::quadrature::GaussLegendre;

const PANELS_PER_PIECE: usize = 128;
const NODES_PER_PANEL: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareReport {
    pub field: String,
    pub ball: Aabb,
    pub p: f64,
    pub delta: f64,
    /// `int_B int_B |u(x) - u(y)|^p`.
    pub lhs: f64,
    /// BN(delta) restricted to `B x B`.
    pub functional: Estimate,
    pub rhs_functional_term: f64,
    pub rhs_delta_term: f64,
    /// `lhs / (rhs_functional_term + rhs_delta_term)`; 0 when the functional
    /// term diverges.
    pub empirical_constant: f64,
    pub functional_diverged: bool,
}

/// Gauss–Legendre nodes on `[lo, hi]`, split at the field's breakpoints.
fn nodes(u: &ScalarField, lo: f64, hi: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![lo, hi];
    cuts.extend(u.breakpoints().into_iter().filter(|&b| b > lo && b < hi));
    cuts.sort_by(f64::total_cmp);
    let gl = GaussLegendre::new(NODES_PER_PANEL);
    let mut out = Vec::new();
    for seg in cuts.windows(2) {
        let w = (seg[1] - seg[0]) / PANELS_PER_PIECE as f64;
        for j in 0..PANELS_PER_PIECE {
            let a = seg[0] + w * j as f64;
            out.extend(gl.mapped(a, a + w));
        }
    }
    out
}

/// `int_B int_B |u(x) - u(y)|^p` by tensor Gauss–Legendre.
pub fn oscillation_integral(u: &ScalarField, lo: f64, hi: f64, p: f64) -> f64 {
    let pts: Vec<(f64, f64)> = nodes(u, lo, hi).into_iter().map(|(x, w)| (u.eval1(x), w)).collect();
    pts.iter()
        .map(|&(ux, wx)| wx * pts.iter().map(|&(uy, wy)| wy * (ux - uy).abs().powf(p)).sum::<f64>())
        .sum()
}

/// Default interval: the support padded by a quarter of its length.
pub fn default_ball(u: &ScalarField) -> Aabb {
    let s = u.support_box();
    let pad = 0.25 * (s.hi[0] - s.lo[0]);
    s.padded(pad)
}

/// One report per `delta` on the interval `ball` (one-dimensional fields).
pub fn poincare_study(
    u: &ScalarField,
    ball: &Aabb,
    p: f64,
    deltas: &[f64],
    plan: &IntegrationPlan,
) -> Result<Vec<PoincareReport>> {
    if u.dim() != 1 || ball.dim() != 1 {
        return Err(LabError::UnsupportedEngine {
            engine: "poincare",
            reason: "the study works on intervals of one-dimensional fields".into(),
        });
    }
    if !(p >= 1.0) {
        return invalid(format!("p = {p} must be at least 1"));
    }
    if ball.is_empty() || ball.volume() == 0.0 {
        return invalid("ball must be a nonempty interval");
    }
    if deltas.iter().any(|d| !(*d > 0.0)) {
        return invalid("delta values must be positive");
    }
    let (lo, hi) = (ball.lo[0], ball.hi[0]);
    let measure = hi - lo;
    let n = 1.0;
    let lhs = oscillation_integral(u, lo, hi, p);
    deltas
        .iter()
        .map(|&delta| {
            let spec = FunctionalSpec::bn(p, delta).restricted_to(ball.clone());
            let functional = eval_functional(u, &spec, plan)?;
            let rhs_functional_term = measure.powf((n + p) / n) * functional.value;
            let rhs_delta_term = delta.powf(p) * measure * measure;
            let functional_diverged = functional.diverged;
            let empirical_constant = if functional_diverged || lhs == 0.0 {
                0.0
            } else {
                lhs / (rhs_functional_term + rhs_delta_term)
            };
            Ok(PoincareReport {
                field: u.id().to_string(),
                ball: ball.clone(),
                p,
                delta,
                lhs,
                functional,
                rhs_functional_term,
                rhs_delta_term,
                empirical_constant,
                functional_diverged,
            })
        })
        .collect()
}

/// Largest empirical constant over a set of reports.
pub fn max_constant(reports: &[PoincareReport]) -> f64 {
    reports.iter().map(|r| r.empirical_constant).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_field;

    #[test]
    fn constant_field_gives_zero() {
        let c = corpus_field("const").unwrap();
        let r = poincare_study(&c, &Aabb::interval(-1.0, 2.0), 1.0, &[0.1], &IntegrationPlan::deterministic()).unwrap();
        assert_eq!(r[0].lhs, 0.0);
        assert_eq!(r[0].empirical_constant, 0.0);
    }

    #[test]
    fn step_oscillation_integral() {
        // pairs split by a jump of height 1: 2 * |(0,1)| * |(-1,0) u (1,2)| = 4
        let s = corpus_field("step1d").unwrap();
        assert!((oscillation_integral(&s, -1.0, 2.0, 1.0) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn large_delta_leaves_only_the_delta_term() {
        let t = corpus_field("tent1d").unwrap();
        let b = Aabb::interval(-0.25, 1.25);
        let r = poincare_study(&t, &b, 1.0, &[5.0], &IntegrationPlan::deterministic()).unwrap();
        assert_eq!(r[0].rhs_functional_term, 0.0);
        assert!((r[0].rhs_delta_term - 5.0 * 1.5 * 1.5).abs() < 1e-12);
        assert!(r[0].empirical_constant > 0.0 && r[0].empirical_constant.is_finite());
    }
}
