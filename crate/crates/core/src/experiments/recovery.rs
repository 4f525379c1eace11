//! Dyadic recovery sequences: piecewise-constant approximations `u_k` of a
//! field whose `Phi_{lambda_k}` values vanish while `u_k -> u` in `L^p`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{quantize_dyadic, seminorm, Magnitude};
use crate::error::{invalid, Result};
use crate::field::ScalarField;
use crate::functional::{eval_functional, Estimate, FunctionalSpec, IntegrationPlan};

/// Sample points for the sampled `L^p` distance.
const LP_SAMPLES: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub k: u32,
    pub lambda: f64,
    /// Sampled `||u_k - u||_p`.
    pub lp_error: f64,
    pub phi: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryReport {
    pub field: String,
    pub p: f64,
    pub gamma: f64,
    /// `lambda_k = schedule_base^k`.
    pub schedule_base: f64,
    pub seminorm: Magnitude,
    pub rows: Vec<RecoveryRow>,
    pub lp_strictly_decreasing: bool,
    pub phi_decreasing: bool,
    pub final_phi: f64,
}

/// `||a - b||_p` over the union of both support boxes: a midpoint rule in
/// one dimension, uniform sampling otherwise.
pub fn lp_distance(a: &ScalarField, b: &ScalarField, p: f64, seed: u64) -> f64 {
    let bx = a.support_box().hull(&b.support_box());
    let n = bx.dim();
    let vol = bx.volume();
    let mut x = vec![0.0; n];
    let mut acc = 0.0;
    if n == 1 {
        let w = (bx.hi[0] - bx.lo[0]) / LP_SAMPLES as f64;
        for i in 0..LP_SAMPLES {
            x[0] = bx.lo[0] + (i as f64 + 0.5) * w;
            acc += (a.evaluate(&x) - b.evaluate(&x)).abs().powf(p);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..LP_SAMPLES {
            for (d, xd) in x.iter_mut().enumerate() {
                *xd = bx.lo[d] + (bx.hi[d] - bx.lo[d]) * rng.random::<f64>();
            }
            acc += (a.evaluate(&x) - b.evaluate(&x)).abs().powf(p);
        }
    }
    (vol * acc / LP_SAMPLES as f64).powf(1.0 / p)
}

/// Runs the recovery ladder `k in ks` with `lambda_k = schedule_base^k`.
pub fn gamma_recovery_experiment(
    u: &ScalarField,
    p: f64,
    gamma: f64,
    ks: &[u32],
    schedule_base: f64,
    plan: &IntegrationPlan,
) -> Result<RecoveryReport> {
    if !(gamma > -1.0 && gamma < 0.0) {
        return invalid(format!("gamma = {gamma} must lie in (-1, 0)"));
    }
    if !(p >= 1.0) {
        return invalid(format!("p = {p} must be at least 1"));
    }
    if !(schedule_base > 0.0 && schedule_base < 1.0) {
        return invalid("schedule base must lie in (0, 1)");
    }
    if ks.is_empty() || ks.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("k ladder must be nonempty and strictly increasing");
    }
    let mut rows = Vec::with_capacity(ks.len());
    for &k in ks {
        let uk = quantize_dyadic(u, k)?;
        let lambda = schedule_base.powi(k as i32);
        let phi = eval_functional(&uk, &FunctionalSpec::bsvy(p, gamma, lambda), &plan.with_seed(plan.seed ^ k as u64))?;
        rows.push(RecoveryRow {
            k,
            lambda,
            lp_error: lp_distance(&uk, u, p, plan.seed ^ k as u64),
            phi,
        });
    }
    let lp_strictly_decreasing = rows.windows(2).all(|w| w[1].lp_error < w[0].lp_error);
    let phi_decreasing = rows.windows(2).all(|w| w[1].phi.value <= w[0].phi.value);
    Ok(RecoveryReport {
        field: u.id().to_string(),
        p,
        gamma,
        schedule_base,
        seminorm: seminorm(u, p)?.value,
        final_phi: rows.last().map_or(0.0, |r| r.phi.value),
        rows,
        lp_strictly_decreasing,
        phi_decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_field;

    #[test]
    fn constant_field_has_zero_values() {
        let c = corpus_field("const").unwrap();
        let r = gamma_recovery_experiment(&c, 1.0, -0.5, &[2, 3], 0.5, &IntegrationPlan::deterministic()).unwrap();
        assert!(r.rows.iter().all(|row| row.phi.value == 0.0 && row.lp_error == 0.0));
    }

    #[test]
    fn gaussian_l2_error_roughly_halves() {
        let g = corpus_field("gauss1d").unwrap();
        let e: Vec<f64> = (3..7).map(|k| lp_distance(&quantize_dyadic(&g, k).unwrap(), &g, 2.0, 0)).collect();
        for w in e.windows(2) {
            let r = w[1] / w[0];
            assert!((0.4..0.6).contains(&r), "{e:?}");
        }
    }

    #[test]
    fn rejects_gamma_outside_range() {
        let t = corpus_field("tent1d").unwrap();
        assert!(gamma_recovery_experiment(&t, 1.0, -1.5, &[2], 0.5, &IntegrationPlan::deterministic()).is_err());
    }
}
