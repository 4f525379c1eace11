//! Parameter ladders and limit extrapolation.
//!
//! Values along a ladder are modelled as `v(x) = A + B x^theta` where
//! `x -> 0` is the sweep parameter itself for decreasing ladders and its
//! reciprocal for increasing ones. `theta` comes from a straight-line fit of
//! `ln |v_{i+1} - v_i|` against `ln x_i`; `A` and `B` then follow from linear
//! least squares at fixed `theta`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constants::sphere_constant;
use crate::corpus::seminorm;
use crate::error::{invalid, LabError, Result};
use crate::field::ScalarField;
use crate::functional::{eval_functional, Estimate, Family, FunctionalSpec, IntegrationPlan};

/// Points used by the extrapolation fit.
pub const FIT_POINTS: usize = 4;
/// Default ratio between consecutive ladder entries.
pub const LADDER_RATIO: f64 = 0.5;
/// Two-sided 95% Student quantile for one degree of freedom.
const T_QUANTILE_1DOF: f64 = 12.706;

/// `start * ratio^j` for `j = 0..len`.
pub fn geometric_ladder(start: f64, ratio: f64, len: usize) -> Vec<f64> {
    (0..len).map(|j| start * ratio.powi(j as i32)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitFit {
    pub limit: f64,
    pub limit_uncertainty: f64,
    /// `None` when the fitted points are all equal.
    pub rate: Option<f64>,
    pub rate_uncertainty: Option<f64>,
    /// `B` of the model.
    pub amplitude: f64,
    /// False when the rate's confidence interval reaches zero or the
    /// differences change sign; the limit is then the last value.
    pub stable: bool,
}

/// Fits `v = A + B x^theta` to the given points (`x > 0`, ordered towards 0).
pub fn fit_limit(x: &[f64], v: &[f64], errors: &[f64]) -> Result<LimitFit> {
    if x.len() != v.len() || x.len() != errors.len() || x.len() < 3 {
        return invalid("fit needs at least three (x, value, error) triples");
    }
    if x.iter().any(|&s| !(s > 0.0) || !s.is_finite()) || v.iter().any(|t| !t.is_finite()) {
        return invalid("fit points must be finite with positive abscissae");
    }
    let n = x.len();
    let last = v[n - 1];
    let err_floor = errors.iter().fold(0.0f64, |m, &e| m.max(e));
    let d: Vec<f64> = v.windows(2).map(|w| w[1] - w[0]).collect();
    let scale = v.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    if d.iter().all(|t| t.abs() <= 1e-14 * scale) {
        return Ok(LimitFit {
            limit: last,
            limit_uncertainty: err_floor,
            rate: None,
            rate_uncertainty: None,
            amplitude: 0.0,
            stable: true,
        });
    }
    let downgraded = |rate: Option<f64>, se: Option<f64>| LimitFit {
        limit: last,
        limit_uncertainty: (v[n - 1] - v[n - 2]).abs() + errors[n - 1],
        rate,
        rate_uncertainty: se,
        amplitude: f64::NAN,
        stable: false,
    };
    let same_sign = d.iter().all(|t| *t > 0.0) || d.iter().all(|t| *t < 0.0);
    if !same_sign {
        return Ok(downgraded(None, None));
    }
    let lx: Vec<f64> = x[..n - 1].iter().map(|s| s.ln()).collect();
    let ld: Vec<f64> = d.iter().map(|t| t.abs().ln()).collect();
    let (theta, se) = slope_with_error(&lx, &ld);
    let t = if lx.len() == 3 { T_QUANTILE_1DOF } else { 2.0 };
    if !(theta > 0.0) || theta - t * se <= 0.0 {
        return Ok(downgraded(Some(theta), Some(se)));
    }
    let (a, b, a_se) = linear_fit_at(x, v, theta);
    let (a_lo, _, _) = linear_fit_at(x, v, theta - se);
    let (a_hi, _, _) = linear_fit_at(x, v, theta + se);
    let theta_part = 0.5 * (a_hi - a_lo).abs();
    Ok(LimitFit {
        limit: a,
        limit_uncertainty: (a_se.powi(2) + theta_part.powi(2) + err_floor.powi(2)).sqrt(),
        rate: Some(theta),
        rate_uncertainty: Some(se),
        amplitude: b,
        stable: true,
    })
}

/// Least-squares slope and its standard error.
fn slope_with_error(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    if x.len() < 3 {
        return (slope, 0.0);
    }
    let rss: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - my - slope * (a - mx)).powi(2))
        .sum();
    (slope, (rss / (n - 2.0) / sxx).sqrt())
}

/// `A`, `B` and the standard error of `A` for `v = A + B x^theta`.
fn linear_fit_at(x: &[f64], v: &[f64], theta: f64) -> (f64, f64, f64) {
    let z: Vec<f64> = x.iter().map(|s| s.powf(theta)).collect();
    let n = z.len() as f64;
    let mz = z.iter().sum::<f64>() / n;
    let mv = v.iter().sum::<f64>() / n;
    let szz: f64 = z.iter().map(|a| (a - mz).powi(2)).sum();
    let szv: f64 = z.iter().zip(v).map(|(a, b)| (a - mz) * (b - mv)).sum();
    let b = szv / szz;
    let a = mv - b * mz;
    let dof = n - 2.0;
    let se = if dof > 0.0 {
        let rss: f64 = z.iter().zip(v).map(|(s, t)| (t - a - b * s).powi(2)).sum();
        (rss / dof * (1.0 / n + mz * mz / szz)).sqrt()
    } else {
        0.0
    };
    (a, b, se)
}

/// Outcome of a parameter sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub field: String,
    pub family: Family,
    pub p: f64,
    pub gamma: Option<f64>,
    pub radial_cut: Option<f64>,
    pub ladder: Vec<f64>,
    pub seeds: Vec<u64>,
    pub estimates: Vec<Estimate>,
    pub diverged: bool,
    /// `None` when any estimate diverged.
    pub extrapolated_limit: Option<f64>,
    pub limit_uncertainty: Option<f64>,
    /// Rate in the ladder variable that tends to zero.
    pub fitted_rate: Option<f64>,
    pub rate_uncertainty: Option<f64>,
    pub fit_stable: bool,
    /// The limit lies outside the last three estimates widened by their errors.
    pub outside_hull: bool,
    pub reference_target: Option<f64>,
    pub relative_gap: Option<f64>,
}

fn check_ladder(ladder: &[f64]) -> Result<bool> {
    if ladder.len() < 5 {
        return invalid(format!("ladder has {} points, at least 5 are required", ladder.len()));
    }
    if ladder.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return invalid("ladder entries must be positive and finite");
    }
    let down = ladder.windows(2).all(|w| w[1] < w[0]);
    let up = ladder.windows(2).all(|w| w[1] > w[0]);
    if !(down || up) {
        return invalid("ladder must be strictly monotone");
    }
    Ok(down)
}

/// Evaluates `spec` at every ladder value of its sweep parameter and
/// extrapolates the limit. Point `i` runs with seed `plan.seed ^ i`.
pub fn run_sweep(
    u: &ScalarField,
    spec: &FunctionalSpec,
    ladder: &[f64],
    plan: &IntegrationPlan,
    target: Option<f64>,
) -> Result<SweepResult> {
    let decreasing = check_ladder(ladder)?;
    spec.validate()?;
    plan.validate()?;
    let seeds: Vec<u64> = (0..ladder.len() as u64).map(|i| plan.seed ^ i).collect();
    let estimates = ladder
        .par_iter()
        .zip(&seeds)
        .map(|(&s, &seed)| eval_functional(u, &spec.with_param(s), &plan.with_seed(seed)))
        .collect::<Result<Vec<_>>>()?;

    let diverged = estimates.iter().any(|e| e.diverged);
    let mut out = SweepResult {
        field: u.id().to_string(),
        family: spec.family,
        p: spec.p,
        gamma: spec.gamma,
        radial_cut: spec.radial_cut,
        ladder: ladder.to_vec(),
        seeds,
        estimates,
        diverged,
        extrapolated_limit: None,
        limit_uncertainty: None,
        fitted_rate: None,
        rate_uncertainty: None,
        fit_stable: false,
        outside_hull: false,
        reference_target: target,
        relative_gap: None,
    };
    if diverged {
        return Ok(out);
    }
    let k = FIT_POINTS.min(ladder.len());
    let tail = ladder.len() - k;
    let x: Vec<f64> = ladder[tail..].iter().map(|&s| if decreasing { s } else { 1.0 / s }).collect();
    let v: Vec<f64> = out.estimates[tail..].iter().map(|e| e.value).collect();
    let err: Vec<f64> = out.estimates[tail..].iter().map(|e| e.error).collect();
    let fit = fit_limit(&x, &v, &err)?;
    let last3 = &out.estimates[ladder.len() - 3..];
    let lo = last3.iter().map(|e| e.value - e.error).fold(f64::INFINITY, f64::min);
    let hi = last3.iter().map(|e| e.value + e.error).fold(f64::NEG_INFINITY, f64::max);
    out.outside_hull = fit.limit < lo || fit.limit > hi;
    out.extrapolated_limit = Some(fit.limit);
    out.limit_uncertainty = Some(fit.limit_uncertainty);
    out.fitted_rate = fit.rate;
    out.rate_uncertainty = fit.rate_uncertainty;
    out.fit_stable = fit.stable;
    out.relative_gap = target.map(|t| relative_gap(fit.limit, t));
    Ok(out)
}

/// `|a - t| / |t|`, or `|a|` when the target is zero.
pub fn relative_gap(a: f64, t: f64) -> f64 {
    if t == 0.0 {
        a.abs()
    } else {
        (a - t).abs() / t.abs()
    }
}

/// The classical limit of `spec`'s family on `u`: `K Phi(u)` for BBM,
/// `K Phi(u) / p` for BN and `K Phi(u) / |gamma|` for BSVY.
///
/// `None` when `Phi(u)` is infinite or the family has no limit identity for
/// the given `p` and `gamma` (BSVY with `p = 1` and `gamma` in `[-1, 0)`).
pub fn reference_target(u: &ScalarField, spec: &FunctionalSpec) -> Result<Option<f64>> {
    let phi = match seminorm(u, spec.p)?.value.finite() {
        Some(v) => v,
        None => return Ok(None),
    };
    let k = sphere_constant(u.dim(), spec.p)?.value;
    Ok(match spec.family {
        Family::Bbm => Some(k * phi),
        Family::Bn => Some(k * phi / spec.p),
        Family::Bsvy => {
            let g = spec.gamma.ok_or_else(|| LabError::InvalidParameter("BSVY needs gamma".into()))?;
            if spec.p == 1.0 && (-1.0..0.0).contains(&g) {
                None
            } else {
                Some(k * phi / g.abs())
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_linear_model_is_recovered() {
        let x = geometric_ladder(0.4, 0.5, 4);
        let v: Vec<f64> = x.iter().map(|s| 1.7 - 0.3 * s).collect();
        let f = fit_limit(&x, &v, &[0.0; 4]).unwrap();
        assert!((f.limit - 1.7).abs() < 1e-9, "{f:?}");
        assert!((f.rate.unwrap() - 1.0).abs() < 1e-9);
        assert!(f.stable);
    }

    #[test]
    fn power_model_with_other_rate() {
        let x = geometric_ladder(1.0, 0.5, 5);
        let v: Vec<f64> = x.iter().map(|s| -2.0 + 5.0 * s.powf(1.5)).collect();
        let f = fit_limit(&x, &v, &[0.0; 5]).unwrap();
        assert!((f.limit + 2.0).abs() < 1e-9);
        assert!((f.rate.unwrap() - 1.5).abs() < 1e-9);
    }

    #[test]
    fn constant_values_need_no_rate() {
        let f = fit_limit(&[1.0, 0.5, 0.25], &[2.0; 3], &[0.0; 3]).unwrap();
        assert_eq!(f.limit, 2.0);
        assert!(f.rate.is_none() && f.stable);
    }

    #[test]
    fn noise_downgrades_to_last_value() {
        let f = fit_limit(&[1.0, 0.5, 0.25, 0.125], &[1.0, 1.1, 0.95, 1.05], &[0.1; 4]).unwrap();
        assert!(!f.stable);
        assert_eq!(f.limit, 1.05);
        assert!(f.limit_uncertainty >= 0.1);
    }

    #[test]
    fn ladders_are_validated() {
        assert!(check_ladder(&[1.0, 0.5, 0.25, 0.125]).is_err());
        assert!(check_ladder(&[1.0, 0.5, 0.5, 0.25, 0.1]).is_err());
        assert!(!check_ladder(&[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap());
        assert!(check_ladder(&geometric_ladder(1.0, 0.5, 6)).unwrap());
    }
}
