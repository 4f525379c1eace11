//! Independent reference values: closed forms for step functions and a
//! brute-force tensor-grid integrator.
//!
//! For `u = c 1_{(0, l)}` in one dimension only separating pairs (one point
//! inside, one outside) contribute, all with `|u(x) - u(y)| = |c|`. For a
//! separation `s` the inside point ranges over a set of length `min(s, l)`
//! on each side, and both orderings count, so
//! `nu_gamma(E) = 4 int_{event} min(s, l) s^{gamma - 1} ds`.
//! The event `|c| > lambda s^beta` is `s < t` (`beta > 0`), `s > t`
//! (`beta < 0`) or everything/nothing (`beta = 0`), `t = (|c|/lambda)^{1/beta}`.

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::Magnitude;
use crate::error::{invalid, LabError, Result};
use crate::field::ScalarField;
use crate::functional::{power_integral, Estimate, FunctionalSpec, IntegrationPlan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    #[serde(rename = "beta>0")]
    BetaPositive,
    #[serde(rename = "beta=0")]
    BetaZero,
    #[serde(rename = "beta<0")]
    BetaNegative,
}

/// The two one-variable integrals behind a step value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepPieces {
    /// Event threshold `t` (`NaN` when `beta = 0`).
    pub threshold: f64,
    /// `int_{event, s < l} s^gamma ds`.
    pub near: f64,
    /// `l int_{event, s > l} s^{gamma - 1} ds`.
    pub far: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepOracleResult {
    pub value: Magnitude,
    pub regime: Regime,
    pub pieces: StepPieces,
}

/// `Phi_lambda(1_{(0,1)})` in one dimension.
pub fn step_phi_lambda(gamma: f64, p: f64, lambda: f64) -> Result<StepOracleResult> {
    step_phi_lambda_general(1.0, 1.0, gamma, p, lambda)
}

/// `Phi_lambda(c 1_{(0, l)})` in one dimension.
pub fn step_phi_lambda_general(c: f64, l: f64, gamma: f64, p: f64, lambda: f64) -> Result<StepOracleResult> {
    if gamma == 0.0 || !gamma.is_finite() {
        return invalid("gamma must be a finite nonzero real");
    }
    if !(p >= 1.0) || !(lambda > 0.0) || !(l > 0.0) {
        return invalid("need p >= 1, lambda > 0 and a positive step length");
    }
    let beta = 1.0 + gamma / p;
    let a = c.abs();
    let (regime, t, lo, hi) = if a == 0.0 {
        (regime_of(beta), f64::NAN, 0.0, 0.0)
    } else if beta > 0.0 {
        let t = (a / lambda).powf(1.0 / beta);
        (Regime::BetaPositive, t, 0.0, t)
    } else if beta < 0.0 {
        let t = (a / lambda).powf(1.0 / beta);
        (Regime::BetaNegative, t, t, f64::INFINITY)
    } else if a > lambda {
        (Regime::BetaZero, f64::NAN, 0.0, f64::INFINITY)
    } else {
        (Regime::BetaZero, f64::NAN, 0.0, 0.0)
    };
    let near = power_integral(gamma + 1.0, lo, hi.min(l));
    let far = l * power_integral(gamma, lo.max(l), hi);
    let total = 4.0 * lambda.powf(p) * (near + far);
    Ok(StepOracleResult {
        value: if total.is_finite() {
            Magnitude::Finite(total)
        } else {
            Magnitude::Infinite
        },
        regime,
        pieces: StepPieces {
            threshold: t,
            near,
            far,
        },
    })
}

fn regime_of(beta: f64) -> Regime {
    if beta > 0.0 {
        Regime::BetaPositive
    } else if beta < 0.0 {
        Regime::BetaNegative
    } else {
        Regime::BetaZero
    }
}

/// BN(delta) of the unit step: BSVY with `gamma = -p`.
pub fn step_bn(p: f64, delta: f64) -> Result<StepOracleResult> {
    step_phi_lambda(-p, p, delta)
}

/// BBM value of `1_{(0,1)}` with kernel `eps h^{eps - 1}` restricted to `h < r`:
/// `4 eps int_0^r min(s, 1) s^{eps - p - 1} ds`.
pub fn step_bbm(p: f64, eps: f64, r: f64) -> Magnitude {
    let v = 4.0 * eps * (power_integral(eps - p + 1.0, 0.0, r.min(1.0)) + power_integral(eps - p, 1.0, r));
    if v.is_finite() {
        Magnitude::Finite(v)
    } else {
        Magnitude::Infinite
    }
}

/// Default ceiling on the number of ordered grid pairs.
pub const DEFAULT_PAIR_BUDGET: u128 = 2_000_000_000;
/// Environment variable overriding [`DEFAULT_PAIR_BUDGET`].
pub const PAIR_BUDGET_ENV: &str = "NLLAB_PAIR_BUDGET";
/// Largest per-axis grid in two dimensions.
pub const MAX_GRID_2D: usize = 80;

fn pair_budget() -> u128 {
    std::env::var(PAIR_BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_PAIR_BUDGET)
}

/// Midpoint rule on a uniform `grid^N` tensor grid over the support box
/// padded by `box_pad`, summing the defining kernel over all ordered pairs
/// of distinct nodes. Pairs with both nodes outside the support contribute
/// nothing and are skipped.
pub fn brute_force_functional(u: &ScalarField, spec: &FunctionalSpec, grid: usize, box_pad: f64) -> Result<Estimate> {
    spec.validate()?;
    let n = u.dim();
    if n > 2 {
        return Err(LabError::UnsupportedEngine {
            engine: "brute-force",
            reason: format!("dimension {n} exceeds 2"),
        });
    }
    if grid == 0 || !(box_pad >= 0.0) {
        return invalid("grid must be positive and box_pad nonnegative");
    }
    if n == 2 && grid > MAX_GRID_2D {
        return Err(LabError::BudgetExceeded {
            what: "2-D brute-force grid",
            needed: grid as u128,
            budget: MAX_GRID_2D as u128,
        });
    }
    let pairs = (grid as u128).pow(2 * n as u32);
    let budget = pair_budget();
    if pairs > budget {
        return Err(LabError::BudgetExceeded {
            what: "brute-force pairs",
            needed: pairs,
            budget,
        });
    }
    let plan_echo = IntegrationPlan::default();
    if u.is_constant() {
        return Ok(Estimate {
            value: 0.0,
            error: 0.0,
            diverged: false,
            tail_bound: 0.0,
            n_evaluations: 0,
            h_min: 0.0,
            h_max: 0.0,
            plan_echo,
        });
    }
    let support = u.support_box();
    let bx = support.padded(box_pad);
    let bx = match &spec.domain {
        Some(d) => bx.intersect(d),
        None => bx,
    };
    let cell: Vec<f64> = (0..n).map(|d| (bx.hi[d] - bx.lo[d]) / grid as f64).collect();
    let total = grid.pow(n as u32);
    let mut pts = Vec::with_capacity(total * n);
    for flat in 0..total {
        let mut rem = flat;
        let mut coords = [0.0; 2];
        for d in (0..n).rev() {
            coords[d] = bx.lo[d] + (rem % grid) as f64 * cell[d] + 0.5 * cell[d];
            rem /= grid;
        }
        pts.extend_from_slice(&coords[..n]);
    }
    let vals: Vec<f64> = pts.chunks(n).map(|x| u.evaluate(x)).collect();
    let inside: Vec<bool> = pts.chunks(n).map(|x| support.contains(x)).collect();
    let inside_idx: Vec<usize> = (0..total).filter(|&j| inside[j]).collect();
    let all_idx: Vec<usize> = (0..total).collect();
    let k = spec.kernel();
    let e = k.radial_exponent();
    let nf = n as f64;
    let rows: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| {
            let xi = &pts[i * n..(i + 1) * n];
            let partners = if inside[i] { &all_idx } else { &inside_idx };
            let mut s = 0.0;
            for &j in partners {
                if j == i {
                    continue;
                }
                let xj = &pts[j * n..(j + 1) * n];
                let h = xi.iter().zip(xj).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                let r = k.reduced((vals[i] - vals[j]).abs(), h);
                if r != 0.0 {
                    s += r * h.powf(e - nf);
                }
            }
            s
        })
        .collect();
    let vol: f64 = cell.iter().product();
    let value = rows.iter().sum::<f64>() * vol * vol;
    Ok(Estimate {
        value,
        error: 0.0,
        diverged: false,
        tail_bound: 0.0,
        n_evaluations: pairs as u64,
        h_min: 0.0,
        h_max: bx.diameter(),
        plan_echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_field;

    fn val(r: StepOracleResult) -> f64 {
        r.value.finite().unwrap()
    }

    #[test]
    fn regime_examples() {
        assert!((val(step_phi_lambda(1.0, 1.0, 10.0).unwrap()) - 2.0).abs() < 1e-14);
        assert!(step_phi_lambda(-1.0, 1.0, 0.5).unwrap().value.is_infinite());
        // gamma = -2, p = 1, lambda < 1: 4 lambda (1/lambda - 1 + 1/2) = 4 - 2 lambda
        let v = val(step_phi_lambda(-2.0, 1.0, 0.25).unwrap());
        assert!((v - (4.0 - 2.0 * 0.25)).abs() < 1e-13, "{v}");
        // gamma = -1/2, p = 1: 16 lambda - 8 lambda^2 for lambda < 1, then 8
        let v = val(step_phi_lambda(-0.5, 1.0, 0.5).unwrap());
        assert!((v - 6.0).abs() < 1e-13, "{v}");
        let v = val(step_phi_lambda(-0.5, 1.0, 2.0).unwrap());
        assert!((v - 8.0).abs() < 1e-13, "{v}");
    }

    #[test]
    fn sharp_constant_for_positive_gamma() {
        for gamma in [0.5, 1.0, 2.0, 3.0] {
            for lambda in [1.0, 2.0, 10.0, 1e3] {
                let v = val(step_phi_lambda(gamma, 1.0, lambda).unwrap());
                assert!((v - 4.0 / (gamma + 1.0)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bn_step_is_infinite_below_jump_height() {
        assert!(step_bn(1.0, 0.5).unwrap().value.is_infinite());
        assert_eq!(step_bn(2.0, 1.5).unwrap().value, Magnitude::Finite(0.0));
    }

    #[test]
    fn bbm_step_p1() {
        for (eps, r) in [(0.1, 1.0), (0.5, 0.3)] {
            let v = step_bbm(1.0, eps, r).finite().unwrap();
            let expect = 4.0 * f64::powf(r, eps);
            assert!((v - expect).abs() < 1e-13);
        }
        assert!(step_bbm(2.0, 0.1, 1.0).is_infinite());
    }

    #[test]
    fn brute_force_constant_and_budget() {
        let c = corpus_field("const").unwrap();
        let e = brute_force_functional(&c, &FunctionalSpec::bsvy(1.0, -0.5, 0.1), 100, 1.0).unwrap();
        assert_eq!(e.value, 0.0);
        let q = corpus_field("cube2d").unwrap();
        assert!(brute_force_functional(&q, &FunctionalSpec::bn(1.0, 0.5), 81, 1.0).is_err());
    }
}
