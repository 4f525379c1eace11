//! Small- and large-`lambda` behaviour of `Phi_lambda(1_{(0,1)})` across the
//! `(p, gamma)` plane, read off the step oracle and checked against the
//! lower bounds known for each range of `gamma`.

use serde::Serialize;

use crate::constants::sphere_constant;
use crate::corpus::Magnitude;
use crate::error::{invalid, Result};
use crate::oracle::{step_phi_lambda, Regime};

/// Probe points towards each end, in the order they approach the limit.
const SMALL: [f64; 3] = [1.0 / 1048576.0, 1.0 / 1073741824.0, 1.0 / 1099511627776.0];
const LARGE: [f64; 3] = [1048576.0, 1073741824.0, 1099511627776.0];
/// Relative change between the last two probes accepted as converged.
const SETTLED: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Behaviour {
    FinitePositiveLimit,
    TendsToZero,
    DivergesPointwise,
    GrowsWithLambda,
    Undetermined,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndBehaviour {
    pub class: Behaviour,
    /// Value at the last probe (`None` when infinite).
    pub last_value: Option<f64>,
}

/// A lower bound on `lim sup` or `lim inf` of `Phi_lambda` at one end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub statement: String,
    /// `None` when the bound has a non-explicit positive constant.
    pub bound: Option<f64>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub p: f64,
    pub gamma: f64,
    pub beta: f64,
    pub regime: Regime,
    pub small_lambda: EndBehaviour,
    pub large_lambda: EndBehaviour,
    pub checks: Vec<BoundCheck>,
}

fn classify(values: &[Magnitude]) -> EndBehaviour {
    if values.iter().any(|v| v.is_infinite()) {
        return EndBehaviour {
            class: Behaviour::DivergesPointwise,
            last_value: None,
        };
    }
    let v: Vec<f64> = values.iter().filter_map(|m| m.finite()).collect();
    let (a, b, c) = (v[0], v[1], v[2]);
    let class = if c == 0.0 || (c < b && b < a && c <= 1e-3 * a) {
        Behaviour::TendsToZero
    } else if c > b && b > a && c >= 2.0 * a {
        Behaviour::GrowsWithLambda
    } else if (c - b).abs() <= SETTLED * c {
        Behaviour::FinitePositiveLimit
    } else {
        Behaviour::Undetermined
    };
    EndBehaviour {
        class,
        last_value: Some(c),
    }
}

/// Whether the observed end behaviour is compatible with `limit >= bound`.
fn meets(end: &EndBehaviour, bound: f64) -> bool {
    match end.class {
        Behaviour::DivergesPointwise | Behaviour::GrowsWithLambda => true,
        Behaviour::FinitePositiveLimit => bound.is_finite() && end.last_value.unwrap_or(0.0) >= bound * (1.0 - 1e-9),
        Behaviour::TendsToZero => bound <= 0.0,
        Behaviour::Undetermined => false,
    }
}

/// Classifies the step field for every `(p, gamma)` pair.
pub fn regime_scan(ps: &[f64], gammas: &[f64]) -> Result<Vec<ScanRow>> {
    if gammas.iter().any(|&g| g == 0.0 || !g.is_finite()) {
        return invalid("gamma grid must avoid 0");
    }
    let mut rows = Vec::new();
    for &p in ps {
        if !(p >= 1.0) {
            return invalid(format!("p = {p} must be at least 1"));
        }
        let k = sphere_constant(1, p)?.value;
        // Phi(1_{(0,1)}) is 2 for p = 1 and infinite otherwise
        let phi = if p == 1.0 { 2.0 } else { f64::INFINITY };
        for &gamma in gammas {
            let probe = |ls: &[f64; 3]| -> Result<Vec<Magnitude>> {
                ls.iter().map(|&l| Ok(step_phi_lambda(gamma, p, l)?.value)).collect()
            };
            let small = classify(&probe(&SMALL)?);
            let large = classify(&probe(&LARGE)?);
            let mut checks = Vec::new();
            if gamma < -p {
                let bound = k / gamma.abs() * phi;
                checks.push(BoundCheck {
                    statement: format!("lim sup as lambda -> 0 >= K_1,p Phi / |gamma| = {bound}"),
                    bound: Some(bound),
                    pass: meets(&small, bound),
                });
            } else if gamma <= -1.0 {
                checks.push(BoundCheck {
                    statement: "lim inf as lambda -> 0 >= C Phi with C > 0".into(),
                    bound: None,
                    pass: meets(&small, f64::MIN_POSITIVE),
                });
            }
            if gamma > -1.0 {
                let bound = k / (gamma + p) * phi;
                checks.push(BoundCheck {
                    statement: format!("lim sup as lambda -> inf >= K_1,p Phi / (gamma + p) = {bound}"),
                    bound: Some(bound),
                    pass: meets(&large, bound),
                });
            }
            rows.push(ScanRow {
                p,
                gamma,
                beta: 1.0 + gamma / p,
                regime: step_phi_lambda(gamma, p, 1.0)?.regime,
                small_lambda: small,
                large_lambda: large,
                checks,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(p: f64, g: f64) -> ScanRow {
        regime_scan(&[p], &[g]).unwrap().remove(0)
    }

    #[test]
    fn classic_cases() {
        assert_eq!(row(1.0, -0.5).small_lambda.class, Behaviour::TendsToZero);
        assert_eq!(row(1.0, -1.0).small_lambda.class, Behaviour::DivergesPointwise);
        let r = row(1.0, 2.0);
        assert_eq!(r.large_lambda.class, Behaviour::FinitePositiveLimit);
        assert!((r.large_lambda.last_value.unwrap() - 4.0 / 3.0).abs() < 1e-12);
        let r = row(1.0, -2.0);
        assert_eq!(r.small_lambda.class, Behaviour::FinitePositiveLimit);
        assert!(r.checks[0].pass);
    }

    #[test]
    fn no_check_fails_on_a_wide_grid() {
        let gammas = [-4.0, -3.0, -2.0, -1.5, -1.0, -0.75, -0.5, -0.25, 0.25, 0.5, 1.0, 2.0, 3.0];
        for r in regime_scan(&[1.0, 1.5, 2.0, 3.0], &gammas).unwrap() {
            for c in &r.checks {
                assert!(c.pass, "{r:?}");
            }
        }
    }

    #[test]
    fn rejects_zero_gamma() {
        assert!(regime_scan(&[1.0], &[0.0]).is_err());
    }
}
