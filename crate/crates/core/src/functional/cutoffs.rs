use serde::Serialize;

use super::{Cutoff, FunctionalSpec, IntegrationPlan, Kernel};
use crate::constants::sphere_area;
use crate::error::{LabError, Result};
use crate::field::ScalarField;
use crate::functional::kernel::power_integral;

/// Default bound on discarded kernel mass.
pub const DEFAULT_TAIL_TOL: f64 = 1e-10;

/// Default inner radius relative to the support diameter when no exact
/// event-free radius is known.
const H_MIN_REL: f64 = 1e-7;

/// Radial integration range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cutoffs {
    pub h_min: f64,
    pub h_max: f64,
    /// Bound on the contribution of `h > h_max`.
    pub tail_bound: f64,
    /// No event (level sets) can occur below `h_min`.
    pub h_min_exact: bool,
    /// No contribution exists beyond `h_max`.
    pub h_max_exact: bool,
}

/// Cutoffs at the default tail tolerance.
pub fn auto_cutoffs(u: &ScalarField, spec: &FunctionalSpec) -> Result<Cutoffs> {
    auto_cutoffs_with_tol(u, spec, DEFAULT_TAIL_TOL)
}

/// `h_max` is exact for level sets with `beta > 0` (`|d| <= 2 sup|u|`) and for
/// BBM (`h_max = r`); `h_min` is exact for Lipschitz fields without jumps
/// when `beta < 1` (`|d| <= L h`). Otherwise `h_max` is pushed out until the
/// tail of the kernel mass falls below `tol`.
pub fn auto_cutoffs_with_tol(u: &ScalarField, spec: &FunctionalSpec, tol: f64) -> Result<Cutoffs> {
    spec.validate()?;
    kernel_cutoffs(u, &spec.kernel(), tol)
}

fn tail_scale(u: &ScalarField) -> f64 {
    2.0 * u.support_box().volume() * sphere_area(u.dim())
}

pub(crate) fn kernel_cutoffs(u: &ScalarField, k: &Kernel, tol: f64) -> Result<Cutoffs> {
    let diam = u.support_box().diameter().max(f64::MIN_POSITIVE);
    let mut h_min = H_MIN_REL * diam;
    let mut h_min_exact = false;
    let (h_max, h_max_exact, tail_bound) = match *k {
        Kernel::Moment { radius, .. } => (radius, true, 0.0),
        Kernel::LevelSet {
            lambda,
            beta,
            gamma,
            prefactor,
        } => {
            if beta < 1.0 && !u.has_jumps() {
                if let Some(l) = u.lipschitz_bound() {
                    if l > 0.0 {
                        h_min = (lambda / l).powf(1.0 / (1.0 - beta));
                        h_min_exact = true;
                    }
                }
            }
            if beta > 0.0 {
                ((2.0 * u.sup_norm() / lambda).powf(1.0 / beta), true, 0.0)
            } else if gamma < 0.0 {
                let c = tail_scale(u) * prefactor / -gamma;
                let h = (c / tol).powf(1.0 / -gamma).max(2.0 * diam);
                (h, false, c * h.powf(gamma))
            } else {
                return Err(LabError::NoFiniteCutoff(format!(
                    "kernel mass h^{{{gamma}-1}} is not integrable at infinity and events persist (beta = {beta})"
                )));
            }
        }
    };
    Ok(Cutoffs {
        h_min,
        h_max,
        tail_bound,
        h_min_exact,
        h_max_exact,
    })
}

/// Auto cutoffs with the plan's explicit overrides applied.
pub(crate) fn resolve(u: &ScalarField, k: &Kernel, plan: &IntegrationPlan) -> Result<Cutoffs> {
    let mut c = match kernel_cutoffs(u, k, plan.tail_tol) {
        Ok(c) => c,
        Err(e) => match plan.h_max {
            Cutoff::Explicit(_) => Cutoffs {
                h_min: H_MIN_REL * u.support_box().diameter(),
                h_max: f64::INFINITY,
                tail_bound: f64::INFINITY,
                h_min_exact: false,
                h_max_exact: false,
            },
            Cutoff::Auto => return Err(e),
        },
    };
    if let Cutoff::Explicit(v) = plan.h_min {
        c.h_min_exact = c.h_min_exact && v <= c.h_min;
        c.h_min = v;
    }
    if let Cutoff::Explicit(v) = plan.h_max {
        if !(c.h_max_exact && v >= c.h_max) {
            c.tail_bound = tail_bound(u, k, v);
            c.h_max_exact = c.tail_bound == 0.0;
        }
        c.h_max = v;
    }
    Ok(c)
}

/// Bound on the contribution of `h > h_max` using `|d| <= 2 sup|u|` and the
/// event indicator `<= 1`.
fn tail_bound(u: &ScalarField, k: &Kernel, h_max: f64) -> f64 {
    let scale = tail_scale(u);
    match *k {
        Kernel::Moment { p, eps, radius } => {
            scale * eps * (2.0 * u.sup_norm()).powf(p) * power_integral(eps - p, h_max, radius)
        }
        Kernel::LevelSet {
            lambda,
            beta,
            gamma,
            prefactor,
        } => {
            if beta > 0.0 && h_max >= (2.0 * u.sup_norm() / lambda).powf(1.0 / beta) {
                0.0
            } else {
                scale * prefactor * power_integral(gamma, h_max, f64::INFINITY)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_field;

    #[test]
    fn examples() {
        let step = corpus_field("step1d").unwrap();
        let c = auto_cutoffs(&step, &FunctionalSpec::bsvy(1.0, 1.0, 4.0)).unwrap();
        assert!((c.h_max - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(c.tail_bound, 0.0);
        assert!(c.h_max_exact);

        // tent with slope 2: L = 2
        let tent = corpus_field("tent1d").unwrap();
        let c = auto_cutoffs(&tent, &FunctionalSpec::bsvy(1.0, -0.5, 0.1)).unwrap();
        assert!((c.h_min - 0.0025).abs() < 1e-15);
        assert!(c.h_min_exact);

        let c = auto_cutoffs(&step, &FunctionalSpec::bbm(2.0, 0.1, 0.5)).unwrap();
        assert_eq!(c.h_max, 0.5);
    }

    #[test]
    fn negative_beta_tail_meets_tolerance() {
        let step = corpus_field("step1d").unwrap();
        let c = auto_cutoffs_with_tol(&step, &FunctionalSpec::bn(1.0, 0.2), 1e-8).unwrap();
        assert!(c.tail_bound <= 1e-8 * (1.0 + 1e-12));
        assert!(!c.h_max_exact);
    }

    #[test]
    fn events_beyond_every_radius_have_no_cutoff() {
        let step = corpus_field("step1d").unwrap();
        let k = Kernel::LevelSet {
            lambda: 0.5,
            beta: -1.0,
            gamma: 0.5,
            prefactor: 1.0,
        };
        assert!(matches!(kernel_cutoffs(&step, &k, 1e-10), Err(LabError::NoFiniteCutoff(_))));
    }
}
