//! The sphere constant `K_{N,p} = int_{S^{N-1}} |e . sigma|^p dsigma` and
//! numerical checks of radial mollifier families.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::quadrature::{tanh_sinh, GaussLegendre};

const TANH_SINH_LEVEL: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantMethod {
    ClosedForm,
    #[serde(rename = "reduced-1d-quadrature")]
    Reduced1dQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SphereConstant {
    pub dim: usize,
    pub p: f64,
    pub value: f64,
    pub method: ConstantMethod,
}

/// Surface measure of the unit sphere `S^{n-1}` in `R^n` (`n >= 1`).
pub fn sphere_area(n: usize) -> f64 {
    assert!(n >= 1);
    2.0 * PI.powf(n as f64 / 2.0) / half_gamma(n)
}

/// `Gamma(m / 2)` for a positive integer `m`.
fn half_gamma(m: usize) -> f64 {
    let (mut g, mut x) = if m.is_multiple_of(2) { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    let target = m as f64 / 2.0;
    while x < target {
        g *= x;
        x += 1.0;
    }
    g
}

/// `K_{N,p}`. `N = 1` uses counting measure on `S^0`.
pub fn sphere_constant(dim: usize, p: f64) -> Result<SphereConstant> {
    if dim == 0 {
        return invalid("dimension must be at least 1");
    }
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("exponent p = {p} must be a finite real >= 1"));
    }
    if dim == 1 {
        return Ok(SphereConstant {
            dim,
            p,
            value: 2.0,
            method: ConstantMethod::ClosedForm,
        });
    }
    let value = reduced_integral(dim, p, TANH_SINH_LEVEL);
    Ok(SphereConstant {
        dim,
        p,
        value,
        method: ConstantMethod::Reduced1dQuadrature,
    })
}

/// Polar reduction about `e`: `2 |S^{N-2}| int_0^{pi/2} cos^p t sin^{N-2} t dt`,
/// with `|S^0| = 2` giving `4 int_0^{pi/2} cos^p` for `N = 2`.
pub(crate) fn reduced_integral(dim: usize, p: f64, level: u32) -> f64 {
    let k = (dim - 2) as i32;
    let i = tanh_sinh(0.0, FRAC_PI_2, level, |_, da, db| {
        // cos t = sin(pi/2 - t), evaluated from the endpoint distance
        db.sin().powf(p) * da.sin().powi(k)
    });
    let lower = if dim == 2 { 2.0 } else { sphere_area(dim - 1) };
    2.0 * lower * i
}

/// A radial kernel `rho(r)` on `(0, inf)` in dimension `N`.
pub trait RadialProfile {
    fn dim(&self) -> usize;
    fn density(&self, r: f64) -> f64;
    /// `rho(r) r^N`, the integrand of the mass in the variable `ln r`.
    fn log_density(&self, r: f64) -> f64 {
        let d = self.density(r);
        if d == 0.0 {
            0.0
        } else {
            d * r.powi(self.dim() as i32)
        }
    }
    /// Radii where `rho` is discontinuous or its support ends.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// A one-parameter kernel family `rho_t`.
pub trait MollifierFamily {
    fn name(&self) -> &str;
    fn member(&self, t: f64) -> Box<dyn RadialProfile>;
}

/// `rho_eps(r) = eps r^{eps - N} 1_{r < radius}`, the BBM kernel family.
#[derive(Debug, Clone, Copy)]
pub struct PowerKernel {
    pub dim: usize,
    pub radius: f64,
}

/// `rho_t(r) = (N / t^N) 1_{r < t}`.
#[derive(Debug, Clone, Copy)]
pub struct BoxKernel {
    pub dim: usize,
}

/// `rho = 0`.
#[derive(Debug, Clone, Copy)]
pub struct ZeroKernel {
    pub dim: usize,
}

/// Family member given through `rho(r) r^N`, which stays representable at
/// radii where `rho` alone overflows.
struct Member<F: Fn(f64) -> f64> {
    dim: usize,
    weighted: F,
    breaks: Vec<f64>,
}

impl<F: Fn(f64) -> f64> RadialProfile for Member<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn density(&self, r: f64) -> f64 {
        (self.weighted)(r) / r.powi(self.dim as i32)
    }
    fn log_density(&self, r: f64) -> f64 {
        (self.weighted)(r)
    }
    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

impl MollifierFamily for PowerKernel {
    fn name(&self) -> &str {
        "power"
    }
    fn member(&self, eps: f64) -> Box<dyn RadialProfile> {
        let radius = self.radius;
        Box::new(Member {
            dim: self.dim,
            weighted: move |r: f64| if r < radius { eps * r.powf(eps) } else { 0.0 },
            breaks: vec![radius],
        })
    }
}

impl MollifierFamily for BoxKernel {
    fn name(&self) -> &str {
        "box"
    }
    fn member(&self, t: f64) -> Box<dyn RadialProfile> {
        let n = self.dim as f64;
        Box::new(Member {
            dim: self.dim,
            weighted: move |r: f64| if r < t { n * (r / t).powf(n) } else { 0.0 },
            breaks: vec![t],
        })
    }
}

impl MollifierFamily for ZeroKernel {
    fn name(&self) -> &str {
        "zero"
    }
    fn member(&self, _t: f64) -> Box<dyn RadialProfile> {
        Box::new(Member {
            dim: self.dim,
            weighted: |_| 0.0,
            breaks: Vec::new(),
        })
    }
}

pub const TAIL_RADII: [f64; 3] = [0.1, 0.5, 1.0];

#[derive(Debug, Clone, Serialize)]
pub struct MollifierRow {
    pub t: f64,
    pub total_mass: f64,
    /// `(tau, int_tau^inf rho r^{N-1} dr)` for each of [`TAIL_RADII`].
    pub tail_mass: Vec<(f64, f64)>,
    pub diverged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MollifierReport {
    pub family: String,
    pub rows: Vec<MollifierRow>,
    /// Total mass tends to 1 and every tail mass tends to 0 along the
    /// parameter list, read in the given order.
    pub is_mollifier_trend: bool,
}

const R_FLOOR: f64 = 1e-300;
const R_CEIL: f64 = 1e300;

/// `int_lo^inf rho(r) r^{N-1} dr` in the variable `v = ln r`, with power-law
/// extrapolation of the pieces below `1e-300` and above `1e300`. Returns
/// `None` when either end is not integrable.
fn radial_mass(k: &dyn RadialProfile, lo: f64) -> Option<f64> {
    let g = |r: f64| k.log_density(r);
    let rule = GaussLegendre::new(10);
    let mut cuts = vec![lo.max(R_FLOOR).ln(), R_CEIL.ln()];
    cuts.extend(
        k.breakpoints()
            .into_iter()
            .filter(|&b| b > lo && b < R_CEIL)
            .map(f64::ln),
    );
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let pieces = ((w[1] - w[0]) / 0.5).ceil().max(1.0) as usize;
        let step = (w[1] - w[0]) / pieces as f64;
        for j in 0..pieces {
            let a = w[0] + step * j as f64;
            total += rule.integrate(a, a + step, |v| g(v.exp()));
        }
    }
    let exponent = |r: f64| {
        let (a, b) = (g(r), g(2.0 * r));
        if a == 0.0 && b == 0.0 {
            None
        } else {
            Some((b / a).log2())
        }
    };
    if lo < R_FLOOR {
        if let Some(a) = exponent(R_FLOOR) {
            if !(a > 0.0) {
                return None;
            }
            total += g(R_FLOOR) / a;
        }
    }
    if let Some(a) = exponent(R_CEIL / 2.0) {
        if !(a < 0.0) {
            return None;
        }
        total += g(R_CEIL) / -a;
    }
    total.is_finite().then_some(total)
}

/// Masses of each family member and whether the sequence behaves like a
/// mollifier (total mass to 1, mass outside every fixed ball to 0).
pub fn mollifier_check(family: &dyn MollifierFamily, params: &[f64]) -> MollifierReport {
    let rows: Vec<MollifierRow> = params
        .iter()
        .map(|&t| {
            let k = family.member(t);
            let total = radial_mass(k.as_ref(), 0.0);
            let tails: Vec<(f64, Option<f64>)> = TAIL_RADII
                .iter()
                .map(|&tau| (tau, radial_mass(k.as_ref(), tau)))
                .collect();
            let diverged = total.is_none() || tails.iter().any(|(_, m)| m.is_none());
            MollifierRow {
                t,
                total_mass: total.unwrap_or(f64::INFINITY),
                tail_mass: tails
                    .into_iter()
                    .map(|(tau, m)| (tau, m.unwrap_or(f64::INFINITY)))
                    .collect(),
                diverged,
            }
        })
        .collect();
    let is_mollifier_trend = trend_ok(&rows);
    MollifierReport {
        family: family.name().to_string(),
        rows,
        is_mollifier_trend,
    }
}

fn trend_ok(rows: &[MollifierRow]) -> bool {
    let (Some(first), Some(last)) = (rows.first(), rows.last()) else {
        return false;
    };
    if rows.iter().any(|r| r.diverged) {
        return false;
    }
    let gap = |r: &MollifierRow| (r.total_mass - 1.0).abs();
    if gap(last) > 0.05 || gap(last) > gap(first) + 1e-12 {
        return false;
    }
    (0..TAIL_RADII.len()).all(|i| {
        let seq: Vec<f64> = rows.iter().map(|r| r.tail_mass[i].1).collect();
        let monotone = seq.windows(2).all(|w| w[1] <= w[0] + 1e-12);
        let shrinking = seq.len() == 1 && seq[0] < 1e-12 || seq[seq.len() - 1] < seq[0] || seq[seq.len() - 1] < 1e-12;
        monotone && shrinking
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(sphere_constant(1, 3.7).unwrap().value, 2.0);
        let k21 = sphere_constant(2, 1.0).unwrap().value;
        assert!((k21 - 4.0).abs() < 1e-10, "{k21}");
        let k22 = sphere_constant(2, 2.0).unwrap().value;
        assert!((k22 - PI).abs() < 1e-10);
        for p in [1.0, 2.0, 3.0] {
            let k = sphere_constant(3, p).unwrap().value;
            assert!((k - 4.0 * PI / (p + 1.0)).abs() < 1e-10);
        }
    }

    #[test]
    fn circle_p1_matches_full_period_rule() {
        // int_0^{2 pi} |cos t| dt, split at the kinks
        let rule = GaussLegendre::new(64);
        let cuts = [0.0, FRAC_PI_2, 1.5 * PI, 2.0 * PI];
        let v: f64 = cuts
            .windows(2)
            .map(|w| rule.integrate(w[0], w[1], |t| t.cos().abs()))
            .sum();
        assert!((v - 4.0).abs() < 1e-12);
        assert!((sphere_constant(2, 1.0).unwrap().value - v).abs() < 1e-12);
    }

    #[test]
    fn doubling_nodes_changes_circle_constant_little() {
        for p in [1.0, 1.5, 2.5, 3.0, 7.3] {
            let a = reduced_integral(2, p, TANH_SINH_LEVEL);
            let b = reduced_integral(2, p, TANH_SINH_LEVEL + 1);
            assert!((a - b).abs() < 1e-12, "p={p}: {a} vs {b}");
        }
    }

    #[test]
    fn monotone_in_p_and_bounded_by_area() {
        for n in 2..=5 {
            let vals: Vec<f64> = [1.0, 1.5, 2.0, 3.0]
                .iter()
                .map(|&p| sphere_constant(n, p).unwrap().value)
                .collect();
            assert!(vals.windows(2).all(|w| w[1] <= w[0]));
            assert!(vals[0] <= sphere_area(n));
        }
    }

    #[test]
    fn sphere_areas() {
        assert!((sphere_area(1) - 2.0).abs() < 1e-15);
        assert!((sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn bbm_kernel_masses() {
        let fam = PowerKernel { dim: 1, radius: 1.0 };
        let rep = mollifier_check(&fam, &[0.5, 0.1, 0.01]);
        for row in &rep.rows {
            assert!((row.total_mass - 1.0).abs() < 1e-10, "{row:?}");
        }
        let tail = rep.rows[2].tail_mass[1].1;
        assert!((tail - (1.0 - 0.5f64.powf(0.01))).abs() < 1e-10, "{tail}");
        assert!(rep.is_mollifier_trend);
    }

    #[test]
    fn box_and_zero_families() {
        let rep = mollifier_check(&BoxKernel { dim: 2 }, &[2.0, 0.4, 0.05]);
        assert!(rep.is_mollifier_trend);
        assert!((rep.rows[0].total_mass - 1.0).abs() < 1e-10);
        assert_eq!(rep.rows[2].tail_mass[0].1, 0.0);
        let zero = mollifier_check(&ZeroKernel { dim: 1 }, &[1.0, 0.5]);
        assert_eq!(zero.rows[0].total_mass, 0.0);
        assert!(!zero.is_mollifier_trend);
    }

    #[test]
    fn non_integrable_kernel_flags_divergence() {
        struct Singular;
        impl RadialProfile for Singular {
            fn dim(&self) -> usize {
                1
            }
            fn density(&self, r: f64) -> f64 {
                if r < 1.0 {
                    1.0 / r
                } else {
                    0.0
                }
            }
            fn breakpoints(&self) -> Vec<f64> {
                vec![1.0]
            }
        }
        struct Fam;
        impl MollifierFamily for Fam {
            fn name(&self) -> &str {
                "singular"
            }
            fn member(&self, _t: f64) -> Box<dyn RadialProfile> {
                Box::new(Singular)
            }
        }
        let rep = mollifier_check(&Fam, &[1.0]);
        assert!(rep.rows[0].diverged);
    }
}
