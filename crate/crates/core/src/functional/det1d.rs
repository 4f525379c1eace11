//! Deterministic quadrature for 1-D fields.
//!
//! With `S` the support interval, the symmetric double integral is
//! `int_{x in S} sum_{sigma = +-1} int_h F(x, x + sigma h) (2 - 1_S(y)) dh dx`,
//! so only `x in S` is sampled. For each `x` the `h`-axis is cut at the
//! distances to every breakpoint; on pieces where `u(y)` is constant the
//! integral is closed-form (including the unbounded piece past the
//! support), elsewhere event boundaries are bracketed on a logarithmic scan
//! and refined by bisection. Radii below `h_min` are handled in closed form:
//! a first-order Taylor term for the smooth part and the crossing-pair
//! integral at each jump.

use rayon::prelude::*;

use super::{Cutoff, Cutoffs, Estimate, IntegrationPlan, Kernel};
use crate::field::{FieldClass, ScalarField};
use crate::geometry::Aabb;
use crate::quadrature::{graded_panels, log_panels, snap_ceil, GaussLegendre};

const OUTER_PANELS: f64 = 64.0;
const BISECTION_STEPS: usize = 56;

struct Layout<'a> {
    u: &'a ScalarField,
    k: Kernel,
    s: (f64, f64),
    omega: (f64, f64),
    walls: Vec<f64>,
    piecewise_constant: bool,
    h_min: f64,
    h_hi: f64,
}

#[derive(Default, Clone, Copy)]
struct Acc {
    sum: f64,
    diverged: bool,
    evals: u64,
}

impl Acc {
    #[inline]
    fn add(&mut self, v: f64) {
        if v.is_finite() {
            self.sum += v;
        } else {
            self.diverged = true;
        }
    }
}

impl Layout<'_> {
    #[inline]
    fn pair_weight(&self, y: f64) -> f64 {
        if y <= self.omega.0 || y >= self.omega.1 {
            0.0
        } else if y > self.s.0 && y < self.s.1 {
            1.0
        } else {
            2.0
        }
    }

    #[inline]
    fn constant_at(&self, y: f64) -> bool {
        self.piecewise_constant || y <= self.s.0 || y >= self.s.1
    }

    fn inner(&self, x: f64, radial: &GaussLegendre, per_octave: f64) -> Acc {
        let mut acc = Acc::default();
        let ux = self.u.eval1(x);
        acc.evals += 1;
        let g = self.u.deriv1(x).abs();
        for sigma in [1.0, -1.0] {
            let w_near = self.pair_weight(x + sigma * 0.5 * self.h_min);
            if w_near > 0.0 && g > 0.0 {
                acc.add(w_near * self.k.linear_near_field(g, self.h_min.min(self.h_hi)));
            }
            let mut ahead: Vec<f64> = self
                .walls
                .iter()
                .map(|&b| sigma * (b - x))
                .filter(|&d| d > self.h_min && d < self.h_hi)
                .collect();
            ahead.sort_by(f64::total_cmp);
            ahead.push(self.h_hi);
            let mut h1 = self.h_min;
            for &h2 in &ahead {
                if !(h2 > h1) {
                    continue;
                }
                let mid = if h2.is_finite() { 0.5 * (h1 + h2) } else { h1 + 1.0 };
                let y_mid = x + sigma * mid;
                let w = self.pair_weight(y_mid);
                if w > 0.0 {
                    if self.constant_at(y_mid) {
                        let d = (self.u.eval1(y_mid) - ux).abs();
                        acc.evals += 1;
                        acc.add(w * self.k.constant_piece(d, h1, h2, 0.0));
                    } else {
                        let v = self.smooth_piece(x, sigma, ux, h1, h2, radial, per_octave, &mut acc.evals);
                        acc.add(w * v);
                    }
                }
                h1 = h2;
            }
        }
        acc
    }

    #[allow(clippy::too_many_arguments)]
    fn smooth_piece(
        &self,
        x: f64,
        sigma: f64,
        ux: f64,
        h1: f64,
        h2: f64,
        radial: &GaussLegendre,
        per_octave: f64,
        evals: &mut u64,
    ) -> f64 {
        let diff = |h: f64| (self.u.eval1(x + sigma * h) - ux).abs();
        match self.k {
            Kernel::Moment { p, eps, .. } => {
                let cuts = log_panels(h1, h2, 1.0);
                let mut s = 0.0;
                for w in cuts.windows(2) {
                    s += radial.integrate(w[0].ln(), w[1].ln(), |v| {
                        let h = v.exp();
                        diff(h).powf(p) * eps * h.powf(eps - p)
                    });
                }
                *evals += ((cuts.len() - 1) * radial.len()) as u64;
                s
            }
            Kernel::LevelSet { gamma, prefactor, .. } => {
                let excess = |h: f64| self.k.excess(diff(h), h).unwrap_or(0.0);
                let grid = log_panels(h1, h2, per_octave);
                let mut total = 0.0;
                let mut q_prev = excess(grid[0]);
                *evals += grid.len() as u64;
                for w in grid.windows(2) {
                    let q_next = excess(w[1]);
                    let (a, b) = match (q_prev > 0.0, q_next > 0.0) {
                        (true, true) => (w[0], w[1]),
                        (false, false) => (w[0], w[0]),
                        (true, false) => (w[0], self.root(&excess, w[0], w[1], true, evals)),
                        (false, true) => (self.root(&excess, w[0], w[1], false, evals), w[1]),
                    };
                    if b > a {
                        total += super::power_integral(gamma, a, b);
                    }
                    q_prev = q_next;
                }
                prefactor * total
            }
        }
    }

    /// Sign change of `q` on `(a, b)`, bisected in `ln h`.
    fn root(&self, q: &impl Fn(f64) -> f64, a: f64, b: f64, positive_left: bool, evals: &mut u64) -> f64 {
        let (mut lo, mut hi) = (a.ln(), b.ln());
        for _ in 0..BISECTION_STEPS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if (q(mid.exp()) > 0.0) == positive_left {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        *evals += BISECTION_STEPS as u64;
        (0.5 * (lo + hi)).exp()
    }
}

/// Outer panels on `[lo, hi]`: geometric grading towards every wall down to
/// `finest`, then uniform refinement of panels wider than `max_width`.
fn outer_panels(walls: &[f64], lo: f64, hi: f64, finest: f64, max_width: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![lo, hi];
    cuts.extend(walls.iter().copied().filter(|&b| b > lo && b < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut panels = Vec::new();
    for seg in cuts.windows(2) {
        let g = graded_panels(seg[0], seg[1], finest.max(1e-13 * (seg[1] - seg[0])));
        for w in g.windows(2) {
            let n = snap_ceil((w[1] - w[0]) / max_width).max(1.0) as usize;
            let step = (w[1] - w[0]) / n as f64;
            for j in 0..n {
                let a = w[0] + step * j as f64;
                let b = if j + 1 == n { w[1] } else { a + step };
                panels.push((a, b));
            }
        }
    }
    panels
}

pub(crate) fn evaluate(
    u: &ScalarField,
    k: &Kernel,
    domain: Option<&Aabb>,
    cut: &Cutoffs,
    plan: &IntegrationPlan,
) -> Estimate {
    let sb = u.support_box();
    let s = (sb.lo[0], sb.hi[0]);
    let omega = domain.map_or((f64::NEG_INFINITY, f64::INFINITY), |d| (d.lo[0], d.hi[0]));
    let (x_lo, x_hi) = (s.0.max(omega.0), s.1.min(omega.1));
    let explicit_hmax = matches!(plan.h_max, Cutoff::Explicit(_));
    let mut h_hi = if explicit_hmax { cut.h_max } else { f64::INFINITY };
    if let Kernel::Moment { radius, .. } = *k {
        h_hi = h_hi.min(radius);
    }
    let mut est = Estimate {
        value: 0.0,
        error: 0.0,
        diverged: false,
        tail_bound: if explicit_hmax { cut.tail_bound } else { 0.0 },
        n_evaluations: 0,
        h_min: cut.h_min,
        h_max: if h_hi.is_finite() { h_hi } else { cut.h_max },
        plan_echo: plan.clone(),
    };
    if !(x_hi > x_lo) {
        return est;
    }

    let mut walls = u.breakpoints();
    walls.extend([s.0, s.1]);
    walls.extend([omega.0, omega.1].into_iter().filter(|v| v.is_finite()));
    walls.sort_by(f64::total_cmp);
    walls.dedup();

    let layout = Layout {
        u,
        k: *k,
        s,
        omega,
        walls,
        piecewise_constant: u.class_tag() == FieldClass::PiecewiseConstant,
        h_min: cut.h_min,
        h_hi,
    };

    // crossing pairs closer than h_min
    let mut near = Acc::default();
    for f in u.interfaces() {
        let b = f.location.unwrap_or(f64::NAN);
        if b > omega.0 && b < omega.1 {
            near.add(2.0 * f.measure * k.constant_piece(f.jump.abs(), 0.0, cut.h_min.min(h_hi), 1.0));
        }
    }

    let panels = outer_panels(&layout.walls, x_lo, x_hi, cut.h_min, (x_hi - x_lo) / OUTER_PANELS);
    let run = |outer_nodes: usize, radial_nodes: usize| -> Acc {
        let outer = GaussLegendre::new(outer_nodes);
        let radial = GaussLegendre::new(radial_nodes);
        let parts: Vec<Acc> = panels
            .par_iter()
            .map(|&(a, b)| {
                let mut acc = Acc::default();
                for (x, w) in outer.mapped(a, b) {
                    let inner = layout.inner(x, &radial, radial_nodes as f64);
                    acc.sum += w * inner.sum;
                    acc.diverged |= inner.diverged;
                    acc.evals += inner.evals;
                }
                acc
            })
            .collect();
        parts.iter().fold(Acc::default(), |mut t, p| {
            t.sum += p.sum;
            t.diverged |= p.diverged;
            t.evals += p.evals;
            t
        })
    };
    let fine = run(plan.outer_nodes, plan.radial_nodes);
    let coarse = run((plan.outer_nodes / 2).max(1), (plan.radial_nodes / 2).max(1));

    est.value = fine.sum + near.sum;
    est.error = (fine.sum - coarse.sum).abs();
    est.diverged = fine.diverged || near.diverged;
    est.n_evaluations = fine.evals + coarse.evals;
    est
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panels_refine_towards_walls() {
        let p = outer_panels(&[0.0, 0.5, 1.0], 0.0, 1.0, 1e-6, 0.1);
        assert_eq!(p.first().unwrap().0, 0.0);
        assert_eq!(p.last().unwrap().1, 1.0);
        assert!(p.iter().any(|&(a, b)| a == 0.5 || b == 0.5));
        assert!(p.iter().all(|&(a, b)| b > a && b - a <= 0.1 + 1e-15));
        assert!(p.iter().any(|&(a, b)| a == 0.0 && b <= 1e-6));
    }
}
