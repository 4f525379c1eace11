//! Stratified Monte Carlo in the `(x, sigma, h)` representation.
//!
//! `x` is uniform on the support box, `sigma` uniform on the sphere and `h`
//! drawn from the kernel's radial density inside each logarithmic stratum
//! of `[h_min, h_max]`. Stratum `k` uses ChaCha stream `k + 1` of the plan
//! seed; stream 0 feeds the near-field term below `h_min`. A restriction
//! domain `Omega` limits `x` to `S n Omega` and drops pairs with `y` outside.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::sampler::PowerLaw;
use super::{Cutoffs, Estimate, IntegrationPlan, Kernel};
use crate::constants::{sphere_area, sphere_constant};
use crate::field::{FieldClass, ScalarField};
use crate::geometry::Aabb;

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    #[inline]
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    /// Variance of the mean.
    fn var_mean(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64 / self.n as f64
        }
    }
}

struct Sampler<'a> {
    lo: &'a [f64],
    width: Vec<f64>,
    dim: usize,
}

impl Sampler<'_> {
    #[inline]
    fn point(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        for (d, o) in out.iter_mut().enumerate().take(self.dim) {
            *o = self.lo[d] + self.width[d] * rng.random::<f64>();
        }
    }

    #[inline]
    fn direction(&self, rng: &mut ChaCha8Rng, out: &mut [f64]) {
        if self.dim == 1 {
            out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            return;
        }
        loop {
            let mut n2 = 0.0;
            for v in out.iter_mut() {
                *v = rng.sample(StandardNormal);
                n2 += *v * *v;
            }
            if n2 > 1e-300 {
                let inv = 1.0 / n2.sqrt();
                out.iter_mut().for_each(|v| *v *= inv);
                return;
            }
        }
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub(crate) fn evaluate(
    u: &ScalarField,
    k: &Kernel,
    domain: Option<&Aabb>,
    cut: &Cutoffs,
    plan: &IntegrationPlan,
) -> Estimate {
    let n = u.dim();
    let sbox: Aabb = u.support_box();
    // x ranges over the part of the support inside the domain
    let xbox = domain.map_or_else(|| sbox.clone(), |d| sbox.intersect(d));
    if xbox.is_empty() {
        return Estimate {
            value: 0.0,
            error: 0.0,
            diverged: false,
            tail_bound: 0.0,
            n_evaluations: 0,
            h_min: cut.h_min,
            h_max: cut.h_max,
            plan_echo: plan.clone(),
        };
    }
    let vol = xbox.volume();
    let area = sphere_area(n);
    let sampler = Sampler {
        lo: &xbox.lo,
        width: xbox.lo.iter().zip(&xbox.hi).map(|(l, h)| h - l).collect(),
        dim: n,
    };
    let strata = plan.strata;
    let per = plan.samples / strata as u64;
    let extra = plan.samples % strata as u64;
    let h_min = cut.h_min;
    let mut h_max = cut.h_max;
    let mut tail_bound = cut.tail_bound;
    if let Some(d) = domain {
        if d.diameter() <= h_max {
            h_max = d.diameter();
            tail_bound = 0.0;
        }
    }
    let ratio = (h_max / h_min).max(1.0);
    let edge = |i: usize| {
        if i == strata {
            h_max
        } else {
            h_min * ratio.powf(i as f64 / strata as f64)
        }
    };
    let e = k.radial_exponent();

    // (estimate, variance, evaluations) per stratum; index 0 is the near field
    let jobs: Vec<(f64, f64, u64)> = (0..=strata)
        .into_par_iter()
        .map(|job| {
            let mut x = vec![0.0; n];
            let mut sigma = vec![0.0; n];
            let mut y = vec![0.0; n];
            if job == 0 {
                if u.class_tag() == FieldClass::PiecewiseConstant {
                    return (0.0, 0.0, 0);
                }
                let mut rng = stream_rng(plan.seed, 0);
                let mut grad = vec![0.0; n];
                let mut m = Moments::default();
                for _ in 0..per.max(1) {
                    sampler.point(&mut rng, &mut x);
                    sampler.direction(&mut rng, &mut sigma);
                    u.gradient(&x, &mut grad);
                    let g: f64 = grad.iter().zip(&sigma).map(|(a, b)| a * b).sum::<f64>().abs();
                    m.push(k.linear_near_field(g, h_min));
                }
                let c = vol * area;
                return (c * m.mean, c * c * m.var_mean(), m.n);
            }
            let s = job - 1;
            let (a, b) = (edge(s), edge(s + 1));
            let law = match PowerLaw::new(e, a, b) {
                Ok(l) if b > a => l,
                _ => return (0.0, 0.0, 0),
            };
            let count = per + u64::from((s as u64) < extra);
            let mut rng = stream_rng(plan.seed, job as u64);
            let mut m = Moments::default();
            for _ in 0..count {
                sampler.point(&mut rng, &mut x);
                sampler.direction(&mut rng, &mut sigma);
                let h = law.quantile(rng.random::<f64>());
                for d in 0..n {
                    y[d] = x[d] + h * sigma[d];
                }
                let diff = (u.evaluate(&y) - u.evaluate(&x)).abs();
                let w = if domain.is_some_and(|d| !d.contains(&y)) {
                    0.0
                } else if sbox.contains(&y) {
                    1.0
                } else {
                    2.0
                };
                m.push(w * k.reduced(diff, h));
            }
            let c = vol * area * law.mass();
            (c * m.mean, c * c * m.var_mean(), 2 * m.n)
        })
        .collect();

    let mut value = 0.0;
    let mut var = 0.0;
    let mut evals = 0;
    for (v, s2, c) in &jobs {
        value += v;
        var += s2;
        evals += c;
    }

    let k1 = sphere_constant(n, 1.0).map(|c| c.value).unwrap_or(f64::NAN);
    let mut diverged = false;
    // interfaces without a location (N >= 2) are taken to lie inside the domain
    for f in u.interfaces() {
        if let (Some(b), Some(d)) = (f.location, domain) {
            if !(b > d.lo[0] && b < d.hi[0]) {
                continue;
            }
        }
        let v = f.measure * k1 * k.constant_piece(f.jump.abs(), 0.0, h_min, 1.0);
        if v.is_finite() {
            value += v;
        } else {
            diverged = true;
        }
    }

    Estimate {
        value,
        error: var.sqrt(),
        diverged,
        tail_bound,
        n_evaluations: evals,
        h_min,
        h_max,
        plan_echo: plan.clone(),
    }
}
