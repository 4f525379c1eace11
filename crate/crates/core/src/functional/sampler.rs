use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};

/// Inverse-CDF sampler for the density `h^{e-1}` on `[a, b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct PowerLaw {
    e: f64,
    a: f64,
    b: f64,
    /// `(a/b)^e` for `e > 0`, `(b/a)^e` for `e < 0`.
    q: f64,
    /// `int_a^b h^{e-1} dh`.
    mass: f64,
}

impl PowerLaw {
    pub(crate) fn new(e: f64, a: f64, b: f64) -> Result<Self> {
        if !(a >= 0.0) || !b.is_finite() || !(a < b) {
            return invalid(format!("radial range [{a}, {b}] must satisfy 0 <= h_min < h_max < inf"));
        }
        if a == 0.0 && e <= 0.0 {
            return invalid(format!("h_min must be positive when the radial exponent {e} is not positive"));
        }
        let (q, mass) = if e > 0.0 {
            let q = (a / b).powf(e);
            (q, b.powf(e) * (1.0 - q) / e)
        } else if e < 0.0 {
            let q = (b / a).powf(e);
            (q, a.powf(e) * (1.0 - q) / -e)
        } else {
            (0.0, (b / a).ln())
        };
        Ok(Self { e, a, b, q, mass })
    }

    pub(crate) fn mass(&self) -> f64 {
        self.mass
    }

    /// Maps `v` in `[0, 1)` to a radius.
    #[inline]
    pub(crate) fn quantile(&self, v: f64) -> f64 {
        let h = if self.e > 0.0 {
            self.b * (self.q + v * (1.0 - self.q)).powf(1.0 / self.e)
        } else if self.e < 0.0 {
            self.a * (1.0 - v * (1.0 - self.q)).powf(1.0 / self.e)
        } else {
            self.a * (self.b / self.a).powf(v)
        };
        h.clamp(self.a, self.b)
    }
}

/// Stream of `(h, weight)` pairs with `h ~ h^{gamma_eff - 1}` on
/// `[h_min, h_max]`; the constant weight makes `mean(weight * f(h))` an
/// unbiased estimate of `int f(h) h^{gamma_eff - 1} dh`.
#[derive(Debug, Clone)]
pub struct RadialSampler {
    law: PowerLaw,
    rng: ChaCha8Rng,
    remaining: u64,
}

pub fn radial_sampler(gamma_eff: f64, h_min: f64, h_max: f64, seed: u64, count: u64) -> Result<RadialSampler> {
    if h_min < 0.0 || h_min.is_nan() {
        return invalid(format!("h_min = {h_min} must be positive"));
    }
    Ok(RadialSampler {
        law: PowerLaw::new(gamma_eff, h_min, h_max)?,
        rng: ChaCha8Rng::seed_from_u64(seed),
        remaining: count,
    })
}

impl RadialSampler {
    pub fn weight(&self) -> f64 {
        self.law.mass()
    }
}

impl Iterator for RadialSampler {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let v: f64 = self.rng.random();
        Some((self.law.quantile(v), self.law.mass()))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining as usize, Some(self.remaining as usize))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_when_exponent_is_one() {
        let s = radial_sampler(1.0, 0.0, 1.0, 3, 10_000).unwrap();
        assert_eq!(s.weight(), 1.0);
        let mut buckets = [0u32; 4];
        for (h, _) in s {
            buckets[(h * 4.0) as usize] += 1;
        }
        assert!(buckets.iter().all(|&c| (2300..2700).contains(&c)), "{buckets:?}");
    }

    #[test]
    fn mean_for_exponent_two() {
        let n = 1_000_000;
        let hs: Vec<f64> = radial_sampler(2.0, 0.0, 1.0, 11, n).unwrap().map(|(h, _)| h).collect();
        let mean = hs.iter().sum::<f64>() / n as f64;
        let var = hs.iter().map(|h| (h - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 2.0 / 3.0).abs() < 3.0 * se, "{mean} ± {se}");
    }

    #[test]
    fn log_uniform_when_exponent_is_zero() {
        let (a, b) = (1e-3, 10.0);
        let n = 40_000;
        let s = radial_sampler(0.0, a, b, 5, n).unwrap();
        assert!((s.weight() - (b / a).ln()).abs() < 1e-12);
        let t: Vec<f64> = s.map(|(h, _)| (h.ln() - a.ln()) / (b / a).ln()).collect();
        let mean = t.iter().sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01);
        assert!(t.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn weight_is_unbiased_for_negative_exponent() {
        // int_{0.01}^{1} h * h^{-3} dh = 99
        let n = 200_000;
        let s = radial_sampler(-2.0, 0.01, 1.0, 9, n).unwrap();
        let est: f64 = s.map(|(h, w)| w * h).sum::<f64>() / n as f64;
        assert!((est - 99.0).abs() < 1.0, "{est}");
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(radial_sampler(1.0, -1.0, 1.0, 0, 1).is_err());
        assert!(radial_sampler(-0.5, 0.0, 1.0, 0, 1).is_err());
        assert!(radial_sampler(1.0, 2.0, 1.0, 0, 1).is_err());
    }
}
