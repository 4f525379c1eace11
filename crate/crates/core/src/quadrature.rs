//! Fixed quadrature rules shared by the engines and the constant tables.
//!
//! Two families are provided: Gauss–Legendre (for smooth panels) and
//! tanh–sinh (for integrands with algebraic endpoint behaviour, such as
//! `cos^p` at `pi/2` for non-even `p`).

use std::f64::consts::{FRAC_PI_2, PI};

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `n`-point rule by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_and_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_and_derivative(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&t, &w)| (mid + half * t, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Tanh–sinh rule on `[a, b]` with step `2^-level`.
///
/// Endpoint distances are computed in complementary form so that integrands
/// with algebraic singularities at `a` or `b` are sampled without cancellation.
/// The closure receives `(x, distance_to_a, distance_to_b)`.
pub fn tanh_sinh<F>(a: f64, b: f64, level: u32, mut f: F) -> f64
where
    F: FnMut(f64, f64, f64) -> f64,
{
    let h = 0.5f64.powi(level as i32);
    let half = 0.5 * (b - a);
    let t_max = 4.0;
    let k_max = (t_max / h).ceil() as i64;
    let mut sum = 0.0;
    for k in -k_max..=k_max {
        let t = k as f64 * h;
        let u = FRAC_PI_2 * t.sinh();
        let cu = u.cosh();
        // 1 - tanh(u) for u >= 0, computed without cancellation
        let e = (-2.0 * u.abs()).exp();
        let comp = 2.0 * e / (1.0 + e);
        let w = FRAC_PI_2 * t.cosh() / (cu * cu);
        if !w.is_finite() || w == 0.0 {
            continue;
        }
        let (da, db) = if u >= 0.0 {
            (half * (2.0 - comp), half * comp)
        } else {
            (half * comp, half * (2.0 - comp))
        };
        if da <= 0.0 || db <= 0.0 {
            continue;
        }
        let x = if da < db { a + da } else { b - db };
        sum += w * f(x, da, db);
    }
    sum * half * h
}

/// Relative slack for integer grid decisions, so that a one-ulp change in
/// an interval length (e.g. after a translation) cannot add a panel.
const SNAP: f64 = 1e-12;

/// `ceil(v)`, treating values within `SNAP` of an integer as that integer.
pub fn snap_ceil(v: f64) -> f64 {
    (v * (1.0 - SNAP)).ceil()
}

/// Geometric panel boundaries on `[lo, hi]` that refine towards both ends
/// down to width `finest`. Returned boundaries are sorted and deduplicated.
pub fn graded_panels(lo: f64, hi: f64, finest: f64) -> Vec<f64> {
    let len = hi - lo;
    if len <= 0.0 {
        return vec![lo, hi];
    }
    let half = 0.5 * len;
    let finest = finest.max(len * 1e-15);
    let mut offsets = Vec::new();
    let mut d = half;
    while d > finest * (1.0 + SNAP) {
        offsets.push(d);
        d *= 0.5;
    }
    offsets.push(d);
    let mut pts = Vec::with_capacity(2 * offsets.len() + 2);
    pts.push(lo);
    for &o in offsets.iter().rev() {
        pts.push(lo + o);
    }
    for &o in offsets.iter().skip(1) {
        pts.push(hi - o);
    }
    pts.push(hi);
    pts.dedup_by(|a, b| (*a - *b).abs() <= 0.0);
    pts
}

/// Logarithmically spaced panel boundaries covering `[lo, hi]`, `lo > 0`,
/// with at most `per_octave` panels per factor of two.
pub fn log_panels(lo: f64, hi: f64, per_octave: f64) -> Vec<f64> {
    debug_assert!(lo > 0.0 && hi > lo);
    let octaves = (hi / lo).log2();
    let n = (snap_ceil(octaves * per_octave) as usize).max(1);
    let step = (hi.ln() - lo.ln()) / n as f64;
    let mut pts: Vec<f64> = (0..=n).map(|i| (lo.ln() + step * i as f64).exp()).collect();
    pts[0] = lo;
    pts[n] = hi;
    pts
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // degree 15 is integrated exactly
        let v = rule.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-9 * exact.abs());
    }

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        for n in [1, 2, 5, 16, 33, 64] {
            let rule = GaussLegendre::new(n);
            let s: f64 = rule.weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n} s={s}");
        }
    }

    #[test]
    fn tanh_sinh_handles_endpoint_singularity() {
        // int_0^1 x^{-1/2} dx = 2
        let v = tanh_sinh(0.0, 1.0, 6, |_, da, _| da.powf(-0.5));
        assert!((v - 2.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn graded_panels_cover_interval() {
        let p = graded_panels(0.0, 1.0, 1e-6);
        assert_eq!(p[0], 0.0);
        assert_eq!(*p.last().unwrap(), 1.0);
        assert!(p.windows(2).all(|w| w[1] > w[0]));
        assert!(p[1] - p[0] <= 1e-6);
    }
}
