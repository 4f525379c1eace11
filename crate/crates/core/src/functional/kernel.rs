//! Family-independent description of the radial integrand.
//!
//! Every functional is written as
//! `int_x int_sigma int_h F(|u(x + h sigma) - u(x)|, h) dh dsigma dx`
//! and lowered to one of two kernels. BN(delta) and BSVY(gamma = -p,
//! lambda = delta) lower to the same value, so the engines cannot tell them
//! apart.

/// Radial integrand in the `(x, sigma, h)` representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    /// `|d|^p eps h^{eps - p - 1}` for `h < radius`.
    Moment { p: f64, eps: f64, radius: f64 },
    /// `prefactor * 1{|d| > lambda h^beta} h^{gamma - 1}`.
    LevelSet {
        lambda: f64,
        beta: f64,
        gamma: f64,
        prefactor: f64,
    },
}

impl Kernel {
    /// Exponent `e` of the radial density `h^{e-1}` used for importance sampling.
    pub fn radial_exponent(&self) -> f64 {
        match *self {
            Kernel::Moment { eps, .. } => eps,
            Kernel::LevelSet { gamma, .. } => gamma,
        }
    }

    /// The integrand divided by `h^{e-1}`, `e` = [`Self::radial_exponent`].
    #[inline]
    pub fn reduced(&self, absd: f64, h: f64) -> f64 {
        match *self {
            Kernel::Moment { p, eps, radius } => {
                if h >= radius {
                    0.0
                } else {
                    eps * (absd / h).powf(p)
                }
            }
            Kernel::LevelSet {
                lambda,
                beta,
                prefactor,
                ..
            } => {
                if absd > lambda * h.powf(beta) {
                    prefactor
                } else {
                    0.0
                }
            }
        }
    }

    /// `int_{h1}^{h2} F(absd, h) h^{shift} dh` for a difference `absd` that is
    /// constant in `h`. `shift = 0` is the kernel itself; `shift = 1` is the
    /// crossing-pair weight of the near field at an interface.
    pub fn constant_piece(&self, absd: f64, h1: f64, h2: f64, shift: f64) -> f64 {
        if absd == 0.0 || !(h2 > h1) {
            return 0.0;
        }
        match *self {
            Kernel::Moment { p, eps, radius } => {
                eps * absd.powf(p) * power_integral(eps - p + shift, h1, h2.min(radius))
            }
            Kernel::LevelSet {
                lambda,
                beta,
                gamma,
                prefactor,
            } => {
                let (a, b) = event_window(lambda, beta, absd, h1, h2);
                prefactor * power_integral(gamma + shift, a, b)
            }
        }
    }

    /// Near-field integral `int_0^{h_min}` for a locally linear difference
    /// `|d| = g h`.
    pub fn linear_near_field(&self, g: f64, h_min: f64) -> f64 {
        if g == 0.0 {
            return 0.0;
        }
        match *self {
            Kernel::Moment { p, eps, radius } => g.powf(p) * h_min.min(radius).powf(eps),
            Kernel::LevelSet {
                lambda,
                beta,
                gamma,
                prefactor,
            } => {
                // g h > lambda h^beta  <=>  h^{1 - beta} > lambda / g
                let (a, b) = if beta < 1.0 {
                    let hc = (lambda / g).powf(1.0 / (1.0 - beta));
                    (hc, h_min)
                } else if beta > 1.0 {
                    let hc = (g / lambda).powf(1.0 / (beta - 1.0));
                    (0.0, hc.min(h_min))
                } else if g > lambda {
                    (0.0, h_min)
                } else {
                    (0.0, 0.0)
                };
                prefactor * power_integral(gamma, a, b)
            }
        }
    }

    /// The event test for level-set kernels, `None` for moment kernels.
    #[inline]
    pub fn excess(&self, absd: f64, h: f64) -> Option<f64> {
        match *self {
            Kernel::LevelSet { lambda, beta, .. } => Some(absd - lambda * h.powf(beta)),
            Kernel::Moment { .. } => None,
        }
    }
}

/// Part of `(h1, h2)` where `absd > lambda h^beta`, as an interval.
pub(crate) fn event_window(lambda: f64, beta: f64, absd: f64, h1: f64, h2: f64) -> (f64, f64) {
    if beta > 0.0 {
        let hc = (absd / lambda).powf(1.0 / beta);
        (h1, h2.min(hc))
    } else if beta < 0.0 {
        let hc = (absd / lambda).powf(1.0 / beta);
        (h1.max(hc), h2)
    } else if absd > lambda {
        (h1, h2)
    } else {
        (h1, h1)
    }
}

/// `int_a^b h^{e-1} dh` with `0 <= a`, `b <= inf`; infinite when divergent.
pub fn power_integral(e: f64, a: f64, b: f64) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    if e == 0.0 {
        if a == 0.0 || b.is_infinite() {
            f64::INFINITY
        } else {
            (b / a).ln()
        }
    } else if e > 0.0 {
        if b.is_infinite() {
            f64::INFINITY
        } else {
            (b.powf(e) - a.powf(e)) / e
        }
    } else if a == 0.0 {
        f64::INFINITY
    } else {
        (a.powf(e) - b.powf(e)) / -e
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_integral_cases() {
        assert!((power_integral(1.0, 0.0, 3.0) - 3.0).abs() < 1e-15);
        assert!((power_integral(0.0, 1.0, std::f64::consts::E) - 1.0).abs() < 1e-15);
        assert!((power_integral(-1.0, 2.0, f64::INFINITY) - 0.5).abs() < 1e-15);
        assert!(power_integral(-0.5, 0.0, 1.0).is_infinite());
        assert!(power_integral(0.5, 1.0, f64::INFINITY).is_infinite());
        assert_eq!(power_integral(2.0, 3.0, 1.0), 0.0);
    }

    #[test]
    fn level_set_constant_piece() {
        let k = Kernel::LevelSet {
            lambda: 4.0,
            beta: 2.0,
            gamma: 1.0,
            prefactor: 4.0,
        };
        // event h < (1/4)^{1/2}: int_0^{1/2} dh = 1/2
        assert!((k.constant_piece(1.0, 0.0, 10.0, 0.0) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn near_field_matches_quadrature() {
        let k = Kernel::LevelSet {
            lambda: 0.3,
            beta: 0.5,
            gamma: -0.5,
            prefactor: 0.3,
        };
        let g = 2.0;
        let h_min = 0.1;
        let n = 200_000;
        let mut s = 0.0;
        for i in 0..n {
            let h = h_min * (i as f64 + 0.5) / n as f64;
            if let Some(e) = k.excess(g * h, h) {
                if e > 0.0 {
                    s += 0.3 * h.powf(-1.5) * h_min / n as f64;
                }
            }
        }
        let exact = k.linear_near_field(g, h_min);
        assert!((s - exact).abs() < 1e-3 * exact, "{s} vs {exact}");
    }
}
