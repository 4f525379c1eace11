//! Evaluation of the BBM, Bourgain–Nguyen and BSVY functionals.
//!
//! For `h = |x - y|`, `sigma = (y - x)/h` and `d = u(y) - u(x)`:
//!
//! * BBM: `int int_{h < r} |d|^p / h^p * eps / h^{N - eps}`;
//! * BN: `delta^p int int_{|d| > delta} h^{-N-p}`;
//! * BSVY: `Phi_lambda(u) = lambda^p nu_gamma({|d| / h^{1 + gamma/p} > lambda})`
//!   with `nu_gamma(E) = int int_E h^{-N + gamma}`.
//!
//! The BSVY value carries the `lambda^p` factor.

mod cutoffs;
mod det1d;
mod kernel;
mod monte_carlo;
mod sampler;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, LabError, Result};
use crate::field::ScalarField;
use crate::geometry::Aabb;

pub use cutoffs::{auto_cutoffs, auto_cutoffs_with_tol, Cutoffs, DEFAULT_TAIL_TOL};
pub use kernel::{power_integral, Kernel};
pub use sampler::{radial_sampler, RadialSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bbm,
    Bn,
    Bsvy,
}

impl Family {
    pub fn as_str(self) -> &'static str {
        match self {
            Family::Bbm => "bbm",
            Family::Bn => "bn",
            Family::Bsvy => "bsvy",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bbm" => Ok(Family::Bbm),
            "bn" => Ok(Family::Bn),
            "bsvy" => Ok(Family::Bsvy),
            other => invalid(format!("unknown family `{other}` (expected bbm, bn or bsvy)")),
        }
    }

    /// Name of the sweep parameter.
    pub fn param_name(self) -> &'static str {
        match self {
            Family::Bbm => "eps",
            Family::Bn => "delta",
            Family::Bsvy => "lambda",
        }
    }
}

/// Which functional to evaluate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalSpec {
    pub family: Family,
    pub p: f64,
    /// BSVY only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// `eps` (BBM), `delta` (BN) or `lambda` (BSVY).
    pub param: f64,
    /// BBM only: pairs are restricted to `|x - y| < r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radial_cut: Option<f64>,
    /// Restrict both points to this box (`Phi_{lambda, Omega}`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Aabb>,
}

impl FunctionalSpec {
    pub fn bbm(p: f64, eps: f64, r: f64) -> Self {
        Self {
            family: Family::Bbm,
            p,
            gamma: None,
            param: eps,
            radial_cut: Some(r),
            domain: None,
        }
    }

    pub fn bn(p: f64, delta: f64) -> Self {
        Self {
            family: Family::Bn,
            p,
            gamma: None,
            param: delta,
            radial_cut: None,
            domain: None,
        }
    }

    pub fn bsvy(p: f64, gamma: f64, lambda: f64) -> Self {
        Self {
            family: Family::Bsvy,
            p,
            gamma: Some(gamma),
            param: lambda,
            radial_cut: None,
            domain: None,
        }
    }

    pub fn restricted_to(mut self, domain: Aabb) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Same functional at another value of the sweep parameter.
    pub fn with_param(&self, param: f64) -> Self {
        let mut s = self.clone();
        s.param = param;
        s
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) || !self.p.is_finite() {
            return invalid(format!("p = {} must be a finite real >= 1", self.p));
        }
        if !(self.param > 0.0) || !self.param.is_finite() {
            return invalid(format!(
                "{} = {} must be a finite positive real",
                self.family.param_name(),
                self.param
            ));
        }
        match self.family {
            Family::Bsvy => match self.gamma {
                None => return invalid("gamma is required for the bsvy family"),
                Some(g) if g == 0.0 || !g.is_finite() => {
                    return invalid("gamma must be a finite nonzero real for the bsvy family")
                }
                _ => {}
            },
            Family::Bbm => {
                if self.param >= self.p {
                    return invalid(format!("eps = {} must be smaller than p = {}", self.param, self.p));
                }
                match self.radial_cut {
                    Some(r) if r > 0.0 => {}
                    _ => return invalid("bbm needs a positive radial cut r"),
                }
            }
            Family::Bn => {}
        }
        if let Some(d) = &self.domain {
            if d.is_empty() {
                return invalid("restriction domain is empty");
            }
        }
        Ok(())
    }

    /// `beta = 1 + gamma / p` of the level-set families.
    pub fn beta(&self) -> Option<f64> {
        match self.family {
            Family::Bbm => None,
            Family::Bn => Some(0.0),
            Family::Bsvy => self.gamma.map(|g| 1.0 + g / self.p),
        }
    }

    pub fn kernel(&self) -> Kernel {
        match self.family {
            Family::Bbm => Kernel::Moment {
                p: self.p,
                eps: self.param,
                radius: self.radial_cut.unwrap_or(f64::INFINITY),
            },
            Family::Bn => Kernel::LevelSet {
                lambda: self.param,
                beta: 0.0,
                gamma: -self.p,
                prefactor: self.param.powf(self.p),
            },
            Family::Bsvy => {
                let g = self.gamma.unwrap_or(f64::NAN);
                Kernel::LevelSet {
                    lambda: self.param,
                    beta: 1.0 + g / self.p,
                    gamma: g,
                    prefactor: self.param.powf(self.p),
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    #[serde(rename = "deterministic-1d")]
    Deterministic1d,
    MonteCarlo,
}

impl Engine {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "deterministic-1d" | "det" | "deterministic" => Ok(Engine::Deterministic1d),
            "monte-carlo" | "mc" => Ok(Engine::MonteCarlo),
            other => invalid(format!("unknown engine `{other}`")),
        }
    }
}

/// A radial cutoff policy: chosen automatically or fixed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Cutoff {
    #[default]
    Auto,
    Explicit(f64),
}

impl Serialize for Cutoff {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Cutoff::Auto => s.serialize_str("auto"),
            Cutoff::Explicit(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for Cutoff {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Cutoff::Explicit(v)),
            Raw::Tag(t) if t == "auto" => Ok(Cutoff::Auto),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("cutoff must be `auto` or a number, got `{t}`"))),
        }
    }
}

/// How to evaluate: engine, budgets, cutoffs and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegrationPlan {
    pub engine: Engine,
    /// Gauss–Legendre nodes per outer panel (deterministic engine).
    pub outer_nodes: usize,
    /// Radial nodes per octave of `h` (deterministic engine).
    pub radial_nodes: usize,
    /// Total sample count (Monte Carlo).
    pub samples: u64,
    pub h_min: Cutoff,
    pub h_max: Cutoff,
    pub seed: u64,
    /// Logarithmic radial strata (Monte Carlo).
    pub strata: usize,
    /// Tolerance for truncated kernel tails.
    pub tail_tol: f64,
}

impl Default for IntegrationPlan {
    fn default() -> Self {
        Self {
            engine: Engine::Deterministic1d,
            outer_nodes: 16,
            radial_nodes: 16,
            samples: 200_000,
            h_min: Cutoff::Auto,
            h_max: Cutoff::Auto,
            seed: 0,
            strata: 32,
            tail_tol: DEFAULT_TAIL_TOL,
        }
    }
}

impl IntegrationPlan {
    pub fn deterministic() -> Self {
        Self::default()
    }

    pub fn monte_carlo(samples: u64, seed: u64) -> Self {
        Self {
            engine: Engine::MonteCarlo,
            samples,
            seed,
            ..Self::default()
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        let mut p = self.clone();
        p.seed = seed;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_nodes < 2 || self.radial_nodes < 2 {
            return invalid("outer_nodes and radial_nodes must be at least 2");
        }
        if self.strata == 0 {
            return invalid("strata must be positive");
        }
        if self.samples < self.strata as u64 {
            return invalid(format!(
                "samples ({}) must be at least strata ({})",
                self.samples, self.strata
            ));
        }
        for (name, c) in [("h_min", self.h_min), ("h_max", self.h_max)] {
            if let Cutoff::Explicit(v) = c {
                if !(v > 0.0) {
                    return invalid(format!("explicit {name} must be positive"));
                }
            }
        }
        if let (Cutoff::Explicit(a), Cutoff::Explicit(b)) = (self.h_min, self.h_max) {
            if !(a < b) {
                return invalid(format!("explicit h_min = {a} must be below h_max = {b}"));
            }
        }
        if !(self.tail_tol > 0.0) {
            return invalid("tail_tol must be positive");
        }
        Ok(())
    }
}

/// A functional value with its error indicator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    /// When `diverged`, a lower bound: the part resolved at the probed cutoffs.
    pub value: f64,
    /// Standard error (Monte Carlo) or node-halving difference (deterministic).
    pub error: f64,
    pub diverged: bool,
    /// Bound on the kernel mass discarded beyond the radial cutoffs.
    pub tail_bound: f64,
    pub n_evaluations: u64,
    pub h_min: f64,
    pub h_max: f64,
    pub plan_echo: IntegrationPlan,
}

impl Estimate {
    fn zero(plan: &IntegrationPlan) -> Self {
        Self {
            value: 0.0,
            error: 0.0,
            diverged: false,
            tail_bound: 0.0,
            n_evaluations: 0,
            h_min: 0.0,
            h_max: 0.0,
            plan_echo: plan.clone(),
        }
    }
}

/// Evaluates `spec` on `u` with `plan`.
pub fn eval_functional(u: &ScalarField, spec: &FunctionalSpec, plan: &IntegrationPlan) -> Result<Estimate> {
    spec.validate()?;
    plan.validate()?;
    if let Some(d) = &spec.domain {
        if d.dim() != u.dim() {
            return invalid("restriction domain dimension differs from the field's");
        }
    }
    match plan.engine {
        Engine::Deterministic1d if u.dim() != 1 => {
            return Err(LabError::UnsupportedEngine {
                engine: "deterministic-1d",
                reason: format!("field `{}` has dimension {}", u.id(), u.dim()),
            })
        }
        _ => {}
    }
    if u.is_constant() {
        return Ok(Estimate::zero(plan));
    }
    let kernel = spec.kernel();
    let cut = match cutoffs::resolve(u, &kernel, plan) {
        Ok(c) => c,
        Err(LabError::NoFiniteCutoff(_)) => {
            let mut e = Estimate::zero(plan);
            e.value = f64::INFINITY;
            e.diverged = true;
            return Ok(e);
        }
        Err(e) => return Err(e),
    };
    let domain = spec.domain.as_ref();
    let mut est = match plan.engine {
        Engine::Deterministic1d => det1d::evaluate(u, &kernel, domain, &cut, plan),
        Engine::MonteCarlo => monte_carlo::evaluate(u, &kernel, domain, &cut, plan),
    };
    est.plan_echo = plan.clone();
    Ok(est)
}

/// Outcome of comparing BN(delta) with BSVY(gamma = -p, lambda = delta).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdentityReport {
    pub bn: Estimate,
    pub bsvy: Estimate,
    pub bitwise_equal: bool,
    pub agree: bool,
}

pub fn bn_equals_bsvy_check(u: &ScalarField, p: f64, delta: f64, plan: &IntegrationPlan) -> Result<IdentityReport> {
    let bn = eval_functional(u, &FunctionalSpec::bn(p, delta), plan)?;
    let bsvy = eval_functional(u, &FunctionalSpec::bsvy(p, -p, delta), plan)?;
    let bitwise_equal = bn.value.to_bits() == bsvy.value.to_bits() && bn.error.to_bits() == bsvy.error.to_bits();
    let tol = (bn.error.powi(2) + bsvy.error.powi(2)).sqrt() * 3.0;
    let agree = bitwise_equal || (bn.value - bsvy.value).abs() <= tol.max(1e-10 * bn.value.abs());
    Ok(IdentityReport {
        bn,
        bsvy,
        bitwise_equal,
        agree,
    })
}
