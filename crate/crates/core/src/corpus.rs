//! The named test fields, their first-order seminorms and the dyadic
//! quantization used by the recovery experiment.

use std::f64::consts::PI;

use serde::ser::{Serialize, Serializer};
use serde::Deserialize;

use crate::error::{invalid, LabError, Result};
use crate::field::{ExactRule, FieldClass, Profile, ScalarField};
use crate::geometry::Aabb;
use crate::quadrature::GaussLegendre;

/// Identifiers of the shipped fields, in catalog order.
pub const CORPUS_IDS: &[&str] = &["step1d", "cube2d", "gauss1d", "gauss2d", "tent1d", "const"];

/// Default ceiling on the number of cells produced by [`quantize_dyadic`].
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 24;

/// Environment variable overriding [`DEFAULT_CELL_BUDGET`].
pub const CELL_BUDGET_ENV: &str = "NLLAB_CELL_BUDGET";

const GAUSS1D_RADIUS: f64 = 8.0;
const GAUSS2D_RADIUS: f64 = 6.0;

/// Builds a corpus field by identifier.
pub fn corpus_field(id: &str) -> Result<ScalarField> {
    let f = match id {
        "step1d" => ScalarField::from_profile(
            id,
            1,
            Profile::Piecewise1d {
                edges: vec![0.0, 1.0],
                values: vec![1.0],
            },
            0.0,
            Aabb::interval(0.0, 1.0),
            FieldClass::PiecewiseConstant,
            ExactRule::JumpsOnly,
        ),
        "cube2d" => ScalarField::from_profile(
            id,
            2,
            Profile::BoxIndicator {
                lo: vec![0.0; 2],
                hi: vec![1.0; 2],
            },
            0.0,
            Aabb::cube(2, 0.0, 1.0),
            FieldClass::PiecewiseConstant,
            ExactRule::JumpsOnly,
        ),
        "gauss1d" => {
            let r = GAUSS1D_RADIUS;
            let tv = 2.0 * (1.0 - (-r * r).exp());
            ScalarField::from_profile(
                id,
                1,
                Profile::Gaussian { radius: r },
                0.0,
                Aabb::interval(-r, r),
                FieldClass::Smooth,
                // int |2x e^{-x^2}|^p dx = 2^p Gamma((p+1)/2) / p^{(p+1)/2}
                ExactRule::Table(vec![
                    (1.0, tv),
                    (2.0, (PI / 2.0).sqrt()),
                    (3.0, 8.0 / 9.0),
                    (4.0, 3.0 * PI.sqrt() / 8.0),
                ]),
            )
        }
        "gauss2d" => {
            let r = GAUSS2D_RADIUS;
            ScalarField::from_profile(
                id,
                2,
                Profile::Gaussian { radius: r },
                0.0,
                Aabb::cube(2, -r, r),
                FieldClass::Smooth,
                // 2 pi int (2r)^p e^{-p r^2} r dr
                ExactRule::Table(vec![(1.0, PI.powf(1.5)), (2.0, PI)]),
            )
        }
        "tent1d" => ScalarField::from_profile(
            id,
            1,
            Profile::Tent { a: 0.0, b: 1.0 },
            0.0,
            Aabb::interval(0.0, 1.0),
            FieldClass::PiecewiseSmooth1d,
            ExactRule::ConstantSlope {
                slope: 2.0,
                length: 1.0,
            },
        ),
        "const" => constant_field(1, 1.0),
        _ => return Err(LabError::UnknownField(id.to_string())),
    };
    Ok(f)
}

/// The constant field `c` on `R^dim`, with a nominal unit support box.
pub fn constant_field(dim: usize, c: f64) -> ScalarField {
    ScalarField::from_profile(
        "const",
        dim,
        Profile::Constant(c),
        c,
        Aabb::cube(dim, 0.0, 1.0),
        FieldClass::PiecewiseConstant,
        ExactRule::Zero,
    )
}

/// Indicator of an open axis-aligned box.
pub fn box_indicator(lo: Vec<f64>, hi: Vec<f64>) -> Result<ScalarField> {
    if lo.len() != hi.len() || lo.is_empty() {
        return invalid("box corners must be non-empty and share a dimension");
    }
    if lo.iter().zip(&hi).any(|(l, h)| !(h > l)) {
        return invalid("box must have positive side lengths");
    }
    let dim = lo.len();
    let support = Aabb::new(lo.clone(), hi.clone());
    Ok(ScalarField::from_profile(
        "box",
        dim,
        Profile::BoxIndicator { lo, hi },
        0.0,
        support,
        FieldClass::PiecewiseConstant,
        ExactRule::JumpsOnly,
    ))
}

/// 1-D piecewise-constant field with `values[i]` on `[edges[i], edges[i+1])`.
pub fn piecewise_constant_1d(edges: Vec<f64>, values: Vec<f64>) -> Result<ScalarField> {
    if values.is_empty() || edges.len() != values.len() + 1 {
        return invalid("need one more edge than values");
    }
    if edges.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("edges must be strictly increasing");
    }
    let support = Aabb::interval(edges[0], *edges.last().unwrap());
    Ok(ScalarField::from_profile(
        "pc1d",
        1,
        Profile::Piecewise1d { edges, values },
        0.0,
        support,
        FieldClass::PiecewiseConstant,
        ExactRule::JumpsOnly,
    ))
}

/// Every shipped field.
pub fn corpus_catalog() -> Vec<ScalarField> {
    CORPUS_IDS
        .iter()
        .map(|id| corpus_field(id).expect("catalog ids are valid"))
        .collect()
}

/// A seminorm that is either a finite number or `+inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Finite(f64),
    Infinite,
}

impl Magnitude {
    pub fn finite(self) -> Option<f64> {
        match self {
            Magnitude::Finite(v) => Some(v),
            Magnitude::Infinite => None,
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Magnitude::Infinite)
    }
}

impl Serialize for Magnitude {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Magnitude::Finite(v) => s.serialize_f64(*v),
            Magnitude::Infinite => s.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Magnitude {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Tag(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Magnitude::Finite(v)),
            Raw::Tag(t) if t == "infinite" => Ok(Magnitude::Infinite),
            Raw::Tag(t) => Err(serde::de::Error::custom(format!("unexpected seminorm `{t}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ExactClosedForm,
    NumericQuadrature,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, Deserialize)]
pub struct SeminormValue {
    pub p: f64,
    pub value: Magnitude,
    pub provenance: Provenance,
}

/// Closed-form seminorm when the field declares one.
pub fn exact_seminorm(u: &ScalarField, p: f64) -> Option<SeminormValue> {
    let (rule, amp, scale, clamp_active) = u.exact_rule();
    let n = u.dim() as f64;
    let transform = |v: f64| amp.abs().powf(p) * scale.powf(n - p) * v;
    let value = match rule {
        ExactRule::Zero => Magnitude::Finite(0.0),
        ExactRule::JumpsOnly => jump_seminorm(u, p),
        _ if clamp_active => return None,
        ExactRule::Table(t) => {
            let (_, v) = t.iter().find(|(q, _)| *q == p)?;
            Magnitude::Finite(transform(*v))
        }
        ExactRule::ConstantSlope { slope, length } => {
            Magnitude::Finite(transform(slope.powf(p) * length))
        }
    };
    Some(SeminormValue {
        p,
        value,
        provenance: Provenance::ExactClosedForm,
    })
}

fn jump_seminorm(u: &ScalarField, p: f64) -> Magnitude {
    let faces = u.interfaces();
    if faces.is_empty() {
        Magnitude::Finite(0.0)
    } else if p > 1.0 {
        Magnitude::Infinite
    } else {
        Magnitude::Finite(faces.iter().map(|f| f.jump.abs() * f.measure).sum())
    }
}

/// `Phi(u)`: `||grad u||_p^p` for `p > 1`, total variation for `p = 1`.
///
/// Uses the declared closed form when there is one, otherwise quadrature.
/// Discontinuous fields have infinite seminorm for `p > 1`.
pub fn seminorm(u: &ScalarField, p: f64) -> Result<SeminormValue> {
    check_p(p)?;
    if let Some(s) = exact_seminorm(u, p) {
        return Ok(s);
    }
    if p > 1.0 && u.has_jumps() {
        return Ok(SeminormValue {
            p,
            value: Magnitude::Infinite,
            provenance: Provenance::NumericQuadrature,
        });
    }
    seminorm_numeric(u, p)
}

/// Quadrature of `|grad u|^p` plus, for `p = 1`, the jump mass.
///
/// Fails with [`LabError::NotSobolev`] for `p > 1` on fields with jumps.
pub fn seminorm_numeric(u: &ScalarField, p: f64) -> Result<SeminormValue> {
    check_p(p)?;
    let jumps = u.interfaces();
    if p > 1.0 && !jumps.is_empty() {
        return Err(LabError::NotSobolev { p });
    }
    let jump_part: f64 = jumps.iter().map(|f| f.jump.abs() * f.measure).sum();
    let smooth_part = if u.dim() == 1 {
        gradient_integral_1d(u, p)
    } else {
        gradient_integral_nd(u, p)
    };
    Ok(SeminormValue {
        p,
        value: Magnitude::Finite(smooth_part + jump_part),
        provenance: Provenance::NumericQuadrature,
    })
}

fn check_p(p: f64) -> Result<()> {
    if !(p >= 1.0) || !p.is_finite() {
        return invalid(format!("seminorm exponent p = {p} must be a finite real >= 1"));
    }
    Ok(())
}

fn gradient_integral_1d(u: &ScalarField, p: f64) -> f64 {
    let s = u.support_box();
    let mut cuts = vec![s.lo[0], s.hi[0]];
    cuts.extend(u.breakpoints());
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let rule = GaussLegendre::new(16);
    let panels = 64;
    let mut total = 0.0;
    for w in cuts.windows(2) {
        let step = (w[1] - w[0]) / panels as f64;
        for k in 0..panels {
            let a = w[0] + step * k as f64;
            total += rule.integrate(a, a + step, |x| u.deriv1(x).abs().powf(p));
        }
    }
    total
}

fn gradient_integral_nd(u: &ScalarField, p: f64) -> f64 {
    let n = u.dim();
    let s = u.support_box();
    let (panels, order) = match n {
        2 => (48, 12),
        3 => (16, 8),
        _ => (6, 6),
    };
    let rule = GaussLegendre::new(order);
    let axes: Vec<Vec<(f64, f64)>> = (0..n)
        .map(|d| {
            let step = (s.hi[d] - s.lo[d]) / panels as f64;
            (0..panels)
                .flat_map(|k| {
                    let a = s.lo[d] + step * k as f64;
                    rule.mapped(a, a + step).collect::<Vec<_>>()
                })
                .collect()
        })
        .collect();
    let per_axis = axes[0].len();
    let total_pts = per_axis.pow(n as u32);
    let mut x = vec![0.0; n];
    let mut g = vec![0.0; n];
    let mut sum = 0.0;
    for flat in 0..total_pts {
        let mut rem = flat;
        let mut w = 1.0;
        for d in (0..n).rev() {
            let (xd, wd) = axes[d][rem % per_axis];
            rem /= per_axis;
            x[d] = xd;
            w *= wd;
        }
        u.gradient(&x, &mut g);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        sum += w * norm.powf(p);
    }
    sum
}

fn cell_budget() -> u128 {
    std::env::var(CELL_BUDGET_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(DEFAULT_CELL_BUDGET)
}

/// Piecewise-constant field equal on each dyadic cube of side `2^-k` that
/// meets the support box to `u` at the cube centre.
pub fn quantize_dyadic(u: &ScalarField, k: u32) -> Result<ScalarField> {
    quantize_dyadic_with_budget(u, k, cell_budget())
}

pub fn quantize_dyadic_with_budget(u: &ScalarField, k: u32, budget: u128) -> Result<ScalarField> {
    if k > 60 {
        return invalid(format!("quantization level k = {k} is too fine"));
    }
    let n = u.dim();
    let s = u.support_box();
    let scale = 2f64.powi(k as i32);
    let side = 1.0 / scale;
    let mut lo_index = Vec::with_capacity(n);
    let mut shape = Vec::with_capacity(n);
    let mut cells: u128 = 1;
    for d in 0..n {
        let lo = (s.lo[d] * scale).floor() as i64;
        let hi = ((s.hi[d] * scale).ceil() as i64).max(lo + 1);
        lo_index.push(lo);
        shape.push((hi - lo) as usize);
        cells = cells.saturating_mul((hi - lo) as u128);
    }
    if cells > budget {
        return Err(LabError::BudgetExceeded {
            what: "dyadic cells",
            needed: cells,
            budget,
        });
    }
    let total = cells as usize;
    let mut values = Vec::with_capacity(total);
    let mut x = vec![0.0; n];
    for flat in 0..total {
        let mut rem = flat;
        for d in (0..n).rev() {
            let i = (rem % shape[d]) as i64;
            rem /= shape[d];
            x[d] = (lo_index[d] + i) as f64 * side + 0.5 * side;
        }
        values.push(u.evaluate(&x));
    }
    let exterior = u.exterior_value();
    let hull = Aabb::new(
        (0..n).map(|d| lo_index[d] as f64 * side).collect(),
        (0..n)
            .map(|d| (lo_index[d] + shape[d] as i64) as f64 * side)
            .collect(),
    );
    let id = format!("quantize({},{k})", u.id());
    let profile = if n == 1 {
        Profile::Piecewise1d {
            edges: (0..=shape[0])
                .map(|i| (lo_index[0] + i as i64) as f64 * side)
                .collect(),
            values,
        }
    } else {
        Profile::CellGrid {
            level: k as i32,
            lo_index,
            shape,
            values,
        }
    };
    Ok(ScalarField::from_profile(
        id,
        n,
        profile,
        exterior,
        hull,
        FieldClass::PiecewiseConstant,
        ExactRule::JumpsOnly,
    ))
}

/// One row of the JSON catalog dump.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CatalogEntry {
    pub id: String,
    pub dim: usize,
    pub class_tag: FieldClass,
    pub support_box: Aabb,
    pub lipschitz_bound: Option<f64>,
    pub sup_norm: f64,
    pub breakpoints: Vec<f64>,
    pub exact_seminorms: Vec<SeminormValue>,
    /// Mass of the untruncated profile lost to the finite support box.
    pub tail_mass: Option<f64>,
}

pub fn catalog_entries() -> Vec<CatalogEntry> {
    corpus_catalog()
        .into_iter()
        .map(|u| {
            let exact_seminorms = [1.0, 2.0, 3.0, 4.0]
                .iter()
                .filter_map(|&p| exact_seminorm(&u, p))
                .collect();
            let tail_mass = match u.id() {
                "gauss1d" => {
                    let r = GAUSS1D_RADIUS;
                    // sqrt(pi) erfc(R), asymptotic series
                    Some((-r * r).exp() / r * (1.0 - 0.5 / (r * r) + 0.75 / r.powi(4)))
                }
                "gauss2d" => Some(PI * (-GAUSS2D_RADIUS * GAUSS2D_RADIUS).exp()),
                _ => None,
            };
            CatalogEntry {
                id: u.id().to_string(),
                dim: u.dim(),
                class_tag: u.class_tag(),
                support_box: u.support_box(),
                lipschitz_bound: u.lipschitz_bound(),
                sup_norm: u.sup_norm(),
                breakpoints: u.breakpoints(),
                exact_seminorms,
                tail_mass,
            }
        })
        .collect()
}

pub fn catalog_json() -> String {
    serde_json::to_string_pretty(&catalog_entries()).expect("catalog serializes")
}
