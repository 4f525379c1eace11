//! Test scalar fields `u: R^N -> R` with the metadata the engines rely on:
//! support box, Lipschitz bound, breakpoints, jump interfaces and gradients.
//!
//! A field is a canonical profile composed with an amplitude/affine/clamp
//! map, so rescaled, translated, dilated and truncated copies keep exact
//! metadata without re-deriving it.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::geometry::Aabb;

const MAX_DIM: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldClass {
    Smooth,
    #[serde(rename = "piecewise-smooth-1d")]
    PiecewiseSmooth1d,
    PiecewiseConstant,
}

impl FieldClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FieldClass::Smooth => "smooth",
            FieldClass::PiecewiseSmooth1d => "piecewise-smooth-1d",
            FieldClass::PiecewiseConstant => "piecewise-constant",
        }
    }
}

/// A flat discontinuity of the field. In 1-D `location` is the breakpoint
/// and `measure` is 1; in higher dimension `measure` is the face area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interface {
    pub location: Option<f64>,
    pub measure: f64,
    /// `u(right) - u(left)` across the interface.
    pub jump: f64,
}

#[derive(Debug, Clone)]
pub(crate) enum Profile {
    /// `max(exp(-|x|^2) - exp(-R^2), 0)`: continuous at the cutoff radius.
    Gaussian { radius: f64 },
    /// Unit-height tent on `(a, b)`.
    Tent { a: f64, b: f64 },
    /// `values[i]` on `[edges[i], edges[i+1])`.
    Piecewise1d { edges: Vec<f64>, values: Vec<f64> },
    /// Indicator of the open box.
    BoxIndicator { lo: Vec<f64>, hi: Vec<f64> },
    Constant(f64),
    /// Dyadic cells of side `2^-level`; cell `lo_index + m` carries `values[flat(m)]`.
    CellGrid {
        level: i32,
        lo_index: Vec<i64>,
        shape: Vec<usize>,
        values: Vec<f64>,
    },
}

/// Closed-form seminorm rule of the canonical profile.
#[derive(Debug, Clone)]
pub(crate) enum ExactRule {
    /// Finite values for the listed exponents only.
    Table(Vec<(f64, f64)>),
    /// `|grad u| = slope` on a set of measure `length`.
    ConstantSlope { slope: f64, length: f64 },
    /// Pure jump field: total variation for `p = 1`, infinite for `p > 1`.
    JumpsOnly,
    Zero,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct AffineMap {
    pub amp: f64,
    pub shift: Vec<f64>,
    pub scale: f64,
    pub clamp: Option<f64>,
}

impl AffineMap {
    fn identity(dim: usize) -> Self {
        Self {
            amp: 1.0,
            shift: vec![0.0; dim],
            scale: 1.0,
            clamp: None,
        }
    }

    #[inline]
    fn out(&self, v: f64) -> f64 {
        let w = self.amp * v;
        match self.clamp {
            Some(a) => w.clamp(-a, a),
            None => w,
        }
    }
}

/// A test function together with its structural metadata. Immutable once
/// built; clones share the profile data.
#[derive(Debug, Clone)]
pub struct ScalarField {
    id: String,
    dim: usize,
    profile: Arc<Profile>,
    exterior: f64,
    exact: ExactRule,
    canon_support: Aabb,
    canon_lipschitz: Option<f64>,
    canon_sup: f64,
    class: FieldClass,
    map: AffineMap,
}

impl ScalarField {
    pub(crate) fn from_profile(
        id: impl Into<String>,
        dim: usize,
        profile: Profile,
        exterior: f64,
        support: Aabb,
        class: FieldClass,
        exact: ExactRule,
    ) -> Self {
        assert!((1..=MAX_DIM).contains(&dim), "dimension {dim} unsupported");
        assert_eq!(support.dim(), dim);
        let (lip, sup) = profile_bounds(&profile, dim, exterior);
        Self {
            id: id.into(),
            dim,
            profile: Arc::new(profile),
            exterior,
            exact,
            canon_support: support,
            canon_lipschitz: lip,
            canon_sup: sup,
            class,
            map: AffineMap::identity(dim),
        }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_tag(&self) -> FieldClass {
        if self.map.clamp.is_some_and(|a| a < self.raw_sup()) && self.class == FieldClass::Smooth && self.dim == 1 {
            return FieldClass::PiecewiseSmooth1d;
        }
        self.class
    }

    /// Box outside which `u` equals [`Self::exterior_value`] (zero for every
    /// compactly supported field).
    pub fn support_box(&self) -> Aabb {
        self.canon_support.mapped(&self.map.shift, self.map.scale)
    }

    /// Value taken outside the support box; only the constant field uses a
    /// nonzero exterior.
    pub fn exterior_value(&self) -> f64 {
        self.map.out(self.exterior)
    }

    pub fn lipschitz_bound(&self) -> Option<f64> {
        self.canon_lipschitz
            .map(|l| self.map.amp.abs() * l / self.map.scale)
    }

    fn raw_sup(&self) -> f64 {
        self.map.amp.abs() * self.canon_sup
    }

    pub fn sup_norm(&self) -> f64 {
        match self.map.clamp {
            Some(a) => self.raw_sup().min(a),
            None => self.raw_sup(),
        }
    }

    /// Ordered breakpoints (jumps, kinks, support edges) of a 1-D field.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.dim != 1 {
            return Vec::new();
        }
        let canon: Vec<f64> = match &*self.profile {
            Profile::Gaussian { radius } => vec![-radius, *radius],
            Profile::Tent { a, b } => vec![*a, 0.5 * (a + b), *b],
            Profile::Piecewise1d { edges, .. } => edges.clone(),
            Profile::BoxIndicator { lo, hi } => vec![lo[0], hi[0]],
            Profile::Constant(_) => Vec::new(),
            Profile::CellGrid { .. } => Vec::new(),
        };
        canon
            .into_iter()
            .map(|b| self.map.shift[0] + self.map.scale * b)
            .collect()
    }

    #[inline]
    fn canon_eval(&self, xc: &[f64]) -> f64 {
        match &*self.profile {
            Profile::Gaussian { radius } => {
                let r2: f64 = xc.iter().map(|v| v * v).sum();
                if r2 >= radius * radius {
                    0.0
                } else {
                    (-r2).exp() - (-radius * radius).exp()
                }
            }
            Profile::Tent { a, b } => {
                let x = xc[0];
                if x <= *a || x >= *b {
                    self.exterior
                } else {
                    1.0 - (2.0 * (x - a) / (b - a) - 1.0).abs()
                }
            }
            Profile::Piecewise1d { edges, values } => {
                let x = xc[0];
                let n = values.len();
                if x < edges[0] || x >= edges[n] {
                    return self.exterior;
                }
                // edges[i] <= x < edges[i+1]
                let i = edges.partition_point(|&e| e <= x) - 1;
                values[i.min(n - 1)]
            }
            Profile::BoxIndicator { lo, hi } => {
                let inside = xc
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(&v, (&l, &h))| v > l && v < h);
                if inside {
                    1.0
                } else {
                    self.exterior
                }
            }
            Profile::Constant(c) => *c,
            Profile::CellGrid {
                level,
                lo_index,
                shape,
                values,
            } => {
                let s = 2f64.powi(*level);
                let mut flat = 0usize;
                for d in 0..xc.len() {
                    let idx = (xc[d] * s).floor() as i64 - lo_index[d];
                    if idx < 0 || idx as usize >= shape[d] {
                        return self.exterior;
                    }
                    flat = flat * shape[d] + idx as usize;
                }
                values[flat]
            }
        }
    }

    /// `u(x)` for `x` in `R^N`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut buf = [0.0f64; MAX_DIM];
        for (d, v) in x.iter().enumerate() {
            buf[d] = (v - self.map.shift[d]) / self.map.scale;
        }
        self.map.out(self.canon_eval(&buf[..self.dim]))
    }

    /// Fast path for 1-D fields.
    #[inline]
    pub fn eval1(&self, x: f64) -> f64 {
        let xc = (x - self.map.shift[0]) / self.map.scale;
        self.map.out(self.canon_eval(&[xc]))
    }

    /// Whether a pointwise (a.e.) gradient is available.
    pub fn has_gradient(&self) -> bool {
        true
    }

    /// Writes `grad u(x)` into `out` (defined almost everywhere).
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let mut buf = [0.0f64; MAX_DIM];
        for (d, v) in x.iter().enumerate() {
            buf[d] = (v - self.map.shift[d]) / self.map.scale;
        }
        let xc = &buf[..self.dim];
        if let Some(a) = self.map.clamp {
            if (self.map.amp * self.canon_eval(xc)).abs() > a {
                out.iter_mut().for_each(|g| *g = 0.0);
                return;
            }
        }
        let factor = self.map.amp / self.map.scale;
        match &*self.profile {
            Profile::Gaussian { radius } => {
                let r2: f64 = xc.iter().map(|v| v * v).sum();
                let e = if r2 >= radius * radius { 0.0 } else { (-r2).exp() };
                for d in 0..self.dim {
                    out[d] = factor * (-2.0 * xc[d] * e);
                }
            }
            Profile::Tent { a, b } => {
                let x = xc[0];
                let s = 2.0 / (b - a);
                out[0] = if x <= *a || x >= *b {
                    0.0
                } else if x < 0.5 * (a + b) {
                    factor * s
                } else {
                    -factor * s
                };
            }
            _ => out.iter_mut().for_each(|g| *g = 0.0),
        }
    }

    /// `u'(x)` for 1-D fields.
    #[inline]
    pub fn deriv1(&self, x: f64) -> f64 {
        let mut g = [0.0];
        self.gradient(&[x], &mut g);
        g[0]
    }

    /// Flat discontinuities with their jump sizes (zero jumps omitted).
    pub fn interfaces(&self) -> Vec<Interface> {
        let area_scale = self.map.scale.powi(self.dim as i32 - 1);
        let mut out = Vec::new();
        let mut push = |location: Option<f64>, measure: f64, left: f64, right: f64| {
            let jump = self.map.out(right) - self.map.out(left);
            if jump != 0.0 {
                out.push(Interface {
                    location: location.map(|b| self.map.shift[0] + self.map.scale * b),
                    measure: measure * area_scale,
                    jump,
                });
            }
        };
        let ext = self.exterior;
        match &*self.profile {
            Profile::Piecewise1d { edges, values } => {
                for (j, &e) in edges.iter().enumerate() {
                    let left = if j == 0 { ext } else { values[j - 1] };
                    let right = values.get(j).copied().unwrap_or(ext);
                    push(Some(e), 1.0, left, right);
                }
            }
            Profile::BoxIndicator { lo, hi } => {
                let n = lo.len();
                for d in 0..n {
                    let face: f64 = (0..n).filter(|&k| k != d).map(|k| hi[k] - lo[k]).product();
                    let (l0, h0) = if n == 1 { (Some(lo[0]), Some(hi[0])) } else { (None, None) };
                    push(l0, face, ext, 1.0);
                    push(h0, face, 1.0, ext);
                }
            }
            Profile::CellGrid {
                level,
                shape,
                values,
                ..
            } => {
                let n = shape.len();
                let side = 2f64.powi(-level);
                let face = side.powi(n as i32 - 1);
                let total: usize = shape.iter().product();
                let mut strides = vec![1usize; n];
                for d in (0..n.saturating_sub(1)).rev() {
                    strides[d] = strides[d + 1] * shape[d + 1];
                }
                for flat in 0..total {
                    let v = values[flat];
                    for d in 0..n {
                        let idx = (flat / strides[d]) % shape[d];
                        let lower = if idx == 0 { ext } else { values[flat - strides[d]] };
                        push(None, face, lower, v);
                        if idx + 1 == shape[d] {
                            push(None, face, v, ext);
                        }
                    }
                }
            }
            _ => {}
        }
        out
    }

    pub fn has_jumps(&self) -> bool {
        !self.interfaces().is_empty()
    }

    /// True when `u(x) - u(y)` vanishes identically.
    pub fn is_constant(&self) -> bool {
        let ext = self.map.out(self.exterior);
        match &*self.profile {
            Profile::Constant(_) => true,
            Profile::Piecewise1d { values, .. } | Profile::CellGrid { values, .. } => {
                values.iter().all(|&v| self.map.out(v) == ext)
            }
            Profile::BoxIndicator { .. } => self.map.out(1.0) == ext,
            _ => self.map.amp == 0.0,
        }
    }

    pub(crate) fn exact_rule(&self) -> (&ExactRule, f64, f64, bool) {
        let clamp_active = self.map.clamp.is_some_and(|a| a < self.raw_sup());
        (&self.exact, self.map.amp, self.map.scale, clamp_active)
    }

    /// `c * u`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut f = self.clone();
        f.map.amp *= c;
        if let Some(a) = f.map.clamp.as_mut() {
            *a *= c.abs();
        }
        f.id = format!("{}*{}", c, self.id);
        f
    }

    /// `u(x - s)`.
    pub fn shifted(&self, s: &[f64]) -> Self {
        assert_eq!(s.len(), self.dim);
        let mut f = self.clone();
        for (d, v) in s.iter().enumerate() {
            f.map.shift[d] += v;
        }
        f.id = format!("{}+shift", self.id);
        f
    }

    /// `u(x / r)`, `r > 0`.
    pub fn dilated(&self, r: f64) -> Self {
        assert!(r > 0.0, "dilation factor must be positive");
        let mut f = self.clone();
        f.map.scale *= r;
        for v in f.map.shift.iter_mut() {
            *v *= r;
        }
        f.id = format!("{}(x/{})", self.id, r);
        f
    }

    /// `min(max(u, -a), a)`.
    pub fn clamped(&self, a: f64) -> Self {
        assert!(a > 0.0, "truncation level must be positive");
        let mut f = self.clone();
        f.map.clamp = Some(f.map.clamp.map_or(a, |b| b.min(a)));
        f.id = format!("clamp({},{})", self.id, a);
        f
    }
}

fn profile_bounds(profile: &Profile, _dim: usize, exterior: f64) -> (Option<f64>, f64) {
    match profile {
        Profile::Gaussian { radius } => (
            Some(2f64.sqrt() * (-0.5f64).exp()),
            1.0 - (-radius * radius).exp(),
        ),
        Profile::Tent { a, b } => (Some(2.0 / (b - a)), 1.0f64.max(exterior.abs())),
        Profile::Piecewise1d { values, .. } | Profile::CellGrid { values, .. } => {
            let sup = values.iter().fold(exterior.abs(), |m, v| m.max(v.abs()));
            let flat = values.iter().all(|&v| v == exterior);
            (flat.then_some(0.0), sup)
        }
        Profile::BoxIndicator { .. } => (None, 1.0f64.max(exterior.abs())),
        Profile::Constant(c) => (Some(0.0), c.abs()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::corpus_field;

    #[test]
    fn step_interfaces_are_unit_jumps() {
        let u = corpus_field("step1d").unwrap();
        let j = u.interfaces();
        assert_eq!(j.len(), 2);
        assert_eq!(j[0].location, Some(0.0));
        assert_eq!(j[0].jump, 1.0);
        assert_eq!(j[1].jump, -1.0);
    }

    #[test]
    fn cube_has_four_unit_faces() {
        let u = corpus_field("cube2d").unwrap();
        let j = u.interfaces();
        assert_eq!(j.len(), 4);
        let tv: f64 = j.iter().map(|i| i.jump.abs() * i.measure).sum();
        assert_eq!(tv, 4.0);
    }

    #[test]
    fn transforms_move_metadata() {
        let u = corpus_field("step1d").unwrap();
        let v = u.scaled(2.0).dilated(3.0).shifted(&[1.0]);
        assert_eq!(v.breakpoints(), vec![1.0, 4.0]);
        assert_eq!(v.eval1(2.0), 2.0);
        assert_eq!(v.eval1(0.5), 0.0);
        let s = v.support_box();
        assert_eq!((s.lo[0], s.hi[0]), (1.0, 4.0));
        assert_eq!(v.interfaces()[0].jump, 2.0);
    }

    #[test]
    fn clamp_limits_values_and_gradient() {
        let u = corpus_field("gauss1d").unwrap().clamped(0.5);
        assert!((u.eval1(0.0) - 0.5).abs() < 1e-15);
        assert_eq!(u.deriv1(0.1), 0.0);
        assert!(u.deriv1(1.5).abs() > 0.0);
        assert_eq!(u.class_tag(), FieldClass::PiecewiseSmooth1d);
    }
}
