use serde::{Deserialize, Serialize};

/// Axis-aligned box `[lo, hi]` in `R^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Aabb {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box corners must share a dimension");
        Self { lo, hi }
    }

    pub fn interval(lo: f64, hi: f64) -> Self {
        Self::new(vec![lo], vec![hi])
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l).max(0.0))
            .product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    /// Closed-box membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l && v <= h)
    }

    /// Open-box membership.
    pub fn contains_open(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v > l && v < h)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| h <= l)
    }

    pub fn intersect(&self, other: &Aabb) -> Aabb {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.max(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.min(*b)).collect();
        Aabb { lo, hi }
    }

    /// Smallest box containing both.
    pub fn hull(&self, other: &Aabb) -> Aabb {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| a.min(*b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| a.max(*b)).collect();
        Aabb { lo, hi }
    }

    pub fn padded(&self, pad: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().map(|v| v - pad).collect(),
            hi: self.hi.iter().map(|v| v + pad).collect(),
        }
    }

    /// Image of the box under `x -> shift + scale * x`, `scale > 0`.
    pub fn mapped(&self, shift: &[f64], scale: f64) -> Aabb {
        Aabb {
            lo: self.lo.iter().zip(shift).map(|(v, s)| s + scale * v).collect(),
            hi: self.hi.iter().zip(shift).map(|(v, s)| s + scale * v).collect(),
        }
    }
}
