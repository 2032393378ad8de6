//! Closed convex sets `C_i` with the primitives the solvers need: Euclidean
//! projection, distance, support function and a distance subgradient.

use crate::error::{check_len, invalid, Result};
use crate::vector::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `{0}^dim`
    Zero {
        dim: usize,
    },
    /// `R_-^dim`
    NonPos {
        dim: usize,
    },
    /// Componentwise bounds; infinite entries are allowed.
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Point(Vec<f64>),
}

impl ConvexSet {
    pub fn zero(dim: usize) -> Self {
        ConvexSet::Zero { dim }
    }

    pub fn nonpos(dim: usize) -> Self {
        ConvexSet::NonPos { dim }
    }

    pub fn boxed(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        check_len("box bounds", lo.len(), hi.len())?;
        for (l, h) in lo.iter().zip(&hi) {
            if l.is_nan() || h.is_nan() || l > h || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                return Err(invalid("box", format!("empty interval [{l}, {h}]")));
            }
        }
        Ok(ConvexSet::Box { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(invalid("radius", format!("must be finite and >= 0, got {radius}")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(invalid("center", "must be finite"));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn point(c: Vec<f64>) -> Result<Self> {
        if c.iter().any(|v| !v.is_finite()) {
            return Err(invalid("point", "must be finite"));
        }
        Ok(ConvexSet::Point(c))
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Zero { dim } | ConvexSet::NonPos { dim } => *dim,
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Point(c) => c.len(),
        }
    }

    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("project", self.dim(), y.len())?;
        let mut out = vec![0.0; y.len()];
        self.project_into(y, &mut out);
        Ok(out)
    }

    pub fn project_into(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.dim());
        match self {
            ConvexSet::Zero { .. } => out.fill(0.0),
            ConvexSet::NonPos { .. } => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = v.min(0.0);
                }
            }
            ConvexSet::Box { lo, hi } => {
                for (((o, v), l), h) in out.iter_mut().zip(y).zip(lo).zip(hi) {
                    *o = v.max(*l).min(*h);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let d: f64 = y.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt();
                if d <= *radius {
                    out.copy_from_slice(y);
                } else {
                    let s = radius / d;
                    for ((o, v), c) in out.iter_mut().zip(y).zip(center) {
                        *o = c + s * (v - c);
                    }
                }
            }
            ConvexSet::Point(c) => out.copy_from_slice(c),
        }
    }

    /// `(I - P_C) y`, written into `out`.
    pub fn residual_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            // exact zeros in the interior; avoids `y - y` round-off
            ConvexSet::NonPos { .. } => {
                for (o, v) in out.iter_mut().zip(y) {
                    *o = v.max(0.0);
                }
            }
            ConvexSet::Zero { .. } => out.copy_from_slice(y),
            ConvexSet::Box { lo, hi } => {
                for (((o, v), l), h) in out.iter_mut().zip(y).zip(lo).zip(hi) {
                    *o = if v > h {
                        v - h
                    } else if v < l {
                        v - l
                    } else {
                        0.0
                    };
                }
            }
            _ => {
                self.project_into(y, out);
                for (o, v) in out.iter_mut().zip(y) {
                    *o = v - *o;
                }
            }
        }
    }

    pub fn distance(&self, y: &[f64]) -> Result<f64> {
        check_len("distance", self.dim(), y.len())?;
        Ok(self.distance_unchecked(y))
    }

    pub fn distance_unchecked(&self, y: &[f64]) -> f64 {
        match self {
            ConvexSet::Zero { .. } => norm2(y),
            ConvexSet::NonPos { .. } => y.iter().map(|v| v.max(0.0).powi(2)).sum::<f64>().sqrt(),
            ConvexSet::Ball { center, radius } => {
                let d = y.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum::<f64>().sqrt();
                (d - radius).max(0.0)
            }
            _ => {
                let mut r = vec![0.0; y.len()];
                self.residual_into(y, &mut r);
                norm2(&r)
            }
        }
    }

    /// `sup_{c in C} <u, c>`, possibly `+inf`. Uses `inf * 0 = 0`.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        check_len("support", self.dim(), u.len())?;
        Ok(self.support_unchecked(u))
    }

    pub fn support_unchecked(&self, u: &[f64]) -> f64 {
        match self {
            ConvexSet::Zero { .. } => 0.0,
            ConvexSet::NonPos { .. } => {
                if u.iter().all(|v| *v >= 0.0) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            ConvexSet::Box { lo, hi } => {
                let mut s = 0.0;
                for ((v, l), h) in u.iter().zip(lo).zip(hi) {
                    if *v > 0.0 {
                        s += h * v;
                    } else if *v < 0.0 {
                        s += l * v;
                    }
                }
                s
            }
            ConvexSet::Ball { center, radius } => dot(u, center) + radius * norm2(u),
            ConvexSet::Point(c) => dot(u, c),
        }
    }

    /// Element of `∂ dist(y | C)`: the unit residual direction outside `C`,
    /// and `0` (always a valid choice) inside.
    pub fn distance_subgradient(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len("distance_subgradient", self.dim(), y.len())?;
        let mut r = vec![0.0; y.len()];
        self.residual_into(y, &mut r);
        let d = norm2(&r);
        if d > 0.0 {
            for v in r.iter_mut() {
                *v /= d;
            }
        } else {
            r.fill(0.0);
        }
        Ok(r)
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        y.len() == self.dim() && self.distance_unchecked(y) <= tol
    }

    /// Whether `support(u) < inf`.
    pub fn in_support_domain(&self, u: &[f64]) -> bool {
        self.support_unchecked(u).is_finite()
    }
}
