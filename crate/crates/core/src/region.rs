//! Planar regions counted against affine lattices.
//!
//! Coordinates are `(u, v)`; `u` is the horizontal axis along which the
//! triangles `T(s) = {0 ≤ u ≤ √s, -u ≤ v ≤ u}` open up.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl BoundingBox {
    pub fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        BoundingBox {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    /// Closed membership.
    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        p[0] >= self.x_min && p[0] <= self.x_max && p[1] >= self.y_min && p[1] <= self.y_max
    }

    pub fn hull(&self, other: &BoundingBox) -> BoundingBox {
        BoundingBox {
            x_min: self.x_min.min(other.x_min),
            x_max: self.x_max.max(other.x_max),
            y_min: self.y_min.min(other.y_min),
            y_max: self.y_max.max(other.y_max),
        }
    }

    pub fn area(&self) -> f64 {
        (self.x_max - self.x_min).max(0.0) * (self.y_max - self.y_min).max(0.0)
    }

    pub fn is_finite(&self) -> bool {
        self.x_min.is_finite()
            && self.x_max.is_finite()
            && self.y_min.is_finite()
            && self.y_max.is_finite()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Region {
    /// `T(s) = {0 ≤ u ≤ √s, -u ≤ v ≤ u}`, closed; area `s`.
    Triangle {
        s: f64,
    },
    /// `A_{ε,δ}(s) = {u ∈ (-ε, √s + ε], (v + δ)/u ∈ (-1, 1]}`.
    Approx {
        eps: f64,
        delta: f64,
        s: f64,
    },
    /// `∪_j T(b_j) \ T(a_j)` for disjoint `(a_j, b_j]`.
    TriangleDifferences(Vec<(f64, f64)>),
    /// Closed axis-aligned rectangle.
    Rectangle {
        x: (f64, f64),
        y: (f64, f64),
    },
    /// `{u_min ≤ u < u_max, -u ≤ v ≤ u}`, a slice of the cone `T(∞)`.
    ConeBand {
        u_min: f64,
        u_max: f64,
    },
    Union(Vec<Region>),
}

impl Region {
    pub fn triangle(s: f64) -> Self {
        Region::Triangle { s }
    }

    pub fn approx(eps: f64, delta: f64, s: f64) -> Self {
        Region::Approx { eps, delta, s }
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64)) -> Self {
        Region::Rectangle { x, y }
    }

    #[inline]
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let (u, v) = (p[0], p[1]);
        match self {
            Region::Triangle { s } => in_triangle(u, v, *s),
            Region::Approx { eps, delta, s } => {
                if !(u > -eps && u <= s.sqrt() + eps) {
                    return false;
                }
                // (v + δ)/u ∈ (-1, 1] without dividing; the inequalities flip
                // for negative u and u = 0 is never a member.
                let w = v + delta;
                if u > 0.0 {
                    -u < w && w <= u
                } else if u < 0.0 {
                    u <= w && w < -u
                } else {
                    false
                }
            }
            Region::TriangleDifferences(parts) => parts
                .iter()
                .any(|&(a, b)| in_triangle(u, v, b) && !in_triangle(u, v, a)),
            Region::Rectangle { x, y } => u >= x.0 && u <= x.1 && v >= y.0 && v <= y.1,
            Region::ConeBand { u_min, u_max } => u >= *u_min && u < *u_max && v.abs() <= u,
            Region::Union(parts) => parts.iter().any(|r| r.contains(p)),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        match self {
            Region::Triangle { s } => {
                let r = s.max(0.0).sqrt();
                BoundingBox::new(0.0, r, -r, r)
            }
            Region::Approx { eps, delta, s } => {
                let e = eps.abs();
                let r = s.max(0.0).sqrt() + e;
                let h = r + delta.abs();
                BoundingBox::new(-e, r, -h, h)
            }
            Region::TriangleDifferences(parts) => {
                let b = parts.iter().fold(0.0f64, |m, &(_, b)| m.max(b));
                Region::Triangle { s: b }.bounding_box()
            }
            Region::Rectangle { x, y } => BoundingBox::new(x.0, x.1, y.0, y.1),
            Region::ConeBand { u_min, u_max } => {
                BoundingBox::new(u_min.max(0.0), *u_max, -u_max, *u_max)
            }
            Region::Union(parts) => {
                let mut it = parts.iter().map(|r| r.bounding_box());
                match it.next() {
                    Some(first) => it.fold(first, |acc, b| acc.hull(&b)),
                    None => BoundingBox::new(0.0, 0.0, 0.0, 0.0),
                }
            }
        }
    }

    /// Lebesgue area. Unions are assumed disjoint.
    pub fn area(&self) -> f64 {
        match self {
            Region::Triangle { s } => s.max(0.0),
            Region::Approx { eps, s, .. } => {
                let r = s.max(0.0).sqrt();
                if *eps >= 0.0 {
                    (r + eps).powi(2) + eps * eps
                } else if r + 2.0 * eps > 0.0 {
                    (r + eps).powi(2) - eps * eps
                } else {
                    0.0
                }
            }
            Region::TriangleDifferences(parts) => {
                parts.iter().map(|&(a, b)| (b - a).max(0.0)).sum()
            }
            Region::Rectangle { x, y } => (x.1 - x.0).max(0.0) * (y.1 - y.0).max(0.0),
            Region::ConeBand { u_min, u_max } => {
                let lo = u_min.max(0.0);
                let hi = u_max.max(lo);
                hi * hi - lo * lo
            }
            Region::Union(parts) => parts.iter().map(Region::area).sum(),
        }
    }
}

#[inline]
fn in_triangle(u: f64, v: f64, s: f64) -> bool {
    // u ≤ √s tested as u² ≤ s would misplace negative u; u ≥ 0 is checked first.
    u >= 0.0 && u * u <= s && v.abs() <= u
}
