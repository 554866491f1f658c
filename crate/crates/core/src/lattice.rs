//! Affine unimodular lattices `ℤ²B + τ`, the points of `X = Γ\G`.
//!
//! Basis vectors are the rows of `B`. Everything that inspects lattice points
//! goes through [`AffineLattice::for_each_point`], which Lagrange–Gauss
//! reduces the basis first so that the integer loops stay proportional to the
//! box even for the extremely sheared lattices met along expanded horocycles.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupElement, DET_TOLERANCE};
use crate::process::{Parametrization, ProcessSample};
use crate::region::{BoundingBox, Region};

/// Default cap on the number of candidate lattice points visited per query.
pub const DEFAULT_POINT_CAP: u64 = 100_000_000;

const SINGULAR_DET: f64 = 1e-12;
const SAMPLER_MAX_TRIES: usize = 1000;

type Vec2 = [f64; 2];

#[inline]
fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn cross(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn rotate(v: Vec2, sin: f64, cos: f64) -> Vec2 {
    [v[0] * cos - v[1] * sin, v[0] * sin + v[1] * cos]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AffineLattice {
    basis: [Vec2; 2],
    tau: Vec2,
}

/// A lattice point together with its integer coordinates `m`, so that
/// `point = m·B + τ` for the basis the lattice was built with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticePoint {
    pub point: Vec2,
    pub m: [i64; 2],
}

/// A Gauss-reduced basis `R = U·B` with the unimodular integer `U` kept so
/// that coordinates can be reported against the original basis.
#[derive(Debug, Clone, Copy)]
struct Reduced {
    b1: Vec2,
    b2: Vec2,
    transform: [[i64; 2]; 2],
}

impl AffineLattice {
    pub fn new(basis: [Vec2; 2], tau: Vec2) -> Result<Self> {
        let finite = basis
            .iter()
            .flatten()
            .chain(tau.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Domain("lattice has non-finite entries".into()));
        }
        let det = cross(basis[0], basis[1]);
        if det.abs() < SINGULAR_DET {
            return Err(Error::SingularLattice { det });
        }
        if (det - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::Domain(format!("lattice covolume {det} is not 1")));
        }
        Ok(AffineLattice { basis, tau })
    }

    /// The square lattice `ℤ²`.
    pub fn integer() -> Self {
        AffineLattice {
            basis: [[1.0, 0.0], [0.0, 1.0]],
            tau: [0.0, 0.0],
        }
    }

    /// `(M, x) ↦ ℤ²M + x`, without any reduction.
    pub fn from_group_element(g: &GroupElement) -> Self {
        AffineLattice {
            basis: [[g.a, g.b], [g.c, g.d]],
            tau: [g.x1, g.x2],
        }
    }

    pub fn basis(&self) -> [Vec2; 2] {
        self.basis
    }

    pub fn tau(&self) -> Vec2 {
        self.tau
    }

    pub fn det(&self) -> f64 {
        cross(self.basis[0], self.basis[1])
    }

    /// `m·B + τ`.
    pub fn point(&self, m: [i64; 2]) -> Vec2 {
        let (m1, m2) = (m[0] as f64, m[1] as f64);
        [
            m1 * self.basis[0][0] + m2 * self.basis[1][0] + self.tau[0],
            m1 * self.basis[0][1] + m2 * self.basis[1][1] + self.tau[1],
        ]
    }

    fn reduce(&self) -> Result<Reduced> {
        gauss_reduce(self.basis[0], self.basis[1])
    }

    /// Visits every lattice point in the closed box exactly once.
    ///
    /// Fails with a capacity error when the integer search rectangle would
    /// exceed `cap` candidates.
    pub fn for_each_point<F>(&self, bbox: &BoundingBox, cap: u64, mut visit: F) -> Result<()>
    where
        F: FnMut(Vec2, [i64; 2]),
    {
        if !bbox.is_finite() {
            return Err(Error::Domain("enumeration box must be finite".into()));
        }
        if bbox.x_min > bbox.x_max || bbox.y_min > bbox.y_max {
            return Ok(());
        }
        let red = self.reduce()?;
        let (b1, b2, tau) = (red.b1, red.b2, self.tau);
        let det = cross(b1, b2);

        // Pull the box corners back to coordinates w.r.t. the reduced basis.
        let corners = [
            [bbox.x_min, bbox.y_min],
            [bbox.x_min, bbox.y_max],
            [bbox.x_max, bbox.y_min],
            [bbox.x_max, bbox.y_max],
        ];
        let (mut lo1, mut hi1, mut lo2, mut hi2) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for c in corners {
            let w = [c[0] - tau[0], c[1] - tau[1]];
            let m1 = cross(w, b2) / det;
            let m2 = cross(b1, w) / det;
            lo1 = lo1.min(m1);
            hi1 = hi1.max(m1);
            lo2 = lo2.min(m2);
            hi2 = hi2.max(m2);
        }
        let m1_lo = (lo1 - 1e-9).ceil();
        let m1_hi = (hi1 + 1e-9).floor();
        if m1_lo > m1_hi {
            return Ok(());
        }
        let rows = m1_hi - m1_lo + 1.0;
        let cols = (hi2 - lo2 + 2.0).max(1.0);
        let requested = rows * cols;
        if !requested.is_finite()
            || requested > cap as f64
            || m1_lo.abs() > 1e15
            || m1_hi.abs() > 1e15
        {
            return Err(Error::Capacity {
                what: "lattice enumeration",
                requested: if requested.is_finite() {
                    requested as u64
                } else {
                    u64::MAX
                },
                cap,
            });
        }

        let t = red.transform;
        for m1 in (m1_lo as i64)..=(m1_hi as i64) {
            let base = [m1 as f64 * b1[0] + tau[0], m1 as f64 * b1[1] + tau[1]];
            // Intersect the line base + t·b2 with the box.
            let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
            for axis in 0..2 {
                let (lo, hi) = if axis == 0 {
                    (bbox.x_min, bbox.x_max)
                } else {
                    (bbox.y_min, bbox.y_max)
                };
                let dir = b2[axis];
                if dir == 0.0 {
                    if base[axis] < lo || base[axis] > hi {
                        t_lo = f64::INFINITY;
                    }
                } else {
                    let a = (lo - base[axis]) / dir;
                    let b = (hi - base[axis]) / dir;
                    t_lo = t_lo.max(a.min(b));
                    t_hi = t_hi.min(a.max(b));
                }
            }
            if !(t_lo <= t_hi + 2e-9) {
                continue;
            }
            let first = (t_lo - 1e-9).ceil() as i64;
            let last = (t_hi + 1e-9).floor() as i64;
            for m2 in first..=last {
                let p = [base[0] + m2 as f64 * b2[0], base[1] + m2 as f64 * b2[1]];
                if bbox.contains(p) {
                    // Original coordinates: m_orig = m_red · U.
                    let m = [m1 * t[0][0] + m2 * t[1][0], m1 * t[0][1] + m2 * t[1][1]];
                    visit(p, m);
                }
            }
        }
        Ok(())
    }

    /// All lattice points in the closed box.
    pub fn enumerate_points(&self, bbox: &BoundingBox) -> Result<Vec<LatticePoint>> {
        self.enumerate_points_capped(bbox, DEFAULT_POINT_CAP)
    }

    pub fn enumerate_points_capped(
        &self,
        bbox: &BoundingBox,
        cap: u64,
    ) -> Result<Vec<LatticePoint>> {
        let mut out = Vec::new();
        self.for_each_point(bbox, cap, |point, m| out.push(LatticePoint { point, m }))?;
        Ok(out)
    }

    /// `|(ℤ²B + τ) ∩ R|`.
    pub fn count_in_region(&self, region: &Region) -> Result<u64> {
        self.count_in_region_capped(region, DEFAULT_POINT_CAP)
    }

    pub fn count_in_region_capped(&self, region: &Region, cap: u64) -> Result<u64> {
        let mut n = 0u64;
        self.for_each_point(&padded(region.bounding_box()), cap, |p, _| {
            if region.contains(p) {
                n += 1;
            }
        })?;
        Ok(n)
    }

    /// Counts in several regions from a single enumeration pass.
    pub fn count_in_regions(&self, regions: &[Region]) -> Result<Vec<u64>> {
        let mut counts = vec![0u64; regions.len()];
        let Some(first) = regions.first() else {
            return Ok(counts);
        };
        let bbox = regions
            .iter()
            .skip(1)
            .fold(first.bounding_box(), |acc, r| acc.hull(&r.bounding_box()));
        self.for_each_point(&padded(bbox), DEFAULT_POINT_CAP, |p, _| {
            for (c, r) in counts.iter_mut().zip(regions) {
                if r.contains(p) {
                    *c += 1;
                }
            }
        })?;
        Ok(counts)
    }

    /// Atoms of the limiting process up to `horizon` in the root
    /// parametrization: one atom at `u` for every lattice point `(u, v)` with
    /// `0 ≤ u ≤ horizon` and `|v| ≤ u`. The number of atoms up to `√s` is the
    /// lattice count in `T(s)`.
    pub fn jump_points(&self, horizon: f64) -> Result<ProcessSample> {
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::Domain(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        let cone = Region::triangle(horizon * horizon);
        let mut atoms = Vec::new();
        self.for_each_point(&padded(cone.bounding_box()), DEFAULT_POINT_CAP, |p, _| {
            if p[0] >= 0.0 && p[0] <= horizon && p[1].abs() <= p[0] {
                atoms.push(p[0]);
            }
        })?;
        ProcessSample::new(atoms, Parametrization::RootS)
    }
}

/// Enumeration boxes are widened slightly so that points sitting on a
/// region's boundary are still offered to the exact membership test.
fn padded(b: BoundingBox) -> BoundingBox {
    let pad = |v: f64| 1e-9 * (1.0 + v.abs());
    BoundingBox::new(
        b.x_min - pad(b.x_min),
        b.x_max + pad(b.x_max),
        b.y_min - pad(b.y_min),
        b.y_max + pad(b.y_max),
    )
}

/// Lagrange–Gauss reduction of a planar basis: on return `|b1| ≤ |b2|` and
/// `|⟨b1, b2⟩| ≤ |b1|²/2` (up to rounding).
fn gauss_reduce(mut b1: Vec2, mut b2: Vec2) -> Result<Reduced> {
    let det = cross(b1, b2);
    if !(det.abs() >= SINGULAR_DET) {
        return Err(Error::SingularLattice { det });
    }
    let mut u = [[1i64, 0], [0, 1]];
    if dot(b1, b1) > dot(b2, b2) {
        std::mem::swap(&mut b1, &mut b2);
        u.swap(0, 1);
    }
    for _ in 0..10_000 {
        let n1 = dot(b1, b1);
        let mu = (dot(b1, b2) / n1).round();
        if mu != 0.0 {
            if !(mu.abs() < 9.0e15) {
                return Err(Error::ArithmeticOverflow(
                    "reduction coefficient too large".into(),
                ));
            }
            b2 = [b2[0] - mu * b1[0], b2[1] - mu * b1[1]];
            let k = mu as i64;
            u[1] = [u[1][0] - k * u[0][0], u[1][1] - k * u[0][1]];
        }
        if dot(b2, b2) >= n1 {
            return Ok(Reduced {
                b1,
                b2,
                transform: u,
            });
        }
        std::mem::swap(&mut b1, &mut b2);
        u.swap(0, 1);
    }
    Err(Error::ArithmeticOverflow(
        "Gauss reduction did not terminate".into(),
    ))
}

/// A point of `X` in fundamental-domain coordinates: `z = x + iy` in the
/// modular fundamental domain, a rotation angle and a torus fibre coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarSample {
    pub lattice: AffineLattice,
    pub z: (f64, f64),
    pub theta: f64,
    pub w: Vec2,
}

impl HaarSample {
    /// Builds the lattice with basis rows `R(θ)·(1,0)/√y` and `R(θ)·(x,y)/√y`
    /// and translation `w·B`.
    pub fn from_coordinates(z: (f64, f64), theta: f64, w: Vec2) -> Result<Self> {
        let (x, y) = z;
        if !(y > 0.0) || !x.is_finite() || !y.is_finite() || !theta.is_finite() {
            return Err(Error::Domain(format!(
                "invalid coordinates z = {z:?}, θ = {theta}"
            )));
        }
        let r = 1.0 / y.sqrt();
        let (sin, cos) = theta.sin_cos();
        let b1 = rotate([r, 0.0], sin, cos);
        let b2 = rotate([x * r, y * r], sin, cos);
        let tau = [w[0] * b1[0] + w[1] * b2[0], w[0] * b1[1] + w[1] * b2[1]];
        Ok(HaarSample {
            lattice: AffineLattice {
                basis: [b1, b2],
                tau,
            },
            z,
            theta,
            w,
        })
    }

    pub fn in_fundamental_domain(&self) -> bool {
        let (x, y) = self.z;
        x.abs() <= 0.5 + 1e-12 && x * x + y * y >= 1.0 - 1e-12
    }
}

/// Draws a lattice from the Haar probability measure on `X`.
///
/// `z` has density proportional to `dx dy / y²` on the fundamental domain,
/// proposed on the strip `|x| ≤ 1/2, y ≥ √3/2` and rejected below the unit
/// circle; `θ` and `w` are uniform.
pub fn sample_haar<R: Rng + ?Sized>(rng: &mut R) -> Result<HaarSample> {
    let (z, _) = sample_fundamental_domain(rng)?;
    let theta = rng.random::<f64>() * TAU;
    let w = [rng.random::<f64>(), rng.random::<f64>()];
    HaarSample::from_coordinates(z, theta, w)
}

/// Returns the accepted point and the number of proposals it took.
pub fn sample_fundamental_domain<R: Rng + ?Sized>(rng: &mut R) -> Result<((f64, f64), usize)> {
    let y_min = 3f64.sqrt() / 2.0;
    for tries in 1..=SAMPLER_MAX_TRIES {
        let x = rng.random::<f64>() - 0.5;
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        let y = y_min / u;
        if x * x + y * y >= 1.0 {
            return Ok(((x, y), tries));
        }
    }
    Err(Error::Sampler(format!(
        "rejection sampler failed {SAMPLER_MAX_TRIES} times in a row"
    )))
}

/// Maps a lattice to its fundamental-domain representative.
///
/// Conventions: `x ∈ [-1/2, 1/2)`, on the arc `|z| = 1` only `x ≤ 0` is kept,
/// `θ ∈ [0, π)` (and `[0, π/2)`, `[0, π/3)` at the elliptic points `i`, `ρ`),
/// `w ∈ [0, 1)²`.
pub fn canonicalize(lattice: &AffineLattice) -> Result<HaarSample> {
    const TOL: f64 = 1e-10;
    let red = lattice.reduce()?;
    let (mut b1, mut b2) = (red.b1, red.b2);
    if cross(b1, b2) < 0.0 {
        b2 = [-b2[0], -b2[1]];
    }
    let coords = |b1: Vec2, b2: Vec2| {
        let n1 = dot(b1, b1);
        (dot(b1, b2) / n1, cross(b1, b2) / n1)
    };

    let (x, _) = coords(b1, b2);
    if x >= 0.5 - TOL {
        b2 = [b2[0] - b1[0], b2[1] - b1[1]];
    } else if x < -0.5 - TOL {
        b2 = [b2[0] + b1[0], b2[1] + b1[1]];
    }
    let (x, y) = coords(b1, b2);
    if (x * x + y * y - 1.0).abs() <= TOL && x > TOL {
        // z ↦ -1/z on the arc, i.e. swap the two shortest vectors.
        (b1, b2) = (b2, [-b1[0], -b1[1]]);
    }

    let angle = |b: Vec2| {
        let a = b[1].atan2(b[0]);
        if a < 0.0 {
            a + TAU
        } else {
            a
        }
    };
    if angle(b1) >= PI - 1e-15 {
        b1 = [-b1[0], -b1[1]];
        b2 = [-b2[0], -b2[1]];
    }

    let (x, y) = coords(b1, b2);
    let at_i = x.abs() <= TOL && (y - 1.0).abs() <= TOL;
    let at_rho = (x + 0.5).abs() <= TOL && (y - 3f64.sqrt() / 2.0).abs() <= TOL;
    if at_i {
        while angle(b1) >= FRAC_PI_2 - 1e-15 && angle(b1) < PI {
            (b1, b2) = ([-b2[0], -b2[1]], b1);
        }
    } else if at_rho {
        while angle(b1) >= FRAC_PI_3 - 1e-15 && angle(b1) < PI {
            (b1, b2) = ([-b2[0], -b2[1]], [b1[0] + b2[0], b1[1] + b2[1]]);
        }
    }

    let (x, y) = coords(b1, b2);
    let mut theta = angle(b1);
    if theta >= PI {
        theta -= PI;
    }
    let det = cross(b1, b2);
    let t = lattice.tau;
    let frac = |v: f64| {
        let f = v - v.floor();
        if f >= 1.0 {
            0.0
        } else {
            f
        }
    };
    let w = [frac(cross(t, b2) / det), frac(cross(b1, t) / det)];
    HaarSample::from_coordinates((x, y), theta, w)
}
