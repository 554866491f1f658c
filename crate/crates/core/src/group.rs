//! The affine special linear group ASL(2,ℝ) = SL(2,ℝ) ⋉ ℝ².
//!
//! Elements are pairs `(M, x)` with `M` a 2×2 matrix of determinant one and
//! `x` a row vector. The product is `(M, x)(M', x') = (MM', xM' + x')`, so an
//! element acts on row vectors from the right and the lattice attached to
//! `(M, x)` is `ℤ²M + x`.

use crate::error::{Error, Result};
use crate::horocycle::HorocycleSection;

/// Tolerance on `|det M - 1|` accepted by the constructors.
pub const DET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroupElement {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub x1: f64,
    pub x2: f64,
}

impl GroupElement {
    pub const IDENTITY: GroupElement = GroupElement {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
        x1: 0.0,
        x2: 0.0,
    };

    /// Matrix rows `(a, b)`, `(c, d)` and translation `(x1, x2)`.
    pub fn new(matrix: [[f64; 2]; 2], translation: [f64; 2]) -> Result<Self> {
        let g = Self::from_parts_unchecked(matrix, translation);
        g.check()?;
        Ok(g)
    }

    pub(crate) fn from_parts_unchecked(matrix: [[f64; 2]; 2], translation: [f64; 2]) -> Self {
        GroupElement {
            a: matrix[0][0],
            b: matrix[0][1],
            c: matrix[1][0],
            d: matrix[1][1],
            x1: translation[0],
            x2: translation[1],
        }
    }

    /// Pure translation `(I, v)`.
    pub fn translation(v: [f64; 2]) -> Result<Self> {
        Self::new([[1.0, 0.0], [0.0, 1.0]], v)
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn translation_part(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    fn is_finite(&self) -> bool {
        [self.a, self.b, self.c, self.d, self.x1, self.x2]
            .iter()
            .all(|v| v.is_finite())
    }

    fn check(&self) -> Result<()> {
        if !self.is_finite() {
            return Err(Error::ArithmeticOverflow(format!(
                "non-finite group element {self:?}"
            )));
        }
        let det = self.det();
        if (det - 1.0).abs() > DET_TOLERANCE {
            return Err(Error::Domain(format!("determinant {det} is not 1")));
        }
        Ok(())
    }

    /// Largest entrywise difference, translation included.
    pub fn max_abs_diff(&self, other: &GroupElement) -> f64 {
        [
            self.a - other.a,
            self.b - other.b,
            self.c - other.c,
            self.d - other.d,
            self.x1 - other.x1,
            self.x2 - other.x2,
        ]
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()))
    }
}

/// `(M, x)(M', x') = (MM', xM' + x')`.
///
/// No renormalization of the determinant is applied.
pub fn multiply(g: &GroupElement, h: &GroupElement) -> Result<GroupElement> {
    let out = GroupElement {
        a: g.a * h.a + g.b * h.c,
        b: g.a * h.b + g.b * h.d,
        c: g.c * h.a + g.d * h.c,
        d: g.c * h.b + g.d * h.d,
        x1: g.x1 * h.a + g.x2 * h.c + h.x1,
        x2: g.x1 * h.b + g.x2 * h.d + h.x2,
    };
    if !out.is_finite() {
        return Err(Error::ArithmeticOverflow(
            "product has non-finite entries".into(),
        ));
    }
    Ok(out)
}

/// `(M, x)^{-1} = (M^{-1}, -x M^{-1})`.
pub fn inverse(g: &GroupElement) -> Result<GroupElement> {
    let det = g.det();
    let (a, b, c, d) = (g.d / det, -g.b / det, -g.c / det, g.a / det);
    let out = GroupElement {
        a,
        b,
        c,
        d,
        x1: -(g.x1 * a + g.x2 * c),
        x2: -(g.x1 * b + g.x2 * d),
    };
    if !out.is_finite() {
        return Err(Error::ArithmeticOverflow("inverse is not finite".into()));
    }
    Ok(out)
}

/// The geodesic flow element `diag(e^{-t/2}, e^{t/2})`.
pub fn phi(t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::Range(format!("phi: t = {t} is not finite")));
    }
    let lo = (-t / 2.0).exp();
    let hi = (t / 2.0).exp();
    if !lo.is_finite() || !hi.is_finite() || lo == 0.0 || hi == 0.0 {
        return Err(Error::Range(format!(
            "phi: e^(±t/2) out of range for t = {t}"
        )));
    }
    Ok(GroupElement {
        a: lo,
        d: hi,
        ..GroupElement::IDENTITY
    })
}

/// `a(N) = phi(log N) = diag(N^{-1/2}, N^{1/2})`.
pub fn a_of(n: f64) -> Result<GroupElement> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::Domain(format!("a(N) requires N > 0, got {n}")));
    }
    // Evaluated through the square root rather than exp(log N / 2), which
    // keeps a(100) = diag(0.1, 10) exact.
    let r = n.sqrt();
    Ok(GroupElement {
        a: 1.0 / r,
        d: r,
        ..GroupElement::IDENTITY
    })
}

/// The unipotent element `((1, 2t; 0, 1), (0, 0))`.
pub fn u_of(t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("u(t): t = {t} is not finite")));
    }
    Ok(GroupElement {
        b: 2.0 * t,
        ..GroupElement::IDENTITY
    })
}

/// The quadratic horocycle section `((1, 2t; 0, 1), (t, t²))`.
pub fn n_of(t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("n(t): t = {t} is not finite")));
    }
    Ok(GroupElement {
        b: 2.0 * t,
        x1: t,
        x2: t * t,
        ..GroupElement::IDENTITY
    })
}

/// A general horocycle section `((1, 2t; 0, 1), (x(t), y(t)))`.
pub fn sigma(section: &HorocycleSection, t: f64) -> Result<GroupElement> {
    if !t.is_finite() {
        return Err(Error::Domain(format!("sigma: t = {t} is not finite")));
    }
    let (x, y) = section.eval(t);
    if !x.is_finite() || !y.is_finite() {
        return Err(Error::Evaluation(format!(
            "section '{}' is not finite at t = {t}: ({x}, {y})",
            section.label()
        )));
    }
    Ok(GroupElement {
        b: 2.0 * t,
        x1: x,
        x2: y,
        ..GroupElement::IDENTITY
    })
}
