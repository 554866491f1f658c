//! Averages of lattice statistics along expanded horocycle sections.
//!
//! A section `σ(t) = ((1, 2t; 0, 1), (x(t), y(t)))` is sampled at `t = k/N`
//! and pushed by `a(M)`; `ν_N(f)` is the average of `f` over the resulting
//! `pN` lattices.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{a_of, multiply, sigma};
use crate::lattice::AffineLattice;
use crate::mc::McEstimate;
use crate::region::Region;

type CurveFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Grid used to check that a section is finite on `[0, p]`.
const FINITENESS_GRID: u32 = 64;

/// Largest `pN` accepted by [`nu_n`].
pub const MAX_SAMPLE_POINTS: u64 = 1 << 32;

const CHUNK: u64 = 4096;

#[derive(Clone)]
pub struct HorocycleSection {
    x_fn: CurveFn,
    y_fn: CurveFn,
    period: u32,
    label: String,
    declared_nonlinear: bool,
}

impl fmt::Debug for HorocycleSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HorocycleSection")
            .field("label", &self.label)
            .field("period", &self.period)
            .field("declared_nonlinear", &self.declared_nonlinear)
            .finish()
    }
}

impl HorocycleSection {
    /// Checks `p ≥ 1` and finiteness of both coordinates on a grid of `[0, p]`.
    pub fn new<X, Y>(
        label: &str,
        period: u32,
        declared_nonlinear: bool,
        x_fn: X,
        y_fn: Y,
    ) -> Result<Self>
    where
        X: Fn(f64) -> f64 + Send + Sync + 'static,
        Y: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if period == 0 {
            return Err(Error::Domain("section period must be ≥ 1".into()));
        }
        let steps = FINITENESS_GRID * period;
        for i in 0..=steps {
            let t = i as f64 * period as f64 / steps as f64;
            if !x_fn(t).is_finite() || !y_fn(t).is_finite() {
                return Err(Error::Evaluation(format!(
                    "section '{label}' is not finite at t = {t}"
                )));
            }
        }
        Ok(HorocycleSection {
            x_fn: Arc::new(x_fn),
            y_fn: Arc::new(y_fn),
            period,
            label: label.to_string(),
            declared_nonlinear,
        })
    }

    /// `x(t) = t`, `y(t) = t²`: the section `n(t)` behind `√n mod 1`.
    pub fn sqrt() -> Self {
        HorocycleSection::new("sqrt", 1, true, |t| t, |t| t * t).expect("sqrt section is finite")
    }

    /// `x(t) = 0`, `y(t) = t`. Linear, so equidistribution is not expected.
    pub fn linear_control() -> Self {
        HorocycleSection::new("linear", 1, false, |_| 0.0, |t| t).expect("linear section is finite")
    }

    /// Polynomial coordinates, coefficients in increasing degree. Declared
    /// non-linear when `y` has a non-zero coefficient of degree ≥ 2.
    pub fn polynomial(x_coeffs: Vec<f64>, y_coeffs: Vec<f64>, period: u32) -> Result<Self> {
        if x_coeffs.iter().chain(&y_coeffs).any(|c| !c.is_finite()) {
            return Err(Error::Domain(
                "polynomial coefficients must be finite".into(),
            ));
        }
        let nonlinear = y_coeffs.iter().skip(2).any(|&c| c != 0.0);
        let label = format!("poly:x={};y={}", join(&x_coeffs), join(&y_coeffs));
        HorocycleSection::new(
            &label,
            period,
            nonlinear,
            move |t| horner(&x_coeffs, t),
            move |t| horner(&y_coeffs, t),
        )
    }

    pub fn eval(&self, t: f64) -> (f64, f64) {
        ((self.x_fn)(t), (self.y_fn)(t))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn period(&self) -> u32 {
        self.period
    }

    pub fn declared_nonlinear(&self) -> bool {
        self.declared_nonlinear
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn join(coeffs: &[f64]) -> String {
    coeffs
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

pub type CustomFn = Arc<dyn Fn(&AffineLattice) -> Result<f64> + Send + Sync>;

#[derive(Clone)]
pub enum TestFunctionKind {
    /// `1` if the lattice has exactly `j` points in the region.
    IndicatorCountEquals {
        region: Region,
        j: u64,
    },
    /// `min(count, cap)`.
    CountTruncated {
        region: Region,
        cap: u64,
    },
    Constant(f64),
    Custom(CustomFn),
}

#[derive(Clone)]
pub struct TestFunction {
    pub kind: TestFunctionKind,
    pub description: String,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.description)
    }
}

impl TestFunction {
    pub fn indicator_count_equals(region: Region, j: u64) -> Self {
        let description = format!("1[#(L ∩ {region:?}) = {j}]");
        TestFunction {
            kind: TestFunctionKind::IndicatorCountEquals { region, j },
            description,
        }
    }

    pub fn count_truncated(region: Region, cap: u64) -> Self {
        let description = format!("min(#(L ∩ {region:?}), {cap})");
        TestFunction {
            kind: TestFunctionKind::CountTruncated { region, cap },
            description,
        }
    }

    pub fn constant(c: f64) -> Self {
        TestFunction {
            kind: TestFunctionKind::Constant(c),
            description: format!("{c}"),
        }
    }

    pub fn custom<F>(description: &str, f: F) -> Self
    where
        F: Fn(&AffineLattice) -> Result<f64> + Send + Sync + 'static,
    {
        TestFunction {
            kind: TestFunctionKind::Custom(Arc::new(f)),
            description: description.to_string(),
        }
    }

    pub fn eval(&self, lattice: &AffineLattice) -> Result<f64> {
        match &self.kind {
            TestFunctionKind::IndicatorCountEquals { region, j } => {
                Ok((lattice.count_in_region(region)? == *j) as u8 as f64)
            }
            TestFunctionKind::CountTruncated { region, cap } => {
                Ok(lattice.count_in_region_capped(region, u64::MAX)?.min(*cap) as f64)
            }
            TestFunctionKind::Constant(c) => Ok(*c),
            TestFunctionKind::Custom(f) => f(lattice),
        }
    }
}

/// The lattice `ℤ² σ(k/N) a(M)`.
pub fn sample_point(section: &HorocycleSection, k: u64, n: u64, m: f64) -> Result<AffineLattice> {
    if n == 0 {
        return Err(Error::Domain("N must be ≥ 1".into()));
    }
    if k >= section.period() as u64 * n {
        return Err(Error::Domain(format!("k = {k} outside [0, pN)")));
    }
    sample_point_unchecked(section, k, n, m)
}

fn sample_point_unchecked(
    section: &HorocycleSection,
    k: u64,
    n: u64,
    m: f64,
) -> Result<AffineLattice> {
    let g = multiply(&sigma(section, k as f64 / n as f64)?, &a_of(m)?)?;
    Ok(AffineLattice::from_group_element(&g))
}

/// The admissible window `N/C ≤ M ≤ CN`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub c: f64,
}

impl Default for Regime {
    fn default() -> Self {
        Regime { c: 2.0 }
    }
}

impl Regime {
    pub fn check(&self, n: u64, m: f64) -> Result<()> {
        if !(self.c >= 1.0) {
            return Err(Error::Domain(format!(
                "regime constant C = {} must be ≥ 1",
                self.c
            )));
        }
        let nf = n as f64;
        if !(m >= nf / self.c && m <= nf * self.c) {
            return Err(Error::Domain(format!(
                "M = {m} outside [N/C, CN] for N = {n}, C = {}",
                self.c
            )));
        }
        Ok(())
    }
}

/// Mean of `f` over the sample points, with the standard error of the mean
/// treating the points as independent (a heuristic yardstick only).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_points: u64,
}

/// `ν_N(f) = (1/pN) Σ_{0 ≤ k < pN} f(Γσ(k/N)a(M))`.
pub fn nu_n(
    f: &TestFunction,
    section: &HorocycleSection,
    n: u64,
    m: f64,
    regime: &Regime,
) -> Result<f64> {
    Ok(nu_n_stats(f, section, n, m, regime)?.value)
}

pub fn nu_n_stats(
    f: &TestFunction,
    section: &HorocycleSection,
    n: u64,
    m: f64,
    regime: &Regime,
) -> Result<NuEstimate> {
    if n == 0 {
        return Err(Error::Domain("N must be ≥ 1".into()));
    }
    regime.check(n, m)?;
    let points = section.period() as u64 * n;
    if points > MAX_SAMPLE_POINTS {
        return Err(Error::Capacity {
            what: "horocycle sample points",
            requested: points,
            cap: MAX_SAMPLE_POINTS,
        });
    }
    average_window(f, section, n, m, 0, points)
}

/// Average of `f` over `k_lo ≤ k < k_hi`; `k` may run past one period.
pub fn average_window(
    f: &TestFunction,
    section: &HorocycleSection,
    n: u64,
    m: f64,
    k_lo: u64,
    k_hi: u64,
) -> Result<NuEstimate> {
    if k_hi <= k_lo || n == 0 {
        return Err(Error::Domain("empty sample window".into()));
    }
    let chunks = (k_hi - k_lo).div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = k_lo + c * CHUNK;
            let hi = (lo + CHUNK).min(k_hi);
            let mut acc = (0.0, 0.0);
            for k in lo..hi {
                let v = f.eval(&sample_point_unchecked(section, k, n, m)?)?;
                acc.0 += v;
                acc.1 += v * v;
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let (sum, sum_sq) = parts
        .iter()
        .fold((0.0, 0.0), |(s, q), &(a, b)| (s + a, q + b));
    let est = McEstimate::from_sums(sum, sum_sq, k_hi - k_lo, 0);
    Ok(NuEstimate {
        value: est.value,
        std_error: est.std_error,
        n_points: k_hi - k_lo,
    })
}

/// How `M` is chosen from `N` in a convergence table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MRule {
    /// `M = ratio · N`.
    Ratio(f64),
}

impl MRule {
    pub fn m_for(&self, n: u64) -> f64 {
        match *self {
            MRule::Ratio(r) => r * n as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub n: u64,
    pub m: f64,
    pub nu: NuEstimate,
    pub reference: McEstimate,
    pub difference: f64,
}

/// `|ν_N(f) - reference|` along `n_list`; reporting only.
pub fn convergence_table(
    f: &TestFunction,
    section: &HorocycleSection,
    n_list: &[u64],
    rule: MRule,
    reference: McEstimate,
    regime: &Regime,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("N list must be strictly ascending".into()));
    }
    n_list
        .iter()
        .map(|&n| {
            let m = rule.m_for(n);
            let nu = nu_n_stats(f, section, n, m, regime)?;
            Ok(ConvergenceRow {
                n,
                m,
                nu,
                reference,
                difference: (nu.value - reference.value).abs(),
            })
        })
        .collect()
}
