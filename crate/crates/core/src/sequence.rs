//! Pigeonhole statistics of the fractional parts of `n^α`.
//!
//! The circle is cut into `N` buckets; bucket `k` is
//! `[k/N - 1/(2N), k/N + 1/(2N)) + ℤ`. For a horizon `s` the first `⌊sN⌋`
//! terms are dropped into buckets and the histogram of bucket occupancies is
//! the object of study.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU32, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{a_of, multiply, n_of};
use crate::lattice::AffineLattice;
use crate::region::Region;

/// Largest term index accepted by the streaming passes.
pub const MAX_TERMS: u64 = 1 << 62;
/// Default cap on the number of buckets (one `u32` each).
pub const DEFAULT_MAX_BUCKETS: u64 = 1 << 30;

const CHUNK: u64 = 1 << 16;

/// The exponent `α`. Rationals are kept exact so that perfect powers can be
/// recognised and removed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Alpha {
    Rational { num: u32, den: u32 },
    Real(f64),
}

impl Alpha {
    pub const HALF: Alpha = Alpha::Rational { num: 1, den: 2 };
    pub const THIRD: Alpha = Alpha::Rational { num: 1, den: 3 };
    pub const TWO_THIRDS: Alpha = Alpha::Rational { num: 2, den: 3 };

    pub fn rational(num: u32, den: u32) -> Result<Alpha> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::Domain(format!(
                "alpha = {num}/{den} is not in (0, 1)"
            )));
        }
        let g = gcd(num, den);
        Ok(Alpha::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn real(value: f64) -> Result<Alpha> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Domain(format!("alpha = {value} is not in (0, 1)")));
        }
        Ok(Alpha::Real(value))
    }

    pub fn value(&self) -> f64 {
        match *self {
            Alpha::Rational { num, den } => num as f64 / den as f64,
            Alpha::Real(v) => v,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Alpha::Rational { num, den } => Alpha::rational(num, den).map(|_| ()),
            Alpha::Real(v) => Alpha::real(v).map(|_| ()),
        }
    }

    /// `k` such that `n^α ∈ ℤ` exactly when `n` is a perfect `k`-th power.
    fn power_denominator(&self) -> Option<u32> {
        match *self {
            Alpha::Rational { den, .. } => Some(den),
            Alpha::Real(_) => None,
        }
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Alpha::Rational { num, den } => write!(f, "{num}/{den}"),
            Alpha::Real(v) => write!(f, "{v}"),
        }
    }
}

impl FromStr for Alpha {
    type Err = Error;

    fn from_str(s: &str) -> Result<Alpha> {
        let s = s.trim();
        if let Some((p, q)) = s.split_once('/') {
            let parse = |t: &str| {
                t.trim()
                    .parse::<u32>()
                    .map_err(|e| Error::Domain(format!("bad alpha '{s}': {e}")))
            };
            Alpha::rational(parse(p)?, parse(q)?)
        } else {
            let v: f64 = s
                .parse()
                .map_err(|e| Error::Domain(format!("bad alpha '{s}': {e}")))?;
            Alpha::real(v)
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `⌊√n⌋`.
pub fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while (r as u128) * (r as u128) > n as u128 {
        r -= 1;
    }
    while ((r + 1) as u128) * ((r + 1) as u128) <= n as u128 {
        r += 1;
    }
    r
}

/// `⌊x^{1/q}⌋` for `q ≥ 1`.
fn iroot(x: u128, q: u32) -> u128 {
    if q == 1 || x < 2 {
        return x;
    }
    let mut r = (x as f64).powf(1.0 / q as f64) as u128;
    let pow_le = |r: u128| r.checked_pow(q).is_some_and(|p| p <= x);
    while r > 0 && !pow_le(r) {
        r -= 1;
    }
    while pow_le(r + 1) {
        r += 1;
    }
    r
}

/// Fractional part of `√n`, computed as `(n - r²)/(√n + r)` with `r = ⌊√n⌋`
/// so that no cancellation occurs.
pub fn frac_sqrt(n: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Domain("frac_sqrt requires n ≥ 1".into()));
    }
    Ok(frac_sqrt_unchecked(n))
}

#[inline]
fn frac_sqrt_unchecked(n: u64) -> f64 {
    let r = isqrt(n);
    let rem = n - r * r;
    if rem == 0 {
        return 0.0;
    }
    clamp_unit(rem as f64 / ((n as f64).sqrt() + r as f64))
}

#[inline]
fn clamp_unit(f: f64) -> f64 {
    if f >= 1.0 {
        1.0 - f64::EPSILON / 2.0
    } else {
        f
    }
}

/// Fractional part of `n^α`.
///
/// For rational `α = p/q` with `n^p` in 128-bit range the integer part is
/// found exactly and the remainder is `(n^p - r^q) / Σ c^{q-1-i} r^i` with
/// `c = n^α`, the `q`-th power analogue of [`frac_sqrt`].
pub fn frac_pow(n: u64, alpha: &Alpha) -> Result<f64> {
    alpha.validate()?;
    if n == 0 {
        return Err(Error::Domain("frac_pow requires n ≥ 1".into()));
    }
    Ok(frac_pow_unchecked(n, alpha))
}

#[inline]
fn frac_pow_unchecked(n: u64, alpha: &Alpha) -> f64 {
    match *alpha {
        Alpha::Rational { num: 1, den: 2 } => frac_sqrt_unchecked(n),
        Alpha::Rational { num, den } => match (n as u128).checked_pow(num) {
            Some(x) => {
                let r = iroot(x, den);
                let rem = x - r.pow(den);
                if rem == 0 {
                    return 0.0;
                }
                let c = (n as f64).powf(num as f64 / den as f64);
                let rf = r as f64;
                let mut denom = 0.0;
                let mut term = c.powi(den as i32 - 1);
                for _ in 0..den {
                    denom += term;
                    term *= rf / c;
                }
                clamp_unit(rem as f64 / denom)
            }
            None => {
                let v = (n as f64).powf(alpha.value());
                clamp_unit(v - v.floor())
            }
        },
        Alpha::Real(a) => {
            let v = (n as f64).powf(a);
            clamp_unit(v - v.floor())
        }
    }
}

/// Whether `n^α` is an integer, i.e. `n` is a perfect `q`-th power for
/// `α = p/q` in lowest terms. Always false for real `α`.
pub fn is_perfect_power(n: u64, alpha: &Alpha) -> bool {
    match alpha.power_denominator() {
        Some(q) => {
            let r = iroot(n as u128, q);
            r.pow(q) == n as u128
        }
        None => false,
    }
}

/// Number of `1 ≤ n ≤ limit` removed by the perfect-power filter.
pub fn perfect_powers_up_to(limit: u64, alpha: &Alpha) -> u64 {
    match alpha.power_denominator() {
        Some(q) => iroot(limit as u128, q) as u64,
        None => 0,
    }
}

/// The bucket `k` with `x ∈ [k/N - 1/(2N), k/N + 1/(2N)) + ℤ`.
#[inline]
pub fn bucket_of(x: f64, n_buckets: u64) -> u64 {
    let k = (x * n_buckets as f64 + 0.5).floor() as u64;
    if k >= n_buckets {
        k - n_buckets
    } else {
        k
    }
}

/// The partition `Ω_N` of the circle into `N` half-open buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PartitionGrid {
    n_buckets: u64,
}

impl PartitionGrid {
    pub fn new(n_buckets: u64) -> Result<Self> {
        if n_buckets == 0 {
            return Err(Error::Domain("N must be positive".into()));
        }
        Ok(PartitionGrid { n_buckets })
    }

    pub fn len(&self) -> u64 {
        self.n_buckets
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn bucket_of(&self, x: f64) -> u64 {
        bucket_of(x, self.n_buckets)
    }

    pub fn center(&self, k: u64) -> f64 {
        k as f64 / self.n_buckets as f64
    }

    /// Half-open interval of bucket `k`, before reduction mod 1.
    pub fn interval(&self, k: u64) -> (f64, f64) {
        let n = self.n_buckets as f64;
        (k as f64 / n - 0.5 / n, k as f64 / n + 0.5 / n)
    }
}

/// `⌊sN⌋`, guarded against `s·N` overflowing the accepted term range.
pub fn term_count(s: f64, n_buckets: u64) -> Result<u64> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be finite and ≥ 0, got {s}")));
    }
    let t = (s * n_buckets as f64).floor();
    if t > MAX_TERMS as f64 {
        return Err(Error::Capacity {
            what: "sequence terms",
            requested: if t.is_finite() { t as u64 } else { u64::MAX },
            cap: MAX_TERMS,
        });
    }
    Ok(t as u64)
}

fn check_buckets(n_buckets: u64, cap: u64) -> Result<()> {
    if n_buckets == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    if n_buckets > cap {
        return Err(Error::Capacity {
            what: "buckets",
            requested: n_buckets,
            cap,
        });
    }
    Ok(())
}

/// Streams `first ≤ n ≤ last` in parallel chunks, calling `visit(n, bucket)`
/// for every term not removed by the perfect-power filter.
pub(crate) fn par_for_each_bucket<F>(
    first: u64,
    last: u64,
    n_buckets: u64,
    alpha: &Alpha,
    remove_powers: bool,
    visit: F,
) where
    F: Fn(u64, u64) + Sync,
{
    let first = first.max(1);
    if first > last {
        return;
    }
    let chunks = (last - first) / CHUNK + 1;
    (0..chunks).into_par_iter().for_each(|c| {
        let lo = first + c * CHUNK;
        let hi = (lo + CHUNK - 1).min(last);
        for n in lo..=hi {
            if remove_powers && is_perfect_power(n, alpha) {
                continue;
            }
            visit(n, bucket_of(frac_pow_unchecked(n, alpha), n_buckets));
        }
    });
}

/// Marks every bucket hit by some term with `first ≤ n ≤ last`.
pub(crate) fn mark_buckets(
    marks: &[AtomicBool],
    first: u64,
    last: u64,
    alpha: &Alpha,
    remove_powers: bool,
) {
    let n_buckets = marks.len() as u64;
    par_for_each_bucket(first, last, n_buckets, alpha, remove_powers, |_, k| {
        marks[k as usize].store(true, Ordering::Relaxed);
    });
}

/// Per-bucket counts of the terms `first ≤ n ≤ last`.
pub(crate) fn bucket_counts(
    n_buckets: u64,
    first: u64,
    last: u64,
    alpha: &Alpha,
    remove_powers: bool,
) -> Result<Vec<u32>> {
    let counts: Vec<AtomicU32> = (0..n_buckets).map(|_| AtomicU32::new(0)).collect();
    let overflow = AtomicBool::new(false);
    par_for_each_bucket(first, last, n_buckets, alpha, remove_powers, |_, k| {
        if counts[k as usize].fetch_add(1, Ordering::Relaxed) == u32::MAX {
            overflow.store(true, Ordering::Relaxed);
        }
    });
    if overflow.load(Ordering::Relaxed) {
        return Err(Error::Capacity {
            what: "bucket count",
            requested: u32::MAX as u64 + 1,
            cap: u32::MAX as u64,
        });
    }
    Ok(counts.into_iter().map(AtomicU32::into_inner).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigeonholeHistogram {
    pub n_buckets: u64,
    pub s: f64,
    pub alpha: Alpha,
    pub squares_removed: bool,
    /// `counts[k] = S_N(k/N, s)`.
    pub counts: Vec<u32>,
}

/// Bucket counts of the first `⌊sN⌋` terms.
///
/// With `squares_removed` the terms where `n^α` is an integer are skipped
/// (for `α = 1/2`, the perfect squares).
pub fn histogram(
    n_buckets: u64,
    s: f64,
    alpha: Alpha,
    squares_removed: bool,
) -> Result<PigeonholeHistogram> {
    histogram_capped(n_buckets, s, alpha, squares_removed, DEFAULT_MAX_BUCKETS)
}

pub fn histogram_capped(
    n_buckets: u64,
    s: f64,
    alpha: Alpha,
    squares_removed: bool,
    max_buckets: u64,
) -> Result<PigeonholeHistogram> {
    alpha.validate()?;
    check_buckets(n_buckets, max_buckets)?;
    let terms = term_count(s, n_buckets)?;
    let counts = bucket_counts(n_buckets, 1, terms, &alpha, squares_removed)?;
    Ok(PigeonholeHistogram {
        n_buckets,
        s,
        alpha,
        squares_removed,
        counts,
    })
}

impl PigeonholeHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Expected value of [`total`](Self::total): `⌊sN⌋` minus removed powers.
    pub fn expected_total(&self) -> u64 {
        let terms = (self.s * self.n_buckets as f64).floor() as u64;
        if self.squares_removed {
            terms - perfect_powers_up_to(terms, &self.alpha)
        } else {
            terms
        }
    }

    pub fn mean(&self) -> f64 {
        self.total() as f64 / self.n_buckets as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Proportions {
    /// `E_{j,N}` for `j = 0..=j_max`.
    pub e: Vec<f64>,
    /// Fraction of buckets holding more than `j_max` terms.
    pub tail: f64,
}

/// `E_{j,N}(s)`: the fraction of buckets holding exactly `j` terms.
pub fn proportions(h: &PigeonholeHistogram, j_max: usize) -> Proportions {
    let mut tallies = vec![0u64; j_max + 1];
    let mut tail = 0u64;
    for &c in &h.counts {
        match tallies.get_mut(c as usize) {
            Some(t) => *t += 1,
            None => tail += 1,
        }
    }
    let n = h.n_buckets as f64;
    Proportions {
        e: tallies.iter().map(|&t| t as f64 / n).collect(),
        tail: tail as f64 / n,
    }
}

/// `(1/N) Σ_k counts[k]²`.
pub fn second_moment(h: &PigeonholeHistogram) -> f64 {
    let sum: u128 = h.counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    sum as f64 / h.n_buckets as f64
}

pub fn variance(h: &PigeonholeHistogram) -> f64 {
    let m = h.mean();
    second_moment(h) - m * m
}

/// The perturbation `(ε_N, δ_N)` for which the lattice counts in
/// `A_{∓ε,δ}(s)` bracket the bucket count at every `k ≠ 0`.
///
/// `ε_N = 1/(2N√N') + |√(N'/N) - √s|` with `N' = ⌊sN⌋`, and
/// `δ_N = +1/(4N√N)`: with the lattice of `n(k/N)a(N)` a term `n` in bucket
/// `k` sits at `v = √N((k/N + m)² - n)`, which makes the exact window
/// `(v + δ_N)/u ∈ (-1, 1]`.
pub fn sandwich_parameters(n_buckets: u64, s: f64) -> Result<(f64, f64)> {
    let terms = term_count(s, n_buckets)?;
    if terms == 0 {
        return Err(Error::Domain("sandwich bounds need ⌊sN⌋ ≥ 1".into()));
    }
    let n = n_buckets as f64;
    let np = terms as f64;
    let eps = 1.0 / (2.0 * n * np.sqrt()) + ((np / n).sqrt() - s.sqrt()).abs();
    let delta = 1.0 / (4.0 * n * n.sqrt());
    Ok((eps, delta))
}

/// The lattice `ℤ² n(k/N) a(N)` whose counts in near-triangles reproduce the
/// bucket count `S_N(k/N, s)`.
pub fn bucket_lattice(k: u64, n_buckets: u64) -> Result<AffineLattice> {
    let g = multiply(
        &n_of(k as f64 / n_buckets as f64)?,
        &a_of(n_buckets as f64)?,
    )?;
    Ok(AffineLattice::from_group_element(&g))
}

/// `(lower, upper)` lattice counts in `A_{-ε_N,δ_N}(s)` and `A_{ε_N,δ_N}(s)`.
pub fn sandwich_bounds(k: u64, n_buckets: u64, s: f64) -> Result<(u64, u64)> {
    let (eps, delta) = sandwich_parameters(n_buckets, s)?;
    let l = bucket_lattice(k, n_buckets)?;
    let counts = l.count_in_regions(&[
        Region::approx(-eps, delta, s),
        Region::approx(eps, delta, s),
    ])?;
    Ok((counts[0], counts[1]))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub checked: u64,
    /// Buckets `k` where `lower ≤ S_N ≤ upper` fails.
    pub violations: Vec<u64>,
    /// Buckets where the two bounds differ.
    pub loose: u64,
}

/// Checks the lattice sandwich at every bucket `k ≠ 0` for `α = 1/2`.
pub fn sandwich_check(n_buckets: u64, s: f64) -> Result<SandwichReport> {
    let h = histogram(n_buckets, s, Alpha::HALF, false)?;
    let results: Vec<Result<(u64, u64)>> = (1..n_buckets)
        .into_par_iter()
        .map(|k| sandwich_bounds(k, n_buckets, s))
        .collect();
    let mut report = SandwichReport {
        checked: 0,
        violations: Vec::new(),
        loose: 0,
    };
    for (k, r) in (1..n_buckets).zip(results) {
        let (lo, hi) = r?;
        let c = h.counts[k as usize] as u64;
        report.checked += 1;
        if lo > c || c > hi {
            report.violations.push(k);
        }
        if lo != hi {
            report.loose += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigUint;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// frac(x^{1/q}) for x = n^p via an exact big-integer root of x·10^{q·40}.
    fn frac_root_oracle(n: u64, p: u32, q: u32) -> f64 {
        let x = BigUint::from(n).pow(p);
        let scale = BigUint::from(10u32).pow(40);
        let scaled = x * scale.pow(q);
        let root = scaled.nth_root(q);
        let int = &root / &scale;
        let frac = root - int * &scale;
        // Keep 20 significant digits of the fractional part.
        let digits = frac / BigUint::from(10u32).pow(20);
        digits.to_f64().unwrap() / 1e20
    }

    #[test]
    fn frac_sqrt_values() {
        assert_eq!(frac_sqrt(4).unwrap(), 0.0);
        assert!((frac_sqrt(2).unwrap() - (2f64.sqrt() - 1.0)).abs() < 1e-12);
        assert!((frac_sqrt(2).unwrap() - frac_root_oracle(2, 1, 2)).abs() < 1e-15);
        assert!(matches!(frac_sqrt(0), Err(Error::Domain(_))));
        let n = 100_000_001;
        assert!((frac_sqrt(n).unwrap() - frac_root_oracle(n, 1, 2)).abs() < 1e-11);
    }

    #[test]
    fn frac_sqrt_against_big_integer_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let n = rng.random_range(1..=100_000_000_000_000u64);
            let got = frac_sqrt(n).unwrap();
            let want = frac_root_oracle(n, 1, 2);
            assert!((got - want).abs() <= 1e-11, "n = {n}: {got} vs {want}");
        }
    }

    #[test]
    fn frac_pow_values() {
        assert_eq!(frac_pow(8, &Alpha::THIRD).unwrap(), 0.0);
        assert_eq!(frac_pow(27, &Alpha::TWO_THIRDS).unwrap(), 0.0);
        assert_eq!(frac_pow(2, &Alpha::HALF).unwrap(), frac_sqrt(2).unwrap());
        let v = frac_pow(5, &Alpha::TWO_THIRDS).unwrap();
        assert!((v - frac_root_oracle(5, 2, 3)).abs() < 1e-10);
        assert!((v - 0.924017738).abs() < 1e-9);
        assert!(frac_pow(3, &Alpha::Rational { num: 3, den: 2 }).is_err());
        assert!(frac_pow(3, &Alpha::Real(1.0)).is_err());
        assert!(frac_pow(3, &Alpha::Real(0.0)).is_err());
    }

    #[test]
    fn frac_pow_against_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let n = rng.random_range(1..=10_000_000_000u64);
            for (alpha, p, q) in [(Alpha::THIRD, 1, 3), (Alpha::TWO_THIRDS, 2, 3)] {
                let got = frac_pow(n, &alpha).unwrap();
                let want = frac_root_oracle(n, p, q);
                assert!(
                    (got - want).abs() <= 1e-10,
                    "n = {n}, α = {alpha}: {got} vs {want}"
                );
            }
        }
    }

    #[test]
    fn alpha_parsing() {
        assert_eq!("1/2".parse::<Alpha>().unwrap(), Alpha::HALF);
        assert_eq!("2/4".parse::<Alpha>().unwrap(), Alpha::HALF);
        assert_eq!("0.25".parse::<Alpha>().unwrap(), Alpha::Real(0.25));
        assert!("3/2".parse::<Alpha>().is_err());
        assert!("1.5".parse::<Alpha>().is_err());
        assert!("x".parse::<Alpha>().is_err());
    }

    #[test]
    fn bucket_examples() {
        assert_eq!(bucket_of(0.0, 10), 0);
        assert_eq!(bucket_of(0.95, 10), 0);
        assert_eq!(bucket_of(0.25, 10), 3);
        assert_eq!(bucket_of(0.2499999, 10), 2);
        let grid = PartitionGrid::new(10).unwrap();
        assert_eq!(grid.interval(3), (0.25, 0.35));
    }

    #[test]
    fn bucket_totality_against_interval_membership() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1_000_000 {
            let n_buckets = rng.random_range(1..5000u64);
            let x: f64 = rng.random();
            let k = bucket_of(x, n_buckets);
            assert!(k < n_buckets);
            let (lo, hi) = PartitionGrid::new(n_buckets).unwrap().interval(k);
            // Membership mod 1.
            let inside = (lo..hi).contains(&x) || (lo..hi).contains(&(x - 1.0));
            assert!(inside, "x = {x}, N = {n_buckets}, k = {k}");
        }
    }

    /// Bucket of `√n` by exact integer arithmetic: `frac(√n) ≥ (2k-1)/(2N)`
    /// iff `⌊2N√n⌋ ≥ 2Nr + 2k - 1` with `r = ⌊√n⌋`.
    fn exact_sqrt_bucket(n: u64, n_buckets: u64) -> u64 {
        let isqrt128 = |x: u128| {
            let mut r = (x as f64).sqrt() as u128;
            while r * r > x {
                r -= 1;
            }
            while (r + 1) * (r + 1) <= x {
                r += 1;
            }
            r
        };
        let (n, nb) = (n as u128, n_buckets as u128);
        let r = isqrt128(n);
        let big = isqrt128(4 * nb * nb * n);
        (((big + 1 - 2 * nb * r) / 2) % nb) as u64
    }

    #[test]
    fn histogram_against_exact_arithmetic() {
        for (n_buckets, s) in [(100_000u64, 1.0), (77_777, 2.5)] {
            let h = histogram(n_buckets, s, Alpha::HALF, false).unwrap();
            let mut exact = vec![0u32; n_buckets as usize];
            for n in 1..=(s * n_buckets as f64) as u64 {
                exact[exact_sqrt_bucket(n, n_buckets) as usize] += 1;
            }
            assert_eq!(h.counts, exact);
        }
    }

    #[test]
    fn hand_histogram() {
        let h = histogram(5, 1.0, Alpha::HALF, false).unwrap();
        assert_eq!(h.counts, vec![2, 1, 1, 0, 1]);
        let p = proportions(&h, 2);
        assert_eq!(p.e, vec![0.2, 0.6, 0.2]);
        assert_eq!(p.tail, 0.0);
        // Brute-force recomputation.
        let mut brute = [0u32; 5];
        for n in 1..=5u64 {
            let f = (n as f64).sqrt().fract();
            let k = (0..5).find(|&k| {
                let c = k as f64 / 5.0;
                let d = (f - c).rem_euclid(1.0);
                !(0.1..0.9).contains(&d)
            });
            brute[k.unwrap()] += 1;
        }
        assert_eq!(h.counts, brute.to_vec());
    }

    #[test]
    fn empty_histogram() {
        let h = histogram(7, 0.0, Alpha::HALF, false).unwrap();
        assert!(h.counts.iter().all(|&c| c == 0));
        let p = proportions(&h, 3);
        assert_eq!(p.e, vec![1.0, 0.0, 0.0, 0.0]);
        assert_eq!(second_moment(&h), 0.0);
    }

    #[test]
    fn histogram_errors() {
        assert!(histogram(0, 1.0, Alpha::HALF, false).is_err());
        assert!(matches!(
            histogram(10, 1e30, Alpha::HALF, false),
            Err(Error::Capacity { .. })
        ));
        assert!(matches!(
            histogram_capped(1000, 1.0, Alpha::HALF, false, 100),
            Err(Error::Capacity { .. })
        ));
        assert!(histogram(10, -1.0, Alpha::HALF, false).is_err());
    }

    #[test]
    fn conservation() {
        let h = histogram(10_000, 1.7, Alpha::HALF, false).unwrap();
        assert_eq!(h.total(), 17_000);
        let h = histogram(10_000, 1.7, Alpha::HALF, true).unwrap();
        assert_eq!(h.total(), 17_000 - isqrt(17_000));
        assert_eq!(h.total(), h.expected_total());
        let h = histogram(1000, 3.0, Alpha::THIRD, true).unwrap();
        assert_eq!(h.total(), 3000 - 14);
        for (n, s) in [(1u64, 5.0), (97, 0.3), (1000, 2.5), (4096, 1.0)] {
            for sq in [false, true] {
                let h = histogram(n, s, Alpha::HALF, sq).unwrap();
                assert_eq!(h.total(), h.expected_total());
            }
        }
    }

    #[test]
    fn proportions_sum_to_one() {
        let h = histogram(12_345, 2.3, Alpha::HALF, false).unwrap();
        let p = proportions(&h, 4);
        let sum: f64 = p.e.iter().sum::<f64>() + p.tail;
        assert!((sum - 1.0).abs() < 1e-12);
    }

    #[test]
    fn squares_only_hit_bucket_zero() {
        let n = 1000;
        let kept = histogram(n, 2.0, Alpha::HALF, false).unwrap();
        let removed = histogram(n, 2.0, Alpha::HALF, true).unwrap();
        let diff: Vec<u32> = kept
            .counts
            .iter()
            .zip(&removed.counts)
            .map(|(a, b)| a - b)
            .collect();
        assert_eq!(diff[0] as u64, isqrt(2000));
        assert!(diff[1..].iter().all(|&d| d == 0));
    }

    #[test]
    fn sandwich_small_exhaustive() {
        for n in [10u64, 37, 100] {
            for s in [0.5, 1.0, 2.0] {
                let r = sandwich_check(n, s).unwrap();
                assert_eq!(r.checked, n - 1);
                assert!(
                    r.violations.is_empty(),
                    "N = {n}, s = {s}: {:?}",
                    r.violations
                );
            }
        }
    }

    #[test]
    fn sandwich_boundary_hit() {
        // 39·100² = 624·625: √39 sits exactly at v = -u in the lattice of
        // bucket 24 (N = 100), so it is counted only with δ > 0.
        let (eps, delta) = sandwich_parameters(100, 1.0).unwrap();
        let l = bucket_lattice(24, 100).unwrap();
        let lower = l
            .count_in_region(&Region::approx(-eps, delta, 1.0))
            .unwrap();
        let flipped = l
            .count_in_region(&Region::approx(eps, -delta, 1.0))
            .unwrap();
        let h = histogram(100, 1.0, Alpha::HALF, false).unwrap();
        assert_eq!(bucket_of(frac_sqrt(39).unwrap(), 100), 24);
        assert!(lower <= h.counts[24] as u64);
        assert!(flipped < h.counts[24] as u64);
    }

    proptest! {
        #[test]
        fn counts_monotone_in_s(n in 1u64..2000, s1 in 0.0f64..3.0, ds in 0.0f64..3.0) {
            let a = histogram(n, s1, Alpha::HALF, false).unwrap();
            let b = histogram(n, s1 + ds, Alpha::HALF, false).unwrap();
            prop_assert!(a.counts.iter().zip(&b.counts).all(|(x, y)| x <= y));
        }

        #[test]
        fn isqrt_is_floor(n in any::<u64>()) {
            let r = isqrt(n) as u128;
            prop_assert!(r * r <= n as u128 && (r + 1) * (r + 1) > n as u128);
        }
    }
}
