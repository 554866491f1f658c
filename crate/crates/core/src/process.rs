//! Jump-point processes on both sides of the limit.
//!
//! On the empirical side bucket `k` receives an atom at `s = n/N` for every
//! term `n` landing in it. On the lattice side an atom sits at `u` for each
//! lattice point `(u, v)` of the cone, so the two parametrizations are
//! related by `s = u²`. Every sample carries its parametrization.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::region::Region;
use crate::sequence::{
    self, par_for_each_bucket, term_count, Alpha, DEFAULT_MAX_BUCKETS, MAX_TERMS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parametrization {
    /// Atoms at `s = n/N` (empirical) or `s = u²` (lattice).
    S,
    /// Atoms at `√s`, i.e. the horizontal coordinate `u`.
    RootS,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSample {
    atoms: Vec<f64>,
    param: Parametrization,
}

impl ProcessSample {
    /// Sorts the atoms; rejects negative or non-finite ones.
    pub fn new(mut atoms: Vec<f64>, param: Parametrization) -> Result<Self> {
        if let Some(bad) = atoms.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
            return Err(Error::Domain(format!(
                "atom {bad} is not a finite non-negative real"
            )));
        }
        atoms.sort_by(f64::total_cmp);
        Ok(ProcessSample { atoms, param })
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn param(&self) -> Parametrization {
        self.param
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atoms in the half-open interval `(a, b]`.
    pub fn count_in(&self, a: f64, b: f64) -> usize {
        let lo = self.atoms.partition_point(|&x| x <= a);
        let hi = self.atoms.partition_point(|&x| x <= b);
        hi.saturating_sub(lo)
    }

    /// Atoms `≤ h`.
    pub fn restrict(&self, h: f64) -> ProcessSample {
        let end = self.atoms.partition_point(|&x| x <= h);
        ProcessSample {
            atoms: self.atoms[..end].to_vec(),
            param: self.param,
        }
    }

    /// Converts between the `s` and `√s` parametrizations.
    pub fn to_param(&self, param: Parametrization) -> ProcessSample {
        let atoms = match (self.param, param) {
            (Parametrization::S, Parametrization::RootS) => {
                self.atoms.iter().map(|a| a.sqrt()).collect()
            }
            (Parametrization::RootS, Parametrization::S) => {
                self.atoms.iter().map(|a| a * a).collect()
            }
            _ => self.atoms.clone(),
        };
        ProcessSample { atoms, param }
    }
}

/// A finite union `∪ (a_j, b_j]` with `0 ≤ a_1 < b_1 ≤ a_2 < … < b_k`,
/// in the `s`-parametrization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalUnion {
    intervals: Vec<(f64, f64)>,
}

impl IntervalUnion {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::InvalidIntervals("no intervals".into()));
        }
        let mut prev = 0.0f64;
        for (i, &(a, b)) in intervals.iter().enumerate() {
            if !(a.is_finite() && b.is_finite()) {
                return Err(Error::InvalidIntervals(format!(
                    "interval {i} is not finite"
                )));
            }
            if a < 0.0 || a >= b {
                return Err(Error::InvalidIntervals(format!(
                    "interval {i} = ({a}, {b}] is empty or negative"
                )));
            }
            if i > 0 && a < prev {
                return Err(Error::InvalidIntervals(format!(
                    "interval {i} = ({a}, {b}] overlaps or is out of order"
                )));
            }
            prev = b;
        }
        Ok(IntervalUnion { intervals })
    }

    pub fn single(a: f64, b: f64) -> Result<Self> {
        IntervalUnion::new(vec![(a, b)])
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn sup(&self) -> f64 {
        self.intervals.last().map_or(0.0, |&(_, b)| b)
    }

    pub fn contains(&self, s: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < s && s <= b)
    }

    /// The planar set `D = ∪ T(b_j) \ T(a_j)`.
    pub fn to_region(&self) -> Region {
        Region::TriangleDifferences(self.intervals.clone())
    }
}

impl FromStr for IntervalUnion {
    type Err = Error;

    /// Parses `"a1,b1;a2,b2"`.
    fn from_str(text: &str) -> Result<Self> {
        let mut intervals = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part.split_once(',').ok_or_else(|| {
                Error::InvalidIntervals(format!("'{part}' is not of the form a,b"))
            })?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidIntervals(format!("'{t}': {e}")))
            };
            intervals.push((parse(a)?, parse(b)?));
        }
        IntervalUnion::new(intervals)
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.intervals.iter().enumerate() {
            if i > 0 {
                write!(f, ";")?;
            }
            write!(f, "{a},{b}")?;
        }
        Ok(())
    }
}

fn check_n(n_buckets: u64) -> Result<()> {
    if n_buckets == 0 {
        return Err(Error::Domain("N must be positive".into()));
    }
    if n_buckets > DEFAULT_MAX_BUCKETS {
        return Err(Error::Capacity {
            what: "buckets",
            requested: n_buckets,
            cap: DEFAULT_MAX_BUCKETS,
        });
    }
    Ok(())
}

/// Term range `⌊aN⌋ < n ≤ ⌊bN⌋`, i.e. `n/N ∈ (a, b]` up to the floor.
fn term_range(a: f64, b: f64, n_buckets: u64) -> Result<(u64, u64)> {
    Ok((term_count(a, n_buckets)? + 1, term_count(b, n_buckets)?))
}

/// Jump points of bucket `k`: `n/N` for every `n ≤ ⌊s_max N⌋` with
/// `frac(n^α)` in bucket `k`.
pub fn empirical_jumps(k: u64, n_buckets: u64, s_max: f64, alpha: Alpha) -> Result<ProcessSample> {
    check_n(n_buckets)?;
    if k >= n_buckets {
        return Err(Error::Domain(format!(
            "bucket {k} out of range for N = {n_buckets}"
        )));
    }
    frac_check(&alpha)?;
    let terms = term_count(s_max, n_buckets)?;
    let hits = std::sync::Mutex::new(Vec::new());
    par_for_each_bucket(1, terms, n_buckets, &alpha, false, |n, b| {
        if b == k {
            hits.lock().unwrap().push(n);
        }
    });
    let mut hits = hits.into_inner().unwrap();
    hits.sort_unstable();
    let atoms = hits
        .into_iter()
        .map(|n| n as f64 / n_buckets as f64)
        .collect();
    ProcessSample::new(atoms, Parametrization::S)
}

fn frac_check(alpha: &Alpha) -> Result<()> {
    sequence::frac_pow(1, alpha).map(|_| ())
}

/// Fraction of buckets receiving no term `n` with `n/N ∈ B`.
pub fn void_fraction(b: &IntervalUnion, n_buckets: u64, alpha: Alpha) -> Result<f64> {
    check_n(n_buckets)?;
    frac_check(&alpha)?;
    if b.sup() * n_buckets as f64 > MAX_TERMS as f64 {
        return Err(Error::Capacity {
            what: "sequence terms",
            requested: u64::MAX,
            cap: MAX_TERMS,
        });
    }
    let marks: Vec<AtomicBool> = (0..n_buckets).map(|_| AtomicBool::new(false)).collect();
    for &(lo, hi) in b.intervals() {
        let (first, last) = term_range(lo, hi, n_buckets)?;
        sequence::mark_buckets(&marks, first, last, &alpha, false);
    }
    let empty = marks.iter().filter(|m| !m.load(Ordering::Relaxed)).count();
    Ok(empty as f64 / n_buckets as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IncrementMoments {
    pub mean: f64,
    pub second_moment: f64,
}

/// Mean and second moment over buckets of `Y_b - Y_a`, the number of terms
/// with `⌊aN⌋ < n ≤ ⌊bN⌋` in each bucket.
pub fn increment_moments(
    a: f64,
    b: f64,
    n_buckets: u64,
    alpha: Alpha,
    squares_removed: bool,
) -> Result<IncrementMoments> {
    if !(a >= 0.0 && a < b) {
        return Err(Error::Domain(format!("need 0 ≤ a < b, got ({a}, {b})")));
    }
    check_n(n_buckets)?;
    frac_check(&alpha)?;
    let (first, last) = term_range(a, b, n_buckets)?;
    let counts = sequence::bucket_counts(n_buckets, first, last, &alpha, squares_removed)?;
    let total: u64 = counts.iter().map(|&c| c as u64).sum();
    let sq: u128 = counts.iter().map(|&c| (c as u128) * (c as u128)).sum();
    Ok(IncrementMoments {
        mean: total as f64 / n_buckets as f64,
        second_moment: sq as f64 / n_buckets as f64,
    })
}

/// Empirical counterpart of the lattice-side Minkowski argument: three
/// consecutive `s`-ranges `[a, b)`, and among buckets with exactly one term
/// in the middle range, how many have a term in one of the outer two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeighbourReport {
    pub conditioned: u64,
    pub with_neighbour: u64,
    /// Buckets with a term in the outer ranges, over all buckets.
    pub unconditional: f64,
}

impl NeighbourReport {
    pub fn conditional_fraction(&self) -> f64 {
        if self.conditioned == 0 {
            f64::NAN
        } else {
            self.with_neighbour as f64 / self.conditioned as f64
        }
    }
}

/// `s`-ranges matching the planar sets `0 ≤ u < 4`, `4 ≤ u < 5`, `5 ≤ u < 9`.
pub const MINKOWSKI_RANGES: [(f64, f64); 3] = [(0.0, 16.0), (16.0, 25.0), (25.0, 81.0)];

/// Terms `n ≥ 1` with `n/N ∈ [lo, hi)`.
fn half_open_range(lo: f64, hi: f64, n_buckets: u64) -> Result<(u64, u64)> {
    let n = n_buckets as f64;
    let first = (lo * n).ceil().max(1.0);
    let end = (hi * n).ceil();
    if end > MAX_TERMS as f64 {
        return Err(Error::Capacity {
            what: "sequence terms",
            requested: u64::MAX,
            cap: MAX_TERMS,
        });
    }
    Ok((first as u64, (end as u64).saturating_sub(1)))
}

pub fn neighbour_demo(
    n_buckets: u64,
    alpha: Alpha,
    ranges: [(f64, f64); 3],
) -> Result<NeighbourReport> {
    check_n(n_buckets)?;
    frac_check(&alpha)?;
    let (b_first, b_last) = half_open_range(ranges[1].0, ranges[1].1, n_buckets)?;
    let middle = sequence::bucket_counts(n_buckets, b_first, b_last, &alpha, false)?;
    let outer: Vec<AtomicBool> = (0..n_buckets).map(|_| AtomicBool::new(false)).collect();
    for r in [ranges[0], ranges[2]] {
        let (first, last) = half_open_range(r.0, r.1, n_buckets)?;
        sequence::mark_buckets(&outer, first, last, &alpha, false);
    }
    let mut report = NeighbourReport {
        conditioned: 0,
        with_neighbour: 0,
        unconditional: 0.0,
    };
    let mut any = 0u64;
    for (c, m) in middle.iter().zip(&outer) {
        let m = m.load(Ordering::Relaxed);
        any += m as u64;
        if *c == 1 {
            report.conditioned += 1;
            report.with_neighbour += m as u64;
        }
    }
    report.unconditional = any as f64 / n_buckets as f64;
    Ok(report)
}

/// Per-bucket counts over each interval of `B` separately; used to check
/// void/count consistency.
pub fn interval_counts(b: &IntervalUnion, n_buckets: u64, alpha: Alpha) -> Result<Vec<Vec<u32>>> {
    check_n(n_buckets)?;
    frac_check(&alpha)?;
    b.intervals()
        .iter()
        .map(|&(lo, hi)| {
            let (first, last) = term_range(lo, hi, n_buckets)?;
            sequence::bucket_counts(n_buckets, first, last, &alpha, false)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::{histogram, second_moment};
    use proptest::prelude::*;

    #[test]
    fn sample_basics() {
        let p = ProcessSample::new(vec![3.0, 1.0, 2.0], Parametrization::S).unwrap();
        assert_eq!(p.atoms(), &[1.0, 2.0, 3.0]);
        assert_eq!(p.count_in(1.0, 3.0), 2);
        assert_eq!(p.restrict(2.0).len(), 2);
        assert_eq!(p.to_param(Parametrization::RootS).atoms()[2], 3f64.sqrt());
        assert!(ProcessSample::new(vec![-1.0], Parametrization::S).is_err());
        assert!(ProcessSample::new(vec![f64::NAN], Parametrization::S).is_err());
    }

    #[test]
    fn interval_union_validation() {
        assert!(IntervalUnion::new(vec![(0.0, 1.0), (1.0, 2.0)]).is_ok());
        assert!(IntervalUnion::new(vec![(0.0, 1.0), (0.5, 2.0)]).is_err());
        assert!(IntervalUnion::new(vec![(1.0, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![(-1.0, 1.0)]).is_err());
        assert!(IntervalUnion::new(vec![]).is_err());
        let b: IntervalUnion = "0,1; 2,3".parse().unwrap();
        assert_eq!(b.intervals(), &[(0.0, 1.0), (2.0, 3.0)]);
        assert_eq!(b.to_string().parse::<IntervalUnion>().unwrap(), b);
        assert!("0,1;x,3".parse::<IntervalUnion>().is_err());
        assert!("0;1".parse::<IntervalUnion>().is_err());
        assert!(b.contains(1.0) && !b.contains(0.0) && !b.contains(1.5));
    }

    #[test]
    fn jumps_hand_example() {
        let p = empirical_jumps(0, 5, 1.0, Alpha::HALF).unwrap();
        assert_eq!(p.atoms(), &[0.2, 0.8]);
        assert!(empirical_jumps(2, 10, 0.0, Alpha::HALF).unwrap().is_empty());
        assert!(empirical_jumps(10, 10, 1.0, Alpha::HALF).is_err());
    }

    #[test]
    fn jumps_match_histogram() {
        let (n, s) = (997u64, 2.5);
        let h = histogram(n, s, Alpha::HALF, false).unwrap();
        for k in [0, 1, 17, 500, 996] {
            let p = empirical_jumps(k, n, s, Alpha::HALF).unwrap();
            assert_eq!(p.len(), h.counts[k as usize] as usize);
            assert_eq!(p.param(), Parametrization::S);
        }
    }

    #[test]
    fn void_single_term() {
        let b = IntervalUnion::single(0.0, 1.0 / 1000.0).unwrap();
        let v = void_fraction(&b, 1000, Alpha::HALF).unwrap();
        assert_eq!(v, 1.0 - 1.0 / 1000.0);
    }

    #[test]
    fn void_matches_counts() {
        let n = 5000;
        for text in ["0,1", "0,1;2,3", "0.5,1;1.5,2;2.5,3"] {
            let b: IntervalUnion = text.parse().unwrap();
            let counts = interval_counts(&b, n, Alpha::HALF).unwrap();
            let empty = (0..n as usize)
                .filter(|&k| counts.iter().all(|c| c[k] == 0))
                .count();
            let v = void_fraction(&b, n, Alpha::HALF).unwrap();
            assert_eq!(v, empty as f64 / n as f64);
        }
    }

    #[test]
    fn void_monotone_in_b() {
        let n = 20_000;
        let small = void_fraction(&"0,1".parse().unwrap(), n, Alpha::HALF).unwrap();
        let big = void_fraction(&"0,1;2,3".parse().unwrap(), n, Alpha::HALF).unwrap();
        assert!(big <= small);
    }

    #[test]
    fn increments() {
        let n = 1000;
        let m = increment_moments(1.0, 3.0, n, Alpha::HALF, false).unwrap();
        assert_eq!(m.mean, 2.0);
        let m = increment_moments(0.0, 1.3, n, Alpha::HALF, false).unwrap();
        let h = histogram(n, 1.3, Alpha::HALF, false).unwrap();
        assert_eq!(m.second_moment, second_moment(&h));
        assert!(increment_moments(1.0, 1.0, n, Alpha::HALF, false).is_err());
    }

    #[test]
    fn neighbour_demo_small() {
        let r = neighbour_demo(100_000, Alpha::HALF, MINKOWSKI_RANGES).unwrap();
        assert!(r.conditioned > 50);
        assert!(r.conditional_fraction() >= 0.99);
        assert!(r.unconditional < 1.0);
    }

    proptest! {
        #[test]
        fn root_round_trip(atoms in proptest::collection::vec(0.0f64..100.0, 0..20)) {
            let p = ProcessSample::new(atoms, Parametrization::S).unwrap();
            let back = p.to_param(Parametrization::RootS).to_param(Parametrization::S);
            for (x, y) in p.atoms().iter().zip(back.atoms()) {
                prop_assert!((x - y).abs() <= 1e-12 * x.max(1.0));
            }
        }
    }
}
