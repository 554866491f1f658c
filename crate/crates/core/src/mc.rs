//! Monte Carlo estimates of Haar integrals over the space of affine
//! unimodular lattices.
//!
//! Samples are drawn in fixed-size chunks; chunk `i` uses a ChaCha8 stream
//! seeded with `seed` on stream `i`, and chunk results are merged in index
//! order. Results therefore depend only on `(seed, n_samples)`, never on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::horocycle::TestFunction;
use crate::lattice::{sample_haar, AffineLattice};
use crate::process::IntervalUnion;
use crate::region::Region;

/// Samples per chunk.
pub const CHUNK_SAMPLES: u64 = 4096;
/// Default number of explicit bins in [`estimate_ej`].
pub const DEFAULT_J_MAX: usize = 16;
/// Smallest sample size accepted by [`minkowski_demo`].
pub const MINKOWSKI_MIN_SAMPLES: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: u64,
    pub seed: u64,
}

impl McEstimate {
    /// Proportion with binomial standard error.
    pub fn proportion(hits: u64, n: u64, seed: u64) -> McEstimate {
        let p = hits as f64 / n as f64;
        McEstimate {
            value: p,
            std_error: (p * (1.0 - p) / n as f64).sqrt(),
            n_samples: n,
            seed,
        }
    }

    /// Mean with standard error `sd/√n` from the sample sums `Σx`, `Σx²`.
    pub fn from_sums(sum: f64, sum_sq: f64, n: u64, seed: u64) -> McEstimate {
        let nf = n as f64;
        let mean = sum / nf;
        let var = if n > 1 {
            ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        McEstimate {
            value: mean,
            std_error: (var / nf).sqrt(),
            n_samples: n,
            seed,
        }
    }

    /// Whether `target` lies within `k` standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// Runs `chunk(rng, size)` over the chunks of `n_samples` in parallel and
/// returns the chunk results in chunk order.
pub fn run_chunks<A, F>(n_samples: u64, seed: u64, chunk: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> Result<A> + Sync,
{
    if n_samples == 0 {
        return Err(Error::Domain("n_samples must be positive".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK_SAMPLES);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i);
            let size = CHUNK_SAMPLES.min(n_samples - i * CHUNK_SAMPLES);
            chunk(&mut rng, size)
        })
        .collect()
}

/// Runs `f` on `n_samples` Haar-random lattices, in deterministic order
/// within each chunk.
pub fn for_each_lattice<A, F, I>(n_samples: u64, seed: u64, init: I, f: F) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&AffineLattice, &mut A) -> Result<()> + Sync,
{
    run_chunks(n_samples, seed, |rng, size| {
        let mut acc = init();
        for _ in 0..size {
            let sample = sample_haar(rng)?;
            f(&sample.lattice, &mut acc)?;
        }
        Ok(acc)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EjEstimates {
    pub s: f64,
    /// `E_j(s)` for `j = 0..=j_max`.
    pub e: Vec<McEstimate>,
    /// Mass above `j_max`.
    pub tail: McEstimate,
    /// Mean lattice count in `T(s)`; Siegel gives `s`.
    pub mean: McEstimate,
    /// Mean squared count, `Σ j² E_j(s)`.
    pub second_moment: McEstimate,
}

#[derive(Default)]
struct CountAcc {
    bins: Vec<u64>,
    sum: u128,
    sum_sq: u128,
    sum_4: u128,
}

/// Distribution of the lattice count in `T(s)` under Haar measure.
pub fn estimate_ej(s: f64, j_max: usize, n_samples: u64, seed: u64) -> Result<EjEstimates> {
    if !(s >= 0.0) || !s.is_finite() {
        return Err(Error::Domain(format!("s must be finite and ≥ 0, got {s}")));
    }
    let region = Region::triangle(s);
    let parts = for_each_lattice(
        n_samples,
        seed,
        || CountAcc {
            bins: vec![0; j_max + 2],
            ..Default::default()
        },
        |l, acc| {
            let c = l.count_in_region(&region)?;
            acc.bins[(c as usize).min(j_max + 1)] += 1;
            let c = c as u128;
            acc.sum += c;
            acc.sum_sq += c * c;
            acc.sum_4 += c * c * c * c;
            Ok(())
        },
    )?;
    let mut total = CountAcc {
        bins: vec![0; j_max + 2],
        ..Default::default()
    };
    for p in parts {
        for (t, b) in total.bins.iter_mut().zip(&p.bins) {
            *t += b;
        }
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        total.sum_4 += p.sum_4;
    }
    let e = total.bins[..=j_max]
        .iter()
        .map(|&h| McEstimate::proportion(h, n_samples, seed))
        .collect();
    Ok(EjEstimates {
        s,
        e,
        tail: McEstimate::proportion(total.bins[j_max + 1], n_samples, seed),
        mean: McEstimate::from_sums(total.sum as f64, total.sum_sq as f64, n_samples, seed),
        second_moment: McEstimate::from_sums(
            total.sum_sq as f64,
            total.sum_4 as f64,
            n_samples,
            seed,
        ),
    })
}

/// `m_X(no lattice point in D)` with `D = ∪ T(b_j) \ T(a_j)`.
pub fn estimate_void(b: &IntervalUnion, n_samples: u64, seed: u64) -> Result<McEstimate> {
    let region = b.to_region();
    let parts = for_each_lattice(
        n_samples,
        seed,
        || 0u64,
        |l, empty| {
            if l.count_in_region(&region)? == 0 {
                *empty += 1;
            }
            Ok(())
        },
    )?;
    Ok(McEstimate::proportion(parts.iter().sum(), n_samples, seed))
}

/// Mean of `|L ∩ T(b)| - |L ∩ T(a)|`, which Siegel's formula puts at `b - a`.
pub fn estimate_intensity(a: f64, b: f64, n_samples: u64, seed: u64) -> Result<McEstimate> {
    if !(a >= 0.0 && a < b && b.is_finite()) {
        return Err(Error::Domain(format!("need 0 ≤ a < b, got ({a}, {b})")));
    }
    let regions = [Region::triangle(a), Region::triangle(b)];
    let parts = for_each_lattice(
        n_samples,
        seed,
        || (0u64, 0u128),
        |l, acc| {
            let c = l.count_in_regions(&regions)?;
            let d = c[1] - c[0];
            acc.0 += d;
            acc.1 += (d as u128) * (d as u128);
            Ok(())
        },
    )?;
    let (sum, sum_sq) = parts
        .iter()
        .fold((0u64, 0u128), |(s, q), &(a, b)| (s + a, q + b));
    Ok(McEstimate::from_sums(
        sum as f64,
        sum_sq as f64,
        n_samples,
        seed,
    ))
}

/// Haar mean of the lattice count in an arbitrary region.
pub fn estimate_mean_count(region: &Region, n_samples: u64, seed: u64) -> Result<McEstimate> {
    let parts = for_each_lattice(
        n_samples,
        seed,
        || (0u64, 0u128),
        |l, acc| {
            let c = l.count_in_region(region)?;
            acc.0 += c;
            acc.1 += (c as u128) * (c as u128);
            Ok(())
        },
    )?;
    let (sum, sum_sq) = parts
        .iter()
        .fold((0u64, 0u128), |(s, q), &(a, b)| (s + a, q + b));
    Ok(McEstimate::from_sums(
        sum as f64,
        sum_sq as f64,
        n_samples,
        seed,
    ))
}

/// Haar integral of a test function.
pub fn haar_expectation(f: &TestFunction, n_samples: u64, seed: u64) -> Result<McEstimate> {
    let parts = for_each_lattice(
        n_samples,
        seed,
        || (0.0f64, 0.0f64),
        |l, acc| {
            let v = f.eval(l)?;
            acc.0 += v;
            acc.1 += v * v;
            Ok(())
        },
    )?;
    let (sum, sum_sq) = parts
        .iter()
        .fold((0.0, 0.0), |(s, q), &(a, b)| (s + a, q + b));
    Ok(McEstimate::from_sums(sum, sum_sq, n_samples, seed))
}

/// The planar sets `Ã = {0 ≤ u < 4}`, `B̃ = {4 ≤ u < 5}`, `C̃ = {5 ≤ u < 9}`
/// inside the cone `|v| ≤ u`.
pub fn minkowski_regions() -> [Region; 3] {
    [
        Region::ConeBand {
            u_min: 0.0,
            u_max: 4.0,
        },
        Region::ConeBand {
            u_min: 4.0,
            u_max: 5.0,
        },
        Region::ConeBand {
            u_min: 5.0,
            u_max: 9.0,
        },
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiResult {
    /// Among lattices with exactly one point in `B̃`, the fraction with a
    /// point in `Ã ∪ C̃`.
    pub conditional: McEstimate,
    /// Fraction of all lattices with a point in `Ã ∪ C̃`.
    pub unconditional: McEstimate,
    /// Conditioned lattices without a point in `Ã ∪ C̃`.
    pub counterexamples: u64,
}

pub fn minkowski_demo(n_samples: u64, seed: u64) -> Result<MinkowskiResult> {
    if n_samples < MINKOWSKI_MIN_SAMPLES {
        return Err(Error::Domain(format!(
            "minkowski_demo needs at least {MINKOWSKI_MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    let regions = minkowski_regions();
    // (conditioned, conditioned with neighbour, any neighbour)
    let parts = for_each_lattice(
        n_samples,
        seed,
        || (0u64, 0u64, 0u64),
        |l, acc| {
            let c = l.count_in_regions(&regions)?;
            let outer = c[0] + c[2] > 0;
            if c[1] == 1 {
                acc.0 += 1;
                acc.1 += outer as u64;
            }
            acc.2 += outer as u64;
            Ok(())
        },
    )?;
    let (cond, hit, any) = parts
        .iter()
        .fold((0, 0, 0), |(a, b, c), &(x, y, z)| (a + x, b + y, c + z));
    if cond == 0 {
        return Err(Error::ConditioningStarved { samples: n_samples });
    }
    Ok(MinkowskiResult {
        conditional: McEstimate::proportion(hit, cond, seed),
        unconditional: McEstimate::proportion(any, n_samples, seed),
        counterexamples: cond - hit,
    })
}
