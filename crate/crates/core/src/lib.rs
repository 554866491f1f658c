//! Pigeonhole statistics of `n^α mod 1` and their lattice limits.
//!
//! The empirical side ([`sequence`], [`process`]) counts how the first `sN`
//! terms fall into `N` equal buckets of the circle. The limit side
//! ([`lattice`], [`mc`]) counts points of Haar-random affine unimodular
//! lattices in triangles, and [`horocycle`] connects the two.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod group;
pub mod horocycle;
pub mod lattice;
pub mod mc;
pub mod process;
pub mod region;
pub mod sequence;

pub use error::{Error, Result};
pub use group::GroupElement;
pub use horocycle::{HorocycleSection, TestFunction};
pub use lattice::AffineLattice;
pub use mc::McEstimate;
pub use process::{IntervalUnion, Parametrization, ProcessSample};
pub use region::{BoundingBox, Region};
pub use sequence::{Alpha, PigeonholeHistogram};
