//! Exact majorization machinery for finite probability vectors.
//!
//! The crate decides when `n` copies of a distribution `p` majorize a
//! correlated `n`-copy state whose single-subsystem marginals are all exactly
//! `p'`, certifies the answer in rational arithmetic, and searches for an
//! explicit catalyst/permutation pair realising the transition `p -> p'`.
//!
//! Module map:
//!
//! - [`dist`]: exact distributions, tensor powers, marginals.
//! - [`lp`]: exact rational simplex with Farkas certificates.
//! - [`majorization`]: partial-sum predicate and T-transform witnesses.
//! - [`entropy`]: Shannon, rank and smooth min/max entropies.
//! - [`typicality`]: the `n_eps`/`eps` formulas and smooth majorization.
//! - [`sn`]: membership in the set of achievable average marginals.
//! - [`geometry`]: distance to polytopes and a ball-coverage check.
//! - [`cec`]: the end-to-end necessary/sufficient pipeline and catalysts.

pub mod cec;
pub mod dist;
pub mod entropy;
pub mod error;
mod fastq;
pub mod geometry;
pub mod limits;
pub mod lp;
pub mod majorization;
pub mod rational;
pub mod sn;
pub mod type_class;
pub mod typicality;

pub use dist::{Dist, FloatDist, JointDist};
pub use error::{Error, Result};
pub use limits::Limits;
pub use rational::Rational;
