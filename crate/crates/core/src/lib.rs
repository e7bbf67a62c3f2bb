//! Density of k-free numbers along α-random walks on the integers.
//!
//! A walker starts at `r` and steps `+a` with probability `α`, `+b`
//! otherwise. For `k >= 3` the fraction of visited positions that are k-free
//! converges almost surely to the Euler product θ_k(a, b, r), whatever the
//! value of `α`. This crate computes that constant, evaluates the hit
//! probabilities and the mean and variance of the hit fraction exactly,
//! simulates the walk reproducibly, and counts k-free numbers with a
//! segmented sieve as a classical baseline.
//!
//! Modules:
//! - [`arith`]: gcd, Möbius and k-free sieves, ζ(k) partial sums
//! - [`constants`]: θ_k, β_k, 1/ζ(k), f(i), M_k
//! - [`exactdist`]: binomial sums and exact moments, full-path oracle
//! - [`montecarlo`]: seeded simulation and convergence diagnostics
//! - [`counting`]: Q_k(N) and Q_k(N; q, r)
//! - [`verify`]: the self-check suite behind `kfreewalk verify`

pub mod arith;
pub mod constants;
pub mod counting;
pub mod error;
pub mod exactdist;
pub mod montecarlo;
pub mod stats;
pub mod verify;

pub use constants::{DensityConstant, DensityKind, WalkParams, DEFAULT_PRIME_LIMIT};
pub use error::{Error, Result};
