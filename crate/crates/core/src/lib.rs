//! Numerical laboratory for random and monitored quantum circuits.
//!
//! The same observables (purities, Rényi entropies, learnability of the
//! initial state) are computed three ways:
//!
//! * state-vector trajectories ([`qstate`], [`circuit`], [`learn`]),
//! * exact transfer-matrix contraction of the replica permutation model
//!   ([`replica`], [`statmech`]),
//! * minimal-cut geometry in the planar dual of the circuit ([`mincut`]).
//!
//! Randomness is addressed through [`haar::RandomStream`], so every
//! Monte-Carlo estimate is reproducible bit-for-bit and independent of the
//! number of worker threads.

pub mod circuit;
pub mod haar;
pub mod learn;
pub mod mincut;
pub mod qstate;
pub mod replica;
pub mod stats;
pub mod statmech;

pub use num_complex::Complex64 as C64;
