//! Numerical laboratory for entanglement-limited attacks on the `QPV_θ`
//! family of quantum position verification protocols.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the command line and the parallel
//! restart runner live in the companion `qpv` crate.
//!
//! Module map:
//!
//! - [`qcore`]: dense complex matrices, the protocol/attack state model,
//!   the spacetime-circuit oracle and the two-qubit KAK parameters.
//! - [`errmodel`]: the attack error probability, the deterministic
//!   distinguishability predicate, decoders and closed-form baselines.
//! - [`exact`]: polynomial residual system and least-squares search for
//!   exact attacks.
//! - [`approx`]: unitary-manifold parametrizations and multistart
//!   quasi-Newton minimization of the error probability.
//! - [`graphs`]: hypergraph support enumeration behind the d = 2, 3 no-go
//!   results.
//! - [`optim`]: the Levenberg-Marquardt and L-BFGS engines.
//! - [`multistart`]: deterministic per-restart seeding and the runner trait.
#![no_std]
#![deny(rust_2018_idioms)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod approx;
pub mod errmodel;
mod error;
pub mod exact;
pub mod graphs;
pub mod multistart;
pub mod optim;
pub mod qcore;

pub use error::{DdcConflict, QpvError};

/// Result alias used across the crate.
pub type Result<T, E = QpvError> = core::result::Result<T, E>;
