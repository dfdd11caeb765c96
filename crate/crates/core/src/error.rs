use alloc::string::String;
use alloc::vec::Vec;

/// A `(b, s, u)` outcome where both values of `x` have non-negligible amplitude.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdcConflict {
    pub basis: usize,
    pub s: usize,
    pub u: usize,
    /// `|⟨u|ψ_b(0,s)⟩ · ⟨u|ψ_b(1,s)⟩|`
    pub product: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum QpvError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not unitary: max |M†M - I| = {deviation:.3e} > {tolerance:.1e}")]
    NotUnitary { deviation: f64, tolerance: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is singular to working precision")]
    Singular,
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("deterministic distinguishability violated at {} outcome(s), worst product {worst:.3e}", conflicts.len())]
    DdcViolated {
        conflicts: Vec<DdcConflict>,
        worst: f64,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
