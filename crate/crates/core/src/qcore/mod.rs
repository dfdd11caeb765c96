//! Matrices, the protocol model and gate-level utilities.

pub mod kak;
pub mod linalg;
pub mod matrix;
pub mod model;
pub mod spacetime;

pub use kak::{canonical_gate, kak_nonlocal_params, u_theta, KakParams};
pub use matrix::{gates, ComplexMatrix, UnitaryMatrix, C64, UNITARY_TOL};
pub use model::{
    fold_angle, is_classical, output_states, rotation_matrix, AttackStrategy, OutputStateTable,
    ProtocolSpec,
};
pub use spacetime::{reduce_spacetime, simulate_spacetime, SpacetimeOutcome, SpacetimeStrategy};
