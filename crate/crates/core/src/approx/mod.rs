//! Approximate attacks: unitary-manifold coordinates and multistart
//! quasi-Newton minimization of the error probability.

pub mod manifold;
pub mod objective;
pub mod search;

pub use manifold::{n_coords, retract, ManifoldParam, ParamKind, Field};
pub use objective::{min_branch_gap, objective_and_gradient, PErrObjective, StrategyLayout};
pub use search::{
    minimize_multibase, minimize_multibase_with, minimize_p_err, minimize_p_err_streams, minimize_p_err_with,
    sweep_theta, sweep_theta_with, uniform_grid, ApproxConfig, SearchResult, StartOutcome, SweepPoint, SweepResult,
};
