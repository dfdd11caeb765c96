//! Local optimizers used by the search engines.

pub mod lbfgs;
pub mod lm;

pub use lbfgs::{lbfgs, LbfgsConfig, LbfgsOutcome, LbfgsStop, Objective};
pub use lm::{levenberg_marquardt, LeastSquaresProblem, LmConfig, LmOutcome, LmStop, SparseJacobian};
