//! Exact-attack search: residual system and least-squares multistart.

pub mod explicit;
pub mod residuals;
pub mod search;

pub use residuals::{build_residuals, sum_of_squares, ResidualSystem, SearchMode};
pub use explicit::{
    check_solution, explicit_solution, printed_solution, verify_explicit, verify_explicit_by_name, ExplicitName, ExplicitReport,
    ExplicitSolution, EXPLICIT_TOL,
};
pub use search::{
    classify_angles, classify_angles_with, folded_angles, least_squares_search, least_squares_search_streams,
    least_squares_search_with, verify_candidate, AngleOutcome, Classification, ClassifyRow, ExactConfig,
    ExactSearchResult, RestartOutcome, MAX_D, VERIFY_DDC, VERIFY_P_ERR, VERIFY_UNITARITY,
};
