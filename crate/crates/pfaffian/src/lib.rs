//! Exact-arithmetic engine for meromorphic Pfaffian systems in PDE form
//!
//!   x_i^{p_i} ∂y/∂x_i = f_i(x, y),   i = 1..m,
//!
//! with polynomial right-hand sides over the rationals. The crate
//! computes truncated formal power-series solutions degree by degree,
//! checks complete integrability through the defect vectors F_ij,
//! evaluates a family of convergence criteria with certificates, and
//! offers empirical growth diagnostics for the computed coefficients.

pub mod criteria;
pub mod diagnostics;
pub mod docs;
pub mod integrability;
pub mod parse;
pub mod poly;
pub mod rat;
pub mod series;
pub mod solver;
pub mod system;
pub mod verdict;

pub use criteria::{
    check_theorem_1, check_theorem_4, check_theorem_a, check_theorem_b, check_theorem_c,
    integer_eigs, run_all, CharPoly, CriteriaOptions, CriteriaReport,
};
pub use diagnostics::{degree_profile, gevrey_fit, radius_estimate, GevreyFit, GrowthProfile, Ray};
pub use docs::{SolutionDocument, SystemDocument};
pub use integrability::{
    check_theorem2, check_theorem3, compat_defect, defect_on_solution,
    is_completely_integrable, DefectSet,
};
pub use parse::parse_expression;
pub use poly::{jacobian_y, jacobian_y_at_origin, Poly, PolyMap, RatMat};
pub use rat::{format_rat, parse_rat, Rat};
pub use series::{MultiIndex, Series, SeriesMat, SeriesVec};
pub use solver::{
    layered_solve_axis1, residual, restricted_jacobian_A, solve_formal, verify, FormalSolution,
    FreePolicy, LedgerEntry, SolveReport, SolveStatus,
};
pub use system::{system_from_expressions, PfaffianSystem};
pub use verdict::{Certificate, TheoremId, Verdict, VerdictStatus};
