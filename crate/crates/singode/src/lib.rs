//! Uniqueness analysis for linear ODEs whose coefficients are singular at
//! the origin.
//!
//! Given `y^(n) + a_{n-1}(x) y^(n-1) + ... + a_0(x) y = 0` on an interval
//! around 0, this crate estimates the singularity weights
//! `c_k = limsup_{x->0} |x|^{n-k} |a_k(x)|`, evaluates the `1/e` and
//! `1/B_n` uniqueness criteria and the flatness-order bound
//! `floor(B_n C_n + n - 1)`, and ships the machinery used to exhibit the
//! boundary cases: exact generalized power series, an adaptive
//! integrator that approaches the singular point from one side, log-log
//! vanishing-order estimation, and a scanner for the minimal constant in
//! the derivative inequality `|f^(n)| <= C sum_k |f^(k)|/|x|^{n-k}`.
//!
//! The `singode` binary exposes all of it: `analyze` a problem file,
//! `demo` the built-in example families, dump exact `series`,
//! `verify-bound`, and `scan`.

pub mod cli;
pub mod criteria;
pub mod expr;
pub mod model;
pub mod numerics;
pub mod series;

pub use criteria::{
    b_constant, b_constant_exact, c_constant, check_uniqueness, estimate_weight,
    vanishing_order_bound, CriteriaReport, SingularityWeight, Tolerances, Verdict,
};
pub use expr::{evaluate, parse, Expr, Precision};
pub use model::{load_problem, CoefficientSpec, InitialData, OdeProblem};
pub use numerics::{
    geometric_grid, integrate, minimal_c_scan, vanishing_slope, MinimalCScan, ReferenceSolution,
    SampleGrid, SlopeEstimate, Trajectory, TrajectoryStatus,
};
pub use series::{
    bessel_series, indicial_roots, ode_residual, GeneralizedPowerSeries, IndicialRoots,
    LaurentOde, LaurentPolynomial, RationalSeries,
};
