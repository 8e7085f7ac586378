//! Numerical laboratory for the fractional Laplacian with homogeneous
//! Dirichlet exterior condition on bounded 1D and 2D domains.
//!
//! The crate discretizes `(-Δ)^s` by singular-integral quadrature, solves
//! the elliptic and parabolic Dirichlet problems, estimates fractional
//! Sobolev and Besov (semi)norms, and turns interior regularity statements
//! into refinement experiments.

pub mod elliptic;
pub mod error;
pub mod exact;
pub mod grid;
pub mod localization;
pub mod operator;
pub mod parabolic;
pub mod probe;
pub mod profiles;
pub mod spaces;

pub use elliptic::{residual_check, solve_dirichlet, DirichletSolver};
pub use error::{Error, Result};
pub use exact::{torsion_constant, torsion_solution};
pub use grid::{
    build_cutoff, build_grid, build_window, extend_by_zero, CutoffSpec, Grid, GridFunction, Region,
};
pub use localization::{g_bound_monitor, localized_rhs, product_rule_residual, remainder_is, GBoundReport};
pub use operator::{
    apply_fractional_laplacian, assemble_operator_matrix, normalization_constant,
    FractionalLaplacian, FractionalParams, KernelWeights, OperatorMatrix,
};
pub use parabolic::{
    energy_report, semigroup_apply, solve_parabolic, solve_parabolic_from, EnergyReport, Modulation, Semigroup, Source,
    Trajectory,
};
pub use probe::{estimate_local_exponent, parabolic_regularity_report, Method, RegularityEstimate};
pub use profiles::Profile;
pub use spaces::{
    besov_seminorm, gagliardo_seminorm, lp_norm, potential_norm, sobolev_seminorm, DivergenceRule,
    NormReport, Scope, Verdict,
};
