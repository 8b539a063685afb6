//! Sublinear expectation calculus driven by the G-heat equation.
//!
//! The crate evaluates G-expectations of cylinder functionals through an
//! explicit monotone PDE solver, simulates G-Brownian motion one volatility
//! scenario at a time, and checks the stochastic calculus built on top of it:
//! quadratic variation, Itô integrals, the G-Itô formula, G-martingales,
//! Jensen's inequality for G-convex functions and Picard iteration for SDEs.

pub mod error;
pub mod expectation;
pub mod gnormal;
pub mod martingale;
pub mod paths;
pub mod payoff;
pub mod pde;
pub mod quadrature;
pub mod risk;
pub mod rng;
pub mod sde;
pub mod sublinear;

pub use error::{Error, Result};
pub use expectation::{
    conditional_expect, expect, lp_norm, verify_appendix_inequalities, verify_expectation_axioms, AxiomBattery,
    AxiomReport, ConditionalValue, CylinderFunctional,
};
pub use gnormal::{
    concave_payoff_value, convex_payoff_value, moment_abs, moment_even_signed, quadratic_form_value, GNormalParams,
};
pub use martingale::{
    compensated_martingale_check, is_g_convex, jensen_check, submartingale_check, GConvexReport, JensenReport,
    MartingaleReport, ProbeSet, ScalarFunction2, SubmartingaleReport,
};
pub use paths::{
    bochner_integral, generate_path, generate_path_indexed, integral_wrt_qv, ito_integral, mutual_variation,
    quadratic_variation, sample_scenarios, scenario_sup_expect, Budget, Partition, SamplePath, ScenarioControl,
    ScenarioSamples, SimpleProcess, SupEstimate,
};
pub use payoff::Payoff;
pub use pde::{
    evaluate_pt, semigroup_compose, solve_gheat_1d, solve_gheat_diag, BoundaryPolicy, Grid1D, GridFunction,
    GridFunction2, SolveDiagnostics, SolverConfig,
};
pub use risk::{risk_demo, RiskClaim, RiskDemoSpec, RiskReport, TraderView};
pub use sde::{
    euler_solve, ito_refinement, ito_residual, picard_contraction, picard_weight, Field, InitialGuess, ItoIngredients,
    ItoResidual, PicardConfig, PicardReport, RefinementReport, SdeSpec, Smooth, StatePath,
};
pub use sublinear::{
    check_domination, directional_sigmas, g_directional, g_value, sigma_of, Direction, DominationReport, Matrix,
    SymMatrix, UncertaintySet,
};
