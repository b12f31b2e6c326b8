//! Stein operators `η g' + γ g` for a general absolutely continuous target.

mod bounds;
mod coefficients;
mod families;
mod lift;
mod solution;
mod spec;
mod test_function;

pub use bounds::{
    bound_bounded, bound_bounded_for, bound_lipschitz, plugin_bound, sup_abs, BoundReport,
    FunctionNorms, LipschitzPointBound, PairRegressionReport,
};
pub(crate) use bounds::measurement_range;
pub use coefficients::{
    compute_eta, density_from_coefficients, eta_at, find_x0, gamma_integral, gamma_integral_fast,
    mills_limit_estimate, stein_kernel, validate_spec, DivergenceTrend, Endpoint, MillsEstimate,
    MillsVerdict, Reconstruction, ValidationReport,
};
pub use families::Sawtooth;
pub use lift::{derivative_lift, lift_test_function};
pub(crate) use solution::neumaier;
pub use solution::{characterization_residual, kolmogorov_solution, standard_solution, Measure, SteinSolution};
pub use spec::{DistributionSpec, RealFn, SpecBuilder, SupportInterval, CORE_TAIL_MASS};
pub use test_function::{Norm, NormCheck, PolynomialPiece, Smoothness, TestFunction};
