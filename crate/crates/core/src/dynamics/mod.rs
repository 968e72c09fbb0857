//! Time integration of the truncated flow, numeric flows of normal-form
//! generators, and the drift and near-identity measurements.

mod drift;
mod field;
mod integrator;
mod transform;

pub use drift::{drift_experiment, DriftRow, DriftSettings, DriftTable, DEFAULT_BOUND_CONSTANT};
pub use field::{CompiledField, CompiledPoly};
pub use integrator::{
    integrate, integrate_observed, linear_flow, IntegratorConfig, Scheme, Trajectory, DIVERGENCE_FACTOR,
};
pub use transform::{
    generator_flow, generator_flow_with_tol, near_identity_check, near_identity_check_with_tol,
    random_unit_state, transform_forward, transform_inverse, NearIdentityReport, NormalTransform, PowerFit,
    FLOW_TOL,
};
