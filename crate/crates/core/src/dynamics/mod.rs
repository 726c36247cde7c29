//! Parametrized vector fields, the integrator, and the built-in families.

pub mod builtin;
pub mod expr;
pub mod flow;
pub mod integrate;

pub use builtin::{
    builtin_by_name, builtin_lorenz, eqn1, eqn1_radial_velocity, fibonacci_sphere, figure_eight, lorenz, saddle,
    sink, sparrow_trapping_radius, sparrow_v, sparrow_v_dot, zero_field, LorenzParams,
};
pub use expr::{load_vector_field, parse_vector_field};
pub use flow::{FieldFn, ParametrizedFlow, TrappingEllipsoid};
pub use integrate::{
    circumradius, integrate, integrate_with, EscapePolicy, IntegratorSettings, Outcome, Stepper, Trajectory,
};

/// Alias kept for callers that prefer the `builtin_` prefix on both families.
pub fn builtin_eqn1() -> ParametrizedFlow {
    eqn1()
}
