//! Phase-space primitives, Hamilton's equations and shell averages.

pub mod field;
pub mod flow;
pub mod point;

pub use field::{
    central_difference, poisson_bracket, FnField, HamiltonianSystem, Monomial, Pendulum,
    Polynomial, Potential, ScalarField,
};
pub use flow::{
    enclosed_area, flow_point, flow_steps, flow_with, hamiltonian_flow, locate_orbit,
    orbit_samples, shell_average, shell_minimum, shell_average_with, symplectic_step, FlowConfig,
    PeriodicOrbit, Trajectory, DEFAULT_DT,
};
pub use point::{symplectic_form, symplectic_form_nd, triangle_area, triangle_area_nd, PhaseSpacePoint};
