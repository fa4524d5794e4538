//! Exact grid quantum mechanics used as a reference: eigenstates, the discrete
//! Weyl–Wigner transform, the Moyal product and a Lindblad integrator.

mod grid;
mod master;
mod star;
mod state;
mod transform;

pub use grid::*;
pub use master::*;
pub use star::*;
pub use state::*;
pub use transform::*;
