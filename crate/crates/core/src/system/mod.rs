//! The ε-regularized chemotaxis-Navier-Stokes system and its time stepper.

mod init;
mod params;
mod smoother;
mod state;
mod stepper;

pub use init::{make_initial_data, InitPreset, PresetKind};
pub use params::{SimParams, DEFAULT_CFL_GUARD};
pub use smoother::{f_eps, f_eps_prime};
pub use state::State;
pub use stepper::{run, step, Stepper};
