//! Vorticity dynamics for the second-grade, damped Euler and Navier-Stokes
//! models, with the Gevrey radius carried along.

mod params;
pub mod presets;
mod rhs;
mod simulation;
mod stepper;
mod tau;

pub use params::{FlowState, LawCVariant, ModelKind, ModelParams, TauLaw};
pub use rhs::{evaluate_rhs, nonlinear_term, Nonlinear};
pub use simulation::{run_simulation, DiagnosticsRecord, RunOptions, SimulationError, Trajectory};
pub use stepper::{advance, default_dt, Step, Stepper, CFL_LIMIT};
pub use tau::{law_d_integral, law_d_tau, tau_rhs, z_w_norms, LawCInputs, TauContext};
