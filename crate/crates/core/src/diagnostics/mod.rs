//! Energy ledger, dissipation, identity residuals and inequality checks
//! evaluated on simulation states.

mod apriori;
mod energy;
mod fit;
mod inequality;
mod recorder;
mod weak;

pub use apriori::{
    apriori_monitors, growth_sample, Checkpoint, GrowthMonitor, GrowthReport, MONITOR_COUNT, MONITOR_NAMES,
};
pub use energy::{
    dissipation_terms, energy_functional, fluid_energy_residual, signal_energy_via_psi, DiagnosticsRecord, Dissipation,
    DEFAULT_FLOOR,
};
pub use fit::{fit_energy_constant, EnergyFit, K_LOWER, K_UPPER};
pub use inequality::{functional_inequality_check, InequalityResult, BOUND_CONSTANT};
pub use recorder::{run_recorded, write_csv, Recorder, RunDiagnostics};
pub use weak::{time_bump, weak_residuals, WeakAccumulator, WeakReport, LIBRARY_SIZE};
