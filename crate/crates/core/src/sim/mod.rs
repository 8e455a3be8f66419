//! Split-step spectral solver for the nonlinear Vlasov equation on
//! `T x [-V, V]`, with the observables recorded along a run.

mod field;
mod perturbation;
mod run;
mod stepper;

pub use field::PhaseSpaceField;
pub use perturbation::{init_state, Kick, ModePerturbation, PerturbationSpec, VelocityShape, CUTOFF_THRESHOLD};
pub use run::{
    asymptotic_profile, potential_energy, recurrence_time, run, run_observed, AsymptoticProfile, FtildeSample,
    ObservableLog, RunConfig, Simulation, TRUST_FRACTION,
};
pub use stepper::{force_field, strang_step, Stepper, FILTER_ORDER};

pub(crate) use field::{signed_freq, transform_v};
