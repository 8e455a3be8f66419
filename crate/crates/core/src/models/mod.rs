//! Equilibrium velocity profiles and interaction potentials, together with
//! numerical checks of the analyticity and decay hypotheses they must meet.

mod interaction;
mod profile;

pub use interaction::{builtin_interaction, verify_cond_w, CondWReport, Interaction, InteractionKind};
pub use profile::{
    builtin_profile, marginal_phi, marginal_phi_derivative, verify_cond_f0, CondF0Report,
    GaussianComponent, ProfileFamily, VelocityProfile, GRADIENT_SERIES_ORDER,
};
