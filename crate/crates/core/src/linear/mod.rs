//! Linearized theory around a homogeneous equilibrium: the memory kernel,
//! the decoupled Volterra equation for each density mode, the strip
//! functionals used to certify stability, and decay-rate extraction.

mod duhamel;
mod fit;
mod kernel;
mod roots;
mod stability;
mod volterra;

pub use duhamel::linear_h_tilde;
pub use fit::{fit_decay_rate, DecayFit, DECAY_FIT_FLOOR};
pub use kernel::{dispersion_l, fourier_laplace_k0, kernel_k0, StripEvaluator, StripQuadrature};
pub use roots::{root_scan, unstable_root_count, RootScan, RootScanSpec};
pub use stability::{
    check_cond_l, check_condition_a, check_condition_b, strength_threshold, StabilityReport, StripGrid,
};
pub use volterra::{solve_volterra, ModeHistory};
