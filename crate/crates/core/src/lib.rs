//! Numerical laboratory for Landau damping in the Vlasov equation on the
//! one-dimensional torus.
//!
//! * [`models`]: equilibrium profiles and interaction potentials.
//! * [`linear`]: memory kernel, Volterra mode equations, stability functionals.
//! * [`sim`]: split-step spectral solver for the nonlinear equation.
//! * [`norms`]: analytic hybrid norms as truncated diagnostics.
//! * [`echoes`]: echo kernel, echo timing and two-pulse experiments.
//!
//! Fourier conventions throughout: `f^(k) = int_T f(x) exp(-2 i pi k x) dx` and
//! `f~(eta) = int_R f(v) exp(-2 i pi eta v) dv`.

pub mod echoes;
pub mod error;
pub mod linear;
pub mod models;
pub mod norms;
pub mod quadrature;
pub mod sim;

pub use error::{Error, Result};
pub use num_complex::Complex64;
