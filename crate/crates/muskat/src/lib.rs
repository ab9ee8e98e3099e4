//! Pseudo-spectral simulation and stability analysis for one-phase and
//! two-phase Darcy interface flow on the periodic strip.
//!
//! The interface is a graph `y = f(x)` over the circle, advanced by nonlocal
//! evolution laws of convolution type:
//!
//! * [`kernels::Pe1System`]: the single-density law without surface tension,
//!   where the jump in density drives the interface through a principal-value
//!   kernel built from half-angle tangents.
//! * [`kernels::Pe2System`]: the two-viscosity law with surface tension, where
//!   a vorticity density on the interface is recovered from a second-kind
//!   integral equation before the normal velocity is evaluated.
//!
//! Space is discretized on a uniform grid with spectral-accuracy FFT calculus
//! ([`torus`]), the singular convolutions with a midpoint rule on nodes placed
//! symmetrically around the singularity ([`kernels`]), and time with explicit
//! or linearly implicit Runge-Kutta schemes ([`dynamics`]). The [`stability`]
//! module assembles finite-difference Jacobians on trigonometric bases,
//! classifies spectra, fits exponential rates to recorded norm histories, and
//! probes unstable configurations for escape times. The [`harness`] module
//! binds everything to TOML-configured experiments with deterministic JSON and
//! CSV output.
//!
//! Every routine is deterministic: reruns with the same configuration produce
//! bitwise identical states and data files.

pub mod dynamics;
pub mod harness;
pub mod kernels;
pub mod stability;
pub mod torus;

/// Floating-point scalar used throughout the crate.
///
/// The kernels lean on `tanh`/`tan` evaluations near a removable singularity
/// and on eigensolves of dense linearizations; the tolerances baked into the
/// library and its tests are calibrated for double precision.
pub type Scalar = f64;

pub use dynamics::{integrate, picard_lambda, semiflow_defect, DynamicsError, TimeScheme};
pub use kernels::{KernelError, MuskatParamsNoSt, MuskatParamsSt, Pe1System, Pe2System, PvRule};
pub use stability::{eigen_spectrum, instability_probe, jacobian, StabilityError};
pub use torus::{FourierCoeffs, GridFunction, TorusError};
