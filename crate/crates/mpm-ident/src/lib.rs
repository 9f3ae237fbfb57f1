//! Differentiable MLS-MPM continuum simulation with material system
//! identification from optical flow.
//!
//! The library simulates elastic, plastic, granular, and fluid materials with
//! the Moving Least Squares Material Point Method, synthesizes dense optical
//! flow from the simulated motion as seen by a pinhole camera, and recovers
//! material parameters (Young's modulus, Poisson ratio, yield stress,
//! viscosity, shear/bulk moduli, friction angle) by first-order optimization
//! of the flow discrepancy against observed flow fields. Sensitivities are
//! carried through the entire pipeline by forward-mode dual numbers, so the
//! loss gradient with respect to every active parameter comes out of a single
//! simulation pass.
//!
//! Modules:
//! - [`math`]: dual scalar, 3×3 linear algebra, SVD / polar decomposition
//! - [`constitutive`]: the seven material models and their return mappings
//! - [`engine`]: the MLS-MPM time stepper, boundaries, external forces
//! - [`flow`]: camera projection, flow synthesis, `.flo` I/O, flow loss
//! - [`scene`]: scene files, particle sampling, point-cloud ingestion
//! - [`identify`]: parameter transforms, priors, the optimization loop
//! - [`cli`]: the command implementations behind the `mpm-ident` binary
//!
//! See the crate examples for runnable entry points into each capability.

pub mod cli;
pub mod constitutive;
pub mod engine;
pub mod error;
pub mod flow;
pub mod identify;
pub mod math;
pub mod scene;

pub use error::{Error, Result};
