//! Stabilization-free SUPG virtual element method for steady 2D
//! advection-diffusion on polygonal meshes.
//!
//! The crate is organized bottom-up:
//!
//! * [`polymesh`]: polygonal meshes, the benchmark mesh families, element
//!   geometry (kernel, star center, quadrature) and the JSON mesh format.
//! * [`polybasis`]: scaled monomials, derivative maps and Gram matrices.
//! * [`vemspace`]: DOF layout of the enlarged-enhancement space and every
//!   computable projector.
//! * [`sfsupg`]: SUPG parameters, the coercivity probe selecting `ell`, the
//!   local discrete forms and the stabilized baseline.
//! * [`assembly`]: global assembly, Dirichlet elimination, sparse solve,
//!   energy error and VTK export.
//! * [`labcli`]: problem registry and experiment drivers used by the CLI.

pub mod assembly;
pub mod error;
pub mod labcli;
pub mod polybasis;
pub mod polymesh;
pub mod sfsupg;
pub mod vemspace;

mod dense;

pub use error::{Result, VemError};

/// A point (or vector) in the plane.
pub type Point = nalgebra::Vector2<f64>;
