//! Finite-volume solver kit for one-dimensional hyperbolic balance laws with
//! stiff relaxation sources,
//!
//! ```text
//! U_t + F(U)_x = g(U) / eps,
//! ```
//!
//! built around the CS-EBT2 scheme: a Nessyahu–Tadmor staggered central
//! scheme whose source term is integrated with a trapezoidal rule plus a
//! semi-implicit backward Taylor correction. The crate also ships the pieces
//! needed to check it: an ARS(2,2,2) IMEX Runge–Kutta reference solver, exact
//! oracles for the linear Jin–Xin system, the linear stability function and
//! an experiment harness with the standard benchmark presets.

pub mod csv_io;
pub mod error;
pub mod harness;
pub mod imex;
pub mod mesh;
pub mod models;
pub mod oracles;
pub mod reconstruction;
pub mod scheme;
pub mod stability;

mod linalg;

pub use error::{Error, Result};
pub use mesh::{BoundaryKind, Grid1D, Parity, SolutionField};
pub use models::{BalanceLaw, ModelSpec, StiffSource};
pub use scheme::{ProjectionPolicy, SchemeConfig, StepReport};

/// Version string stamped into every CSV this crate writes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
