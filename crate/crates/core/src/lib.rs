//! Synthetic Dirichlet-to-Neumann data for `∇·(σ − iωε)∇u = 0` on a disk and
//! enclosure-method reconstruction of an embedded inclusion.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`] builds labelled polar-grid triangulations of the domain.
//! * [`admittivity`] holds the coefficient perturbations and the reduction of a
//!   general constant background to `(σ, ε) = (1, 0)`.
//! * [`mittag`] evaluates the Mittag-Leffler function and its derivative.
//! * [`probes`] generates exponential and Mittag-Leffler probe traces.
//! * [`fem`] solves the forward problem and assembles DtN matrices.
//! * [`indicator`] turns DtN data into indicator values, support estimates and
//!   region estimates.

pub mod admittivity;
pub mod error;
pub mod fem;
pub mod geom;
pub mod indicator;
pub mod mesh;
pub mod mittag;
pub mod probes;

pub use error::{Error, Result};
pub use geom::{Direction, Vec2};
