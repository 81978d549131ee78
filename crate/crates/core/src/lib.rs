//! Three-scale homogenization toolkit for transient, temperature-dependent
//! thermo-mechanical problems in composites with nested periodic structure.

// Tensor components are indexed as in the formulas; NaN must fail the
// negated range checks.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cell_lab;
pub mod config;
pub mod error;
pub mod fem;
pub mod macro_solver;
pub mod materials;
pub mod pipeline;
pub mod reconstruction;
pub mod tensor;
pub mod validation;

pub use config::RunConfig;
pub use error::{HotsError, Result};
pub use materials::{CouplingMode, MaterialModel, PointCoefficients, Polynomial};
pub use pipeline::{Pipeline, Stage, StageReport};
pub use tensor::{Stiffness, Tensor2};
