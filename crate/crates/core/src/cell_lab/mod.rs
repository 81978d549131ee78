//! Offline stage: micro and meso cell problems over a grid of temperatures
//! and the homogenized coefficients they produce.

pub mod closeness;
pub mod coefficients;
pub mod design;
pub mod ids;
pub mod problems;
pub mod solver;
pub mod tables;

pub use closeness::{
    direct_coefficients, fitted_rate, reiterated_coefficients, verify_coefficient_closeness, ClosenessRow,
};
pub use coefficients::Coefficients;
pub use design::{frac, CellBoundary, CellDesign, FillSpec, MesoCellSpec, MicroCellSpec, Phase};
pub use ids::{CellProblemId, Order, Scale, Symbol};
pub use problems::{FieldSet, LevelSample};
pub use solver::CellSolver;
pub use tables::{build_theta_tables, mesh_digest, uniform_grid, Owner, ThetaTables, ThetaWeight};
