//! P1 finite elements on crossed structured triangulations.

pub mod assemble;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod norms;
pub mod recover;

pub use assemble::{
    assemble_boundary_load, assemble_divergence_rhs, assemble_elasticity_operator, assemble_load, assemble_mass,
    assemble_scalar_operator, ElementLoad,
};
pub use linalg::{apply_dirichlet, pcg, solve_spd, CsrMatrix, DofMap, Factorization, SolverKind};
pub use mesh::{build_rect_mesh, GridInfo, Rect, RegionSpec, Shape, TriMesh};
pub use recover::{recover_gradient, recover_hessian};
