//! Manufactured heat and elasticity problems solved on refined crossed meshes.

use std::f64::consts::PI;

use hots_core::fem::linalg::{apply_dirichlet, DofMap, Factorization};
use hots_core::fem::mesh::{build_rect_mesh, Rect, TriMesh};
use hots_core::fem::norms::error_against_exact;
use hots_core::fem::{assemble_elasticity_operator, assemble_load, assemble_scalar_operator};
use hots_core::{Stiffness, Tensor2};

const LEVELS: [usize; 4] = [8, 16, 32, 64];

type Exact = fn([f64; 2]) -> Vec<f64>;
type ExactGrad = fn([f64; 2]) -> Vec<[f64; 2]>;

/// Solve with homogeneous Dirichlet data on the whole boundary.
fn solve(mesh: &TriMesh, dofs: &DofMap, mut a: hots_core::fem::CsrMatrix, mut b: Vec<f64>) -> Vec<f64> {
    let fixed: Vec<(usize, f64)> = mesh
        .all_boundary_nodes()
        .into_iter()
        .flat_map(|n| (0..dofs.ncomp).map(move |c| (dofs.dof(n, c), 0.0)))
        .collect();
    apply_dirichlet(&mut a, &mut b, &fixed);
    dofs.to_nodal(&Factorization::new(&a).unwrap().solve(&b).unwrap())
}

/// Observed orders between successive levels.
pub fn orders(errors: &[(f64, f64)]) -> Vec<(f64, f64)> {
    errors.windows(2).map(|w| ((w[0].0 / w[1].0).log2(), (w[0].1 / w[1].1).log2())).collect()
}

const K: Tensor2 = [[2.0, 0.5], [0.5, 1.0]];

fn heat_exact(p: [f64; 2]) -> Vec<f64> {
    vec![(PI * p[0]).sin() * (PI * p[1]).sin()]
}

fn heat_grad(p: [f64; 2]) -> Vec<[f64; 2]> {
    let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
    vec![[PI * cx * sy, PI * sx * cy]]
}

/// `-div(K ∇u)` for the exact heat solution.
fn heat_source(p: [f64; 2]) -> f64 {
    let (sx, cx, sy, cy) = ((PI * p[0]).sin(), (PI * p[0]).cos(), (PI * p[1]).sin(), (PI * p[1]).cos());
    let (uxx, uyy, uxy) = (-PI * PI * sx * sy, -PI * PI * sx * sy, PI * PI * cx * cy);
    -(K[0][0] * uxx + (K[0][1] + K[1][0]) * uxy + K[1][1] * uyy)
}

pub fn heat_errors() -> Vec<(f64, f64)> {
    LEVELS
        .iter()
        .map(|&n| {
            let mesh = build_rect_mesh(Rect::UNIT, n, n, &[]).unwrap();
            let dofs = DofMap::identity(&mesh, 1);
            let a = assemble_scalar_operator(&mesh, &dofs, &vec![K; mesh.n_triangles()]);
            let f: Vec<f64> = (0..mesh.n_triangles()).map(|t| heat_source(mesh.centroid(t))).collect();
            let u = solve(&mesh, &dofs, a, assemble_load(&mesh, &dofs, &f));
            error_against_exact(&mesh, &u, 1, heat_exact as Exact, heat_grad as ExactGrad)
        })
        .collect()
}

const LAMBDA: f64 = 1.5;
const MU: f64 = 1.0;

fn elastic_exact(p: [f64; 2]) -> Vec<f64> {
    let [x, y] = p;
    vec![(PI * x).sin() * (PI * y).sin(), x * (1.0 - x) * y * (1.0 - y)]
}

fn elastic_grad(p: [f64; 2]) -> Vec<[f64; 2]> {
    let [x, y] = p;
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    vec![[PI * cx * sy, PI * sx * cy], [(1.0 - 2.0 * x) * y * (1.0 - y), x * (1.0 - x) * (1.0 - 2.0 * y)]]
}

/// `-div σ = -(μ Δu + (λ + μ) ∇ div u)` for the exact displacement.
fn elastic_source(p: [f64; 2]) -> [f64; 2] {
    let [x, y] = p;
    let (sx, cx, sy, cy) = ((PI * x).sin(), (PI * x).cos(), (PI * y).sin(), (PI * y).cos());
    let lap1 = -2.0 * PI * PI * sx * sy;
    let lap2 = -2.0 * (y * (1.0 - y) + x * (1.0 - x));
    let ddx = -PI * PI * sx * sy + (1.0 - 2.0 * x) * (1.0 - 2.0 * y);
    let ddy = PI * PI * cx * cy - 2.0 * x * (1.0 - x);
    [-(MU * lap1 + (LAMBDA + MU) * ddx), -(MU * lap2 + (LAMBDA + MU) * ddy)]
}

pub fn elastic_errors() -> Vec<(f64, f64)> {
    let c = Stiffness::isotropic(LAMBDA, MU);
    LEVELS
        .iter()
        .map(|&n| {
            let mesh = build_rect_mesh(Rect::UNIT, n, n, &[]).unwrap();
            let dofs = DofMap::identity(&mesh, 2);
            let a = assemble_elasticity_operator(&mesh, &dofs, &vec![c; mesh.n_triangles()]);
            let f: Vec<f64> = (0..mesh.n_triangles()).flat_map(|t| elastic_source(mesh.centroid(t))).collect();
            let u = solve(&mesh, &dofs, a, assemble_load(&mesh, &dofs, &f));
            error_against_exact(&mesh, &u, 2, elastic_exact as Exact, elastic_grad as ExactGrad)
        })
        .collect()
}
