use super::linalg::{CsrMatrix, DofMap};
use super::mesh::TriMesh;
use crate::tensor::{Stiffness, Tensor2};

/// Scalar operator `∫ K ∇w · ∇v` with one tensor per triangle.
pub fn assemble_scalar_operator(mesh: &TriMesh, dofs: &DofMap, k: &[Tensor2]) -> CsrMatrix {
    let mut a = CsrMatrix::pattern(mesh, dofs);
    add_scalar_operator(&mut a, mesh, dofs, k);
    a
}

pub fn add_scalar_operator(a: &mut CsrMatrix, mesh: &TriMesh, dofs: &DofMap, k: &[Tensor2]) {
    debug_assert_eq!(dofs.ncomp, 1);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.shape_gradients(t);
        let area = mesh.area(t);
        let kt = &k[t];
        for (a_loc, &na) in tri.iter().enumerate() {
            let kg = [kt[0][0] * g[a_loc][0] + kt[0][1] * g[a_loc][1], kt[1][0] * g[a_loc][0] + kt[1][1] * g[a_loc][1]];
            for (b_loc, &nb) in tri.iter().enumerate() {
                // row = test function b, column = trial function a
                let v = area * (kg[0] * g[b_loc][0] + kg[1] * g[b_loc][1]);
                a.add(dofs.dof(nb, 0), dofs.dof(na, 0), v);
            }
        }
    }
}

/// Vector operator `∫ C_ijkl ∂_l w_k ∂_j v_i` with one tensor per triangle.
pub fn assemble_elasticity_operator(mesh: &TriMesh, dofs: &DofMap, c: &[Stiffness]) -> CsrMatrix {
    let mut a = CsrMatrix::pattern(mesh, dofs);
    add_elasticity_operator(&mut a, mesh, dofs, c);
    a
}

pub fn add_elasticity_operator(a: &mut CsrMatrix, mesh: &TriMesh, dofs: &DofMap, c: &[Stiffness]) {
    debug_assert_eq!(dofs.ncomp, 2);
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.shape_gradients(t);
        let area = mesh.area(t);
        let ct = &c[t];
        for (p, &np) in tri.iter().enumerate() {
            for (q, &nq) in tri.iter().enumerate() {
                for i in 0..2 {
                    for k in 0..2 {
                        let mut v = 0.0;
                        for j in 0..2 {
                            for l in 0..2 {
                                v += ct.at(i, j, k, l) * g[q][l] * g[p][j];
                            }
                        }
                        a.add(dofs.dof(np, i), dofs.dof(nq, k), area * v);
                    }
                }
            }
        }
    }
}

/// Consistent P1 mass matrix `∫ ρ w · v`, block-diagonal across components.
pub fn assemble_mass(mesh: &TriMesh, dofs: &DofMap, rho: &[f64]) -> CsrMatrix {
    let mut a = CsrMatrix::pattern(mesh, dofs);
    add_mass(&mut a, mesh, dofs, rho, 1.0);
    a
}

pub fn add_mass(a: &mut CsrMatrix, mesh: &TriMesh, dofs: &DofMap, rho: &[f64], scale: f64) {
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let m = scale * rho[t] * mesh.area(t) / 12.0;
        for (p, &np) in tri.iter().enumerate() {
            for (q, &nq) in tri.iter().enumerate() {
                let v = if p == q { 2.0 * m } else { m };
                for c in 0..dofs.ncomp {
                    a.add(dofs.dof(np, c), dofs.dof(nq, c), v);
                }
            }
        }
    }
}

/// Element-wise data for the weak form of `div(K ∇w) = s + div(g)`.
///
/// `source[t * ncomp + i]` holds `s_i` and `flux[(t * ncomp + i) * 2 + j]`
/// holds `g_ij` on triangle `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementLoad {
    pub ncomp: usize,
    pub source: Vec<f64>,
    pub flux: Vec<f64>,
}

impl ElementLoad {
    pub fn zeros(n_tri: usize, ncomp: usize) -> Self {
        ElementLoad { ncomp, source: vec![0.0; n_tri * ncomp], flux: vec![0.0; n_tri * ncomp * 2] }
    }

    #[inline]
    pub fn add_source(&mut self, t: usize, i: usize, v: f64) {
        self.source[t * self.ncomp + i] += v;
    }

    #[inline]
    pub fn add_flux(&mut self, t: usize, i: usize, j: usize, v: f64) {
        self.flux[(t * self.ncomp + i) * 2 + j] += v;
    }

    pub fn is_zero(&self) -> bool {
        self.source.iter().chain(&self.flux).all(|&v| v == 0.0)
    }
}

/// Right-hand side `-∫ s v + ∫ g · ∇v` for the weak form of
/// `div(K ∇w) = s + div(g)`. Both parts use one-point quadrature.
pub fn assemble_divergence_rhs(mesh: &TriMesh, dofs: &DofMap, load: &ElementLoad) -> Vec<f64> {
    let nc = load.ncomp;
    debug_assert_eq!(dofs.ncomp, nc);
    let mut b = vec![0.0; dofs.n_dofs()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = mesh.shape_gradients(t);
        let area = mesh.area(t);
        for (p, &np) in tri.iter().enumerate() {
            for i in 0..nc {
                let s = load.source[t * nc + i];
                let f0 = load.flux[(t * nc + i) * 2];
                let f1 = load.flux[(t * nc + i) * 2 + 1];
                b[dofs.dof(np, i)] += area * (-s / 3.0 + f0 * g[p][0] + f1 * g[p][1]);
            }
        }
    }
    b
}

/// `∫ f v` for an element-wise constant density `f[t * ncomp + i]`.
pub fn assemble_load(mesh: &TriMesh, dofs: &DofMap, f: &[f64]) -> Vec<f64> {
    let nc = dofs.ncomp;
    let mut b = vec![0.0; dofs.n_dofs()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let w = mesh.area(t) / 3.0;
        for &n in tri {
            for i in 0..nc {
                b[dofs.dof(n, i)] += w * f[t * nc + i];
            }
        }
    }
    b
}

/// `∫_Γ q v` over boundary edges carrying `tag`, with `q` sampled at edge midpoints.
pub fn assemble_boundary_load(
    mesh: &TriMesh,
    dofs: &DofMap,
    tag: &str,
    q: impl Fn([f64; 2]) -> Vec<f64>,
    b: &mut [f64],
) {
    for e in mesh.boundary_edges.iter().filter(|e| e.tag == tag) {
        let [p0, p1] = [mesh.nodes[e.nodes[0]], mesh.nodes[e.nodes[1]]];
        let len = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
        let val = q([(p0[0] + p1[0]) * 0.5, (p0[1] + p1[1]) * 0.5]);
        for &n in &e.nodes {
            for (i, v) in val.iter().enumerate().take(dofs.ncomp) {
                b[dofs.dof(n, i)] += 0.5 * len * v;
            }
        }
    }
}

/// Gradient of a nodal field (`values[node * ncomp + comp]`) on triangle `t`,
/// returned as `grad[comp][direction]`.
pub fn element_gradient(mesh: &TriMesh, t: usize, values: &[f64], ncomp: usize) -> Vec<[f64; 2]> {
    let g = mesh.shape_gradients(t);
    let tri = mesh.triangles[t];
    (0..ncomp)
        .map(|c| {
            let mut d = [0.0; 2];
            for (p, &n) in tri.iter().enumerate() {
                let v = values[n * ncomp + c];
                d[0] += v * g[p][0];
                d[1] += v * g[p][1];
            }
            d
        })
        .collect()
}

pub fn scalar_element_gradient(mesh: &TriMesh, t: usize, values: &[f64]) -> [f64; 2] {
    let g = mesh.shape_gradients(t);
    let [a, b, c] = mesh.triangles[t];
    [
        values[a] * g[0][0] + values[b] * g[1][0] + values[c] * g[2][0],
        values[a] * g[0][1] + values[b] * g[1][1] + values[c] * g[2][1],
    ]
}

/// Centroid value of a nodal scalar on triangle `t`.
pub fn centroid_value(mesh: &TriMesh, t: usize, values: &[f64]) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    (values[a] + values[b] + values[c]) / 3.0
}

pub fn centroid_component(mesh: &TriMesh, t: usize, values: &[f64], ncomp: usize, comp: usize) -> f64 {
    let [a, b, c] = mesh.triangles[t];
    (values[a * ncomp + comp] + values[b * ncomp + comp] + values[c * ncomp + comp]) / 3.0
}
