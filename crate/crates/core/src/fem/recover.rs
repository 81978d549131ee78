use super::assemble::scalar_element_gradient;
use super::mesh::TriMesh;
use crate::tensor::Tensor2;

/// Nodal gradient by area-weighted averaging of the constant element
/// gradients around each node.
pub fn recover_gradient(mesh: &TriMesh, values: &[f64]) -> Vec<[f64; 2]> {
    let mut acc = vec![[0.0; 2]; mesh.n_nodes()];
    let mut weight = vec![0.0; mesh.n_nodes()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let g = scalar_element_gradient(mesh, t, values);
        let a = mesh.area(t);
        for &n in tri {
            acc[n][0] += a * g[0];
            acc[n][1] += a * g[1];
            weight[n] += a;
        }
    }
    acc.iter().zip(&weight).map(|(g, &w)| if w > 0.0 { [g[0] / w, g[1] / w] } else { [0.0; 2] }).collect()
}

/// Nodal Hessian: recovery applied to each recovered gradient component,
/// then symmetrized.
pub fn recover_hessian(mesh: &TriMesh, values: &[f64]) -> Vec<Tensor2> {
    let grad = recover_gradient(mesh, values);
    hessian_from_gradient(mesh, &grad)
}

pub fn hessian_from_gradient(mesh: &TriMesh, grad: &[[f64; 2]]) -> Vec<Tensor2> {
    let gx: Vec<f64> = grad.iter().map(|g| g[0]).collect();
    let gy: Vec<f64> = grad.iter().map(|g| g[1]).collect();
    let hx = recover_gradient(mesh, &gx);
    let hy = recover_gradient(mesh, &gy);
    hx.iter()
        .zip(&hy)
        .map(|(a, b)| {
            let off = 0.5 * (a[1] + b[0]);
            [[a[0], off], [off, b[1]]]
        })
        .collect()
}

/// Split an interleaved nodal vector field into per-component arrays.
pub fn split_components(values: &[f64], ncomp: usize) -> Vec<Vec<f64>> {
    (0..ncomp).map(|c| values.iter().skip(c).step_by(ncomp).copied().collect()).collect()
}
