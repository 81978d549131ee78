use super::assemble::{assemble_mass, assemble_scalar_operator, element_gradient};
use super::linalg::{CsrMatrix, DofMap};
use super::mesh::TriMesh;
use crate::tensor::IDENTITY2;

/// Exact P1 integrators for the L2 norm and the H1 seminorm on one mesh.
pub struct P1Norms {
    mass: CsrMatrix,
    stiffness: CsrMatrix,
}

impl P1Norms {
    pub fn new(mesh: &TriMesh) -> Self {
        let dofs = DofMap::identity(mesh, 1);
        let ones = vec![1.0; mesh.n_triangles()];
        let id = vec![IDENTITY2; mesh.n_triangles()];
        P1Norms { mass: assemble_mass(mesh, &dofs, &ones), stiffness: assemble_scalar_operator(mesh, &dofs, &id) }
    }

    /// Squared L2 norm of an interleaved nodal field with `ncomp` components.
    pub fn l2_sq(&self, values: &[f64], ncomp: usize) -> f64 {
        self.per_component(values, ncomp, &self.mass)
    }

    pub fn h1_semi_sq(&self, values: &[f64], ncomp: usize) -> f64 {
        self.per_component(values, ncomp, &self.stiffness)
    }

    fn per_component(&self, values: &[f64], ncomp: usize, m: &CsrMatrix) -> f64 {
        (0..ncomp)
            .map(|c| {
                let comp: Vec<f64> = values.iter().skip(c).step_by(ncomp).copied().collect();
                m.quadratic_form(&comp).max(0.0)
            })
            .sum()
    }
}

/// Degree-4 six-point rule on the reference triangle: (λ1, λ2, weight).
const QUAD6: [(f64, f64, f64); 6] = [
    (0.445948490915965, 0.445948490915965, 0.223381589678011),
    (0.445948490915965, 0.108103018168070, 0.223381589678011),
    (0.108103018168070, 0.445948490915965, 0.223381589678011),
    (0.091576213509771, 0.091576213509771, 0.109951743655322),
    (0.091576213509771, 0.816847572980459, 0.109951743655322),
    (0.816847572980459, 0.091576213509771, 0.109951743655322),
];

/// L2 and H1-seminorm errors of a nodal P1 field against an exact solution.
/// `exact(p)` returns `ncomp` values and `exact_grad(p)` the matching gradients.
pub fn error_against_exact(
    mesh: &TriMesh,
    values: &[f64],
    ncomp: usize,
    exact: impl Fn([f64; 2]) -> Vec<f64>,
    exact_grad: impl Fn([f64; 2]) -> Vec<[f64; 2]>,
) -> (f64, f64) {
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for t in 0..mesh.n_triangles() {
        let tri = mesh.triangles[t];
        let [p0, p1, p2] = mesh.vertices(t);
        let area = mesh.area(t);
        let gh = element_gradient(mesh, t, values, ncomp);
        for &(l1, l2w, w) in &QUAD6 {
            let l0 = 1.0 - l1 - l2w;
            let p = [l0 * p0[0] + l1 * p1[0] + l2w * p2[0], l0 * p0[1] + l1 * p1[1] + l2w * p2[1]];
            let ex = exact(p);
            let gx = exact_grad(p);
            for c in 0..ncomp {
                let uh = l0 * values[tri[0] * ncomp + c]
                    + l1 * values[tri[1] * ncomp + c]
                    + l2w * values[tri[2] * ncomp + c];
                l2 += w * area * (uh - ex[c]).powi(2);
                h1 += w * area * ((gh[c][0] - gx[c][0]).powi(2) + (gh[c][1] - gx[c][1]).powi(2));
            }
        }
    }
    (l2.sqrt(), h1.sqrt())
}
