use super::coefficients::Coefficients;
use super::design::CellBoundary;
use crate::error::Result;
use crate::fem::assemble::{assemble_divergence_rhs, assemble_elasticity_operator, assemble_scalar_operator};
use crate::fem::linalg::{apply_dirichlet, DofMap, Factorization};
use crate::fem::mesh::TriMesh;
use crate::fem::ElementLoad;

/// Factorized heat and elasticity operators of one cell at one temperature,
/// reused across every right-hand side posed on that cell.
pub struct CellSolver {
    scalar: Operator,
    vector: Operator,
}

struct Operator {
    dofs: DofMap,
    fixed: Vec<usize>,
    factor: Factorization,
    /// Lumped mass per slot when constants span the kernel.
    mean_weights: Option<Vec<f64>>,
}

impl Operator {
    fn solve(&self, mesh: &TriMesh, load: &ElementLoad) -> Result<Vec<f64>> {
        if load.is_zero() {
            return Ok(vec![0.0; mesh.n_nodes() * self.dofs.ncomp]);
        }
        let mut b = assemble_divergence_rhs(mesh, &self.dofs, load);
        let nc = self.dofs.ncomp;
        if self.mean_weights.is_some() {
            // drop the part of the load the constants cannot balance
            for c in 0..nc {
                let mean = b.iter().skip(c).step_by(nc).sum::<f64>() / self.dofs.n_slots() as f64;
                b.iter_mut().skip(c).step_by(nc).for_each(|v| *v -= mean);
            }
        }
        for &d in &self.fixed {
            b[d] = 0.0;
        }
        let mut x = self.factor.solve(&b)?;
        if let Some(w) = &self.mean_weights {
            let total: f64 = w.iter().sum();
            for c in 0..nc {
                let mean = x.iter().skip(c).step_by(nc).zip(w).map(|(v, m)| v * m).sum::<f64>() / total;
                x.iter_mut().skip(c).step_by(nc).for_each(|v| *v -= mean);
            }
        }
        Ok(self.dofs.to_nodal(&x))
    }
}

fn constrained_dofs(mesh: &TriMesh, dofs: &DofMap, boundary: CellBoundary) -> Vec<usize> {
    let nodes = match boundary {
        CellBoundary::Dirichlet => mesh.all_boundary_nodes(),
        CellBoundary::LaminateX1 => mesh.boundary_nodes(&["left", "right"]),
        // one pinned node removes the constants; the mean is fixed afterwards
        CellBoundary::Periodic => vec![0],
    };
    let mut fixed: Vec<usize> = nodes.iter().flat_map(|&n| (0..dofs.ncomp).map(move |c| dofs.dof(n, c))).collect();
    fixed.sort_unstable();
    fixed.dedup();
    fixed
}

impl CellSolver {
    pub fn new(mesh: &TriMesh, boundary: CellBoundary, coeffs: &[Coefficients]) -> Result<Self> {
        let dof_map = |ncomp| match boundary {
            CellBoundary::Dirichlet => Ok(DofMap::identity(mesh, ncomp)),
            CellBoundary::LaminateX1 => DofMap::periodic_x2(mesh, ncomp),
            CellBoundary::Periodic => DofMap::periodic(mesh, ncomp),
        };
        let mean_weights = |dofs: &DofMap| {
            (boundary == CellBoundary::Periodic).then(|| {
                let mut w = vec![0.0; dofs.n_slots()];
                for (t, tri) in mesh.triangles.iter().enumerate() {
                    for &n in tri {
                        w[dofs.dof(n, 0) / dofs.ncomp] += mesh.area(t) / 3.0;
                    }
                }
                w
            })
        };
        let k: Vec<_> = coeffs.iter().map(|c| c.k).collect();
        let c: Vec<_> = coeffs.iter().map(|c| c.stiffness).collect();

        let sd = dof_map(1)?;
        let mut a = assemble_scalar_operator(mesh, &sd, &k);
        let fixed = constrained_dofs(mesh, &sd, boundary);
        let mut scratch = vec![0.0; sd.n_dofs()];
        apply_dirichlet(&mut a, &mut scratch, &fixed.iter().map(|&d| (d, 0.0)).collect::<Vec<_>>());
        let scalar = Operator { factor: Factorization::new(&a)?, mean_weights: mean_weights(&sd), dofs: sd, fixed };

        let vd = dof_map(2)?;
        let mut a = assemble_elasticity_operator(mesh, &vd, &c);
        let fixed = constrained_dofs(mesh, &vd, boundary);
        let mut scratch = vec![0.0; vd.n_dofs()];
        apply_dirichlet(&mut a, &mut scratch, &fixed.iter().map(|&d| (d, 0.0)).collect::<Vec<_>>());
        let vector = Operator { factor: Factorization::new(&a)?, mean_weights: mean_weights(&vd), dofs: vd, fixed };

        Ok(CellSolver { scalar, vector })
    }

    /// Solve `div(K ∇w) = s + div(g)` with zero boundary data (or zero mean
    /// when periodic), where `K` is the conductivity (one component) or the
    /// stiffness (two components).
    pub fn solve(&self, mesh: &TriMesh, load: &ElementLoad) -> Result<Vec<f64>> {
        match load.ncomp {
            1 => self.scalar.solve(mesh, load),
            _ => self.vector.solve(mesh, load),
        }
    }
}

/// Cell average of an element-wise quantity.
pub fn cell_average(mesh: &TriMesh, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut area = 0.0;
    for t in 0..mesh.n_triangles() {
        let a = mesh.area(t);
        acc += a * f(t);
        area += a;
    }
    acc / area
}

/// Element-wise view of nodal cell functions.
#[derive(Clone, Copy)]
pub struct ElementOps<'a> {
    pub mesh: &'a TriMesh,
}

impl<'a> ElementOps<'a> {
    #[inline]
    pub fn grad(&self, t: usize, f: &[f64]) -> [f64; 2] {
        let g = self.mesh.shape_gradients(t);
        let [a, b, c] = self.mesh.triangles[t];
        [f[a] * g[0][0] + f[b] * g[1][0] + f[c] * g[2][0], f[a] * g[0][1] + f[b] * g[1][1] + f[c] * g[2][1]]
    }

    /// `out[k][j] = ∂_j f_k` for an interleaved two-component field.
    #[inline]
    pub fn grad_vec(&self, t: usize, f: &[f64]) -> [[f64; 2]; 2] {
        let g = self.mesh.shape_gradients(t);
        let tri = self.mesh.triangles[t];
        let mut out = [[0.0; 2]; 2];
        for (p, &n) in tri.iter().enumerate() {
            for (k, row) in out.iter_mut().enumerate() {
                row[0] += f[2 * n + k] * g[p][0];
                row[1] += f[2 * n + k] * g[p][1];
            }
        }
        out
    }

    #[inline]
    pub fn centroid(&self, t: usize, f: &[f64]) -> f64 {
        let [a, b, c] = self.mesh.triangles[t];
        (f[a] + f[b] + f[c]) / 3.0
    }

    #[inline]
    pub fn centroid_vec(&self, t: usize, f: &[f64]) -> [f64; 2] {
        let [a, b, c] = self.mesh.triangles[t];
        [(f[2 * a] + f[2 * b] + f[2 * c]) / 3.0, (f[2 * a + 1] + f[2 * b + 1] + f[2 * c + 1]) / 3.0]
    }
}

/// Central difference weights across a sample grid (one-sided at the ends).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaStencil {
    pub lo: usize,
    pub hi: usize,
    pub inv: f64,
}

impl ThetaStencil {
    pub fn at(grid: &[f64], s: usize) -> Self {
        let n = grid.len();
        let lo = s.saturating_sub(1);
        let hi = (s + 1).min(n - 1);
        ThetaStencil { lo, hi, inv: 1.0 / (grid[hi] - grid[lo]) }
    }

    #[inline]
    pub fn diff(&self, f: impl Fn(usize) -> f64) -> f64 {
        (f(self.hi) - f(self.lo)) * self.inv
    }

    pub fn diff_vec(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        lo.iter().zip(hi).map(|(a, b)| (b - a) * self.inv).collect()
    }
}
