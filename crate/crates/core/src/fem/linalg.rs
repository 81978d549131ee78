use nalgebra::DVector;
use nalgebra_sparse::factorization::CscCholesky;
use nalgebra_sparse::CscMatrix;
use serde::{Deserialize, Serialize};

use super::mesh::TriMesh;
use crate::error::{HotsError, Result};

/// Maps mesh nodes to unknowns. Several nodes may share one unknown, which
/// is how periodic identification is expressed.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    node_to_slot: Vec<usize>,
    n_slots: usize,
    pub ncomp: usize,
}

impl DofMap {
    pub fn identity(mesh: &TriMesh, ncomp: usize) -> Self {
        DofMap { node_to_slot: (0..mesh.n_nodes()).collect(), n_slots: mesh.n_nodes(), ncomp }
    }

    /// Identify the top and bottom rows of a structured mesh so that fields
    /// are periodic in the second coordinate.
    pub fn periodic_x2(mesh: &TriMesh, ncomp: usize) -> Result<Self> {
        let g =
            mesh.grid.ok_or_else(|| HotsError::Geometry("periodic identification needs a structured mesh".into()))?;
        let stride = 2 * g.nx + 1;
        let top_start = g.ny * stride;
        let mut node_to_slot = vec![usize::MAX; mesh.n_nodes()];
        let mut next = 0;
        for (n, slot) in node_to_slot.iter_mut().enumerate() {
            if n >= top_start {
                continue;
            }
            *slot = next;
            next += 1;
        }
        for n in top_start..mesh.n_nodes() {
            node_to_slot[n] = node_to_slot[n - top_start];
        }
        Ok(DofMap { node_to_slot, n_slots: next, ncomp })
    }

    /// Identify opposite sides of a structured mesh in both directions.
    pub fn periodic(mesh: &TriMesh, ncomp: usize) -> Result<Self> {
        let g =
            mesh.grid.ok_or_else(|| HotsError::Geometry("periodic identification needs a structured mesh".into()))?;
        let stride = 2 * g.nx + 1;
        let corner = |i: usize, j: usize| j * stride + i;
        let mut node_to_slot = vec![usize::MAX; mesh.n_nodes()];
        let mut next = 0;
        for (n, slot) in node_to_slot.iter_mut().enumerate() {
            let (j, r) = (n / stride, n % stride);
            let image = r <= g.nx && (r == g.nx || j == g.ny);
            if !image {
                *slot = next;
                next += 1;
            }
        }
        for j in 0..=g.ny {
            for i in 0..=g.nx {
                let image = corner(i % g.nx, j % g.ny);
                node_to_slot[corner(i, j)] = node_to_slot[image];
            }
        }
        Ok(DofMap { node_to_slot, n_slots: next, ncomp })
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    pub fn n_dofs(&self) -> usize {
        self.n_slots * self.ncomp
    }

    #[inline]
    pub fn dof(&self, node: usize, comp: usize) -> usize {
        self.node_to_slot[node] * self.ncomp + comp
    }

    /// Expand a dof vector into node-major values (`node * ncomp + comp`).
    pub fn to_nodal(&self, x: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.node_to_slot.len() * self.ncomp);
        for &s in &self.node_to_slot {
            for c in 0..self.ncomp {
                out.push(x[s * self.ncomp + c]);
            }
        }
        out
    }

    pub fn from_nodal(&self, v: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs()];
        for (n, &s) in self.node_to_slot.iter().enumerate() {
            for c in 0..self.ncomp {
                x[s * self.ncomp + c] = v[n * self.ncomp + c];
            }
        }
        x
    }
}

/// Square matrix in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Zero matrix carrying the coupling pattern of P1 elements under `dofs`.
    pub fn pattern(mesh: &TriMesh, dofs: &DofMap) -> Self {
        let n = dofs.n_dofs();
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for tri in &mesh.triangles {
            for &a in tri {
                for ci in 0..dofs.ncomp {
                    let r = dofs.dof(a, ci);
                    for &b in tri {
                        for cj in 0..dofs.ncomp {
                            rows[r].push(dofs.dof(b, cj));
                        }
                    }
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for (r, row) in rows.iter_mut().enumerate() {
            row.push(r);
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        let nnz = col_idx.len();
        CsrMatrix { n, row_ptr, col_idx, values: vec![0.0; nnz] }
    }

    #[inline]
    fn slot(&self, r: usize, c: usize) -> usize {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        self.row_ptr[r] + row.binary_search(&c).expect("entry outside sparsity pattern")
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        let s = self.slot(r, c);
        self.values[s] += v;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let row = &self.col_idx[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c).map_or(0.0, |k| self.values[self.row_ptr[r] + k])
    }

    pub fn zero_values(&mut self) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
    }

    /// `self += s * other`, both on the same pattern.
    pub fn axpy(&mut self, s: f64, other: &CsrMatrix) {
        debug_assert_eq!(self.col_idx, other.col_idx);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn mul_vec(&self, x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            let mut acc = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc += self.values[k] * x[self.col_idx[k]];
            }
            y[r] = acc;
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec(x, &mut y);
        y
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.apply(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.n, self.n);
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                d[(r, self.col_idx[k])] = self.values[k];
            }
        }
        d
    }
}

/// Symmetric elimination of prescribed unknowns: the row and column of each
/// constrained dof are cleared, the diagonal set to one and the right-hand
/// side corrected so the reduced system stays symmetric positive definite.
pub fn apply_dirichlet(a: &mut CsrMatrix, b: &mut [f64], constraints: &[(usize, f64)]) {
    if constraints.is_empty() {
        return;
    }
    let mut fixed = vec![None; a.n];
    for &(d, v) in constraints {
        fixed[d] = Some(v);
    }
    for r in 0..a.n {
        if fixed[r].is_some() {
            continue;
        }
        for k in a.row_ptr[r]..a.row_ptr[r + 1] {
            if let Some(v) = fixed[a.col_idx[k]] {
                b[r] -= a.values[k] * v;
                a.values[k] = 0.0;
            }
        }
    }
    for r in 0..a.n {
        if let Some(v) = fixed[r] {
            for k in a.row_ptr[r]..a.row_ptr[r + 1] {
                a.values[k] = if a.col_idx[k] == r { 1.0 } else { 0.0 };
            }
            b[r] = v;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverKind {
    /// Jacobi-preconditioned conjugate gradients.
    Cg { tol: f64, max_iter: usize },
    /// Sparse Cholesky factorization.
    Direct,
}

impl Default for SolverKind {
    fn default() -> Self {
        SolverKind::Cg { tol: 1e-10, max_iter: 20_000 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Preconditioned CG on an SPD matrix, optionally warm-started.
pub fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64, max_iter: usize) -> Result<(Vec<f64>, SolveStats)> {
    let n = a.n;
    let inv_diag: Vec<f64> = a.diagonal().iter().map(|&d| if d != 0.0 { 1.0 / d } else { 1.0 }).collect();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok((vec![0.0; n], SolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = a.apply(&x);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(a, b)| a * b).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let mut res = norm(&r) / b_norm;
    let mut it = 0;
    while res > tol {
        if it >= max_iter {
            return Err(HotsError::SolverDiverged { iterations: it, residual: res });
        }
        a.mul_vec(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(HotsError::SolverDiverged { iterations: it, residual: res });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / b_norm;
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        it += 1;
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(HotsError::SolverDiverged { iterations: it, residual: res });
    }
    Ok((x, SolveStats { iterations: it, relative_residual: res }))
}

/// Reusable Cholesky factor of an SPD matrix.
pub struct Factorization {
    chol: CscCholesky<f64>,
}

impl Factorization {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        // A symmetric CSR matrix reads identically as CSC.
        let csc = CscMatrix::try_from_csc_data(a.n, a.n, a.row_ptr.clone(), a.col_idx.clone(), a.values.clone())
            .map_err(|e| HotsError::Solver(format!("invalid sparse matrix: {e}")))?;
        let chol = CscCholesky::factor(&csc).map_err(|e| HotsError::Solver(format!("cholesky failed: {e}")))?;
        Ok(Factorization { chol })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let rhs = DVector::from_column_slice(b);
        let x = self.chol.solve(&rhs);
        let x: Vec<f64> = x.column(0).iter().copied().collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(HotsError::Solver("non-finite direct solution".into()));
        }
        Ok(x)
    }
}

pub fn solve_spd(a: &CsrMatrix, b: &[f64], kind: SolverKind, x0: Option<&[f64]>) -> Result<Vec<f64>> {
    match kind {
        SolverKind::Cg { tol, max_iter } => pcg(a, b, x0, tol, max_iter).map(|(x, _)| x),
        SolverKind::Direct => Factorization::new(a)?.solve(b),
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, &v| m.max(v.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}
