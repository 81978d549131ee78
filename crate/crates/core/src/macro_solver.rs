//! Online stage: implicit time stepping of the coupled heat and elasticity
//! system with temperature-dependent coefficients.
//!
//! The same stepper drives the homogenized macro problem and the resolved
//! reference problem; only the [`CoefficientField`] differs.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cell_lab::{Coefficients, ThetaTables};
use crate::error::{HotsError, Result};
use crate::fem::assemble::{
    add_elasticity_operator, add_mass, add_scalar_operator, assemble_boundary_load, assemble_divergence_rhs,
    assemble_load, ElementLoad,
};
use crate::fem::linalg::{apply_dirichlet, max_abs_diff, pcg, CsrMatrix, DofMap};
use crate::fem::mesh::TriMesh;
use crate::materials::{CouplingMode, MaterialModel};

/// Coefficients of the stepped system on each triangle.
pub trait CoefficientField: Sync {
    fn at(&self, triangle: usize, theta: f64) -> Result<Coefficients>;
}

/// Spatially uniform coefficients, independent of temperature.
pub struct UniformField(pub Coefficients);

impl CoefficientField for UniformField {
    fn at(&self, _: usize, _: f64) -> Result<Coefficients> {
        Ok(self.0)
    }
}

/// Macro coefficients interpolated from θ-tables.
pub struct HomogenizedField<'a>(pub &'a ThetaTables);

impl CoefficientField for HomogenizedField<'_> {
    fn at(&self, _: usize, theta: f64) -> Result<Coefficients> {
        Ok(self.0.macro_coefficients(theta))
    }
}

/// Constituent coefficients assigned per triangle.
pub struct MaterialField {
    pub materials: Vec<MaterialModel>,
    pub coupling: CouplingMode,
    pub material_of: Vec<usize>,
}

impl CoefficientField for MaterialField {
    fn at(&self, triangle: usize, theta: f64) -> Result<Coefficients> {
        self.materials[self.material_of[triangle]].evaluate(theta, self.coupling).map(Coefficients::from)
    }
}

pub type ScalarFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;
pub type VectorFn = Arc<dyn Fn([f64; 2], f64) -> [f64; 2] + Send + Sync>;

pub fn constant_scalar(v: f64) -> ScalarFn {
    Arc::new(move |_, _| v)
}

pub fn constant_vector(v: [f64; 2]) -> VectorFn {
    Arc::new(move |_, _| v)
}

/// Time-stepping and fixed-point controls.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    pub dt: f64,
    pub t_end: f64,
    /// Extrapolation factor of the strain rate in the heat equation.
    pub varpi: f64,
    pub theta_tol: f64,
    pub u_tol: f64,
    pub max_iter: usize,
    /// Relative residual of the inner conjugate-gradient solves.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            dt: 0.01,
            t_end: 0.2,
            varpi: 1.0,
            theta_tol: 1e-6,
            u_tol: 1e-6,
            max_iter: 50,
            cg_tol: 1e-12,
            cg_max_iter: 50_000,
        }
    }
}

impl StepControl {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end >= 0.0) {
            return Err(HotsError::Config(format!("need dt > 0 and t_end >= 0, got {} and {}", self.dt, self.t_end)));
        }
        if !(self.theta_tol > 0.0 && self.u_tol > 0.0) || self.max_iter == 0 {
            return Err(HotsError::Config("fixed-point tolerances and iteration cap must be positive".into()));
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil().max(0.0) as usize
    }
}

/// Sources, boundary data and initial state of a coupled problem.
#[derive(Clone)]
pub struct Loading {
    /// Reference temperature appearing in the thermal-stress term.
    pub theta_ref: f64,
    pub heat: ScalarFn,
    pub body: VectorFn,
    pub theta_boundary: ScalarFn,
    pub u_boundary: VectorFn,
    pub theta_tags: Vec<String>,
    pub u_tags: Vec<String>,
    pub flux: Vec<(String, ScalarFn)>,
    pub traction: Vec<(String, VectorFn)>,
    pub theta_initial: ScalarFn,
    pub u_initial: VectorFn,
    pub v_initial: VectorFn,
}

impl Loading {
    /// Constant sources, fixed boundary temperature and clamped boundary on
    /// every side, starting at rest at the reference temperature.
    pub fn clamped(theta_ref: f64, heat: f64, body: [f64; 2]) -> Self {
        let sides: Vec<String> = crate::fem::mesh::SIDE_TAGS.iter().map(|s| s.to_string()).collect();
        Loading {
            theta_ref,
            heat: constant_scalar(heat),
            body: constant_vector(body),
            theta_boundary: constant_scalar(theta_ref),
            u_boundary: constant_vector([0.0; 2]),
            theta_tags: sides.clone(),
            u_tags: sides,
            flux: Vec::new(),
            traction: Vec::new(),
            theta_initial: constant_scalar(theta_ref),
            u_initial: constant_vector([0.0; 2]),
            v_initial: constant_vector([0.0; 2]),
        }
    }
}

/// Nodal state at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSnapshot {
    pub step: usize,
    pub t: f64,
    pub theta: Vec<f64>,
    /// Interleaved displacement `u[2 * node + i]`.
    pub u: Vec<f64>,
    pub iterations: usize,
    /// Max-norm changes of the last fixed-point iteration.
    pub theta_change: f64,
    pub u_change: f64,
}

impl FieldSnapshot {
    pub fn is_finite(&self) -> bool {
        self.theta.iter().chain(&self.u).all(|v| v.is_finite())
    }
}

/// Per-step statistics of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub t: f64,
    pub iterations: usize,
    /// Max-norm temperature change at each fixed-point iteration.
    pub theta_changes: Vec<f64>,
    pub u_changes: Vec<f64>,
}

/// Which snapshots a run keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    All,
    /// Only the final three levels, enough for time differences.
    Tail,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub snapshots: Vec<FieldSnapshot>,
    pub log: Vec<StepLog>,
}

impl RunOutput {
    pub fn last(&self) -> &FieldSnapshot {
        self.snapshots.last().expect("a run keeps at least the initial level")
    }

    /// Snapshot at `step` and its two predecessors when stored.
    pub fn window(&self, step: usize) -> Option<[&FieldSnapshot; 3]> {
        let pos = self.snapshots.iter().position(|s| s.step == step)?;
        let prev = |k: usize| step.checked_sub(k).and_then(|target| self.snapshots.iter().find(|s| s.step == target));
        let cur = &self.snapshots[pos];
        let p1 = prev(1).unwrap_or(cur);
        let p2 = prev(2).unwrap_or(p1);
        Some([cur, p1, p2])
    }
}

/// Coupled stepper over one mesh.
pub struct Stepper<'a, F: CoefficientField> {
    mesh: &'a TriMesh,
    field: &'a F,
    loading: &'a Loading,
    control: StepControl,
    sdofs: DofMap,
    vdofs: DofMap,
    spattern: CsrMatrix,
    vpattern: CsrMatrix,
    theta_fixed: Vec<usize>,
    u_fixed: Vec<usize>,
}

impl<'a, F: CoefficientField> Stepper<'a, F> {
    pub fn new(mesh: &'a TriMesh, field: &'a F, loading: &'a Loading, control: StepControl) -> Result<Self> {
        control.validate()?;
        let sdofs = DofMap::identity(mesh, 1);
        let vdofs = DofMap::identity(mesh, 2);
        fn tags(v: &[String]) -> Vec<&str> {
            v.iter().map(String::as_str).collect()
        }
        for tag in loading.theta_tags.iter().chain(&loading.u_tags) {
            if !mesh.boundary_edges.iter().any(|e| &e.tag == tag) {
                return Err(HotsError::Config(format!("boundary tag `{tag}` not present on the mesh")));
            }
        }
        let theta_fixed = mesh.boundary_nodes(&tags(&loading.theta_tags));
        let u_fixed = mesh.boundary_nodes(&tags(&loading.u_tags));
        Ok(Stepper {
            spattern: CsrMatrix::pattern(mesh, &sdofs),
            vpattern: CsrMatrix::pattern(mesh, &vdofs),
            mesh,
            field,
            loading,
            control,
            sdofs,
            vdofs,
            theta_fixed,
            u_fixed,
        })
    }

    pub fn initial(&self) -> [FieldSnapshot; 2] {
        let l = self.loading;
        let theta: Vec<f64> = self.mesh.nodes.iter().map(|&p| (l.theta_initial)(p, 0.0)).collect();
        let mut u = Vec::with_capacity(2 * self.mesh.n_nodes());
        let mut u_prev = Vec::with_capacity(2 * self.mesh.n_nodes());
        for &p in &self.mesh.nodes {
            let u0 = (l.u_initial)(p, 0.0);
            let v0 = (l.v_initial)(p, 0.0);
            u.extend_from_slice(&u0);
            u_prev.extend([u0[0] - self.control.dt * v0[0], u0[1] - self.control.dt * v0[1]]);
        }
        let snap = |step, t, u| FieldSnapshot {
            step,
            t,
            theta: theta.clone(),
            u,
            iterations: 0,
            theta_change: 0.0,
            u_change: 0.0,
        };
        [snap(0, 0.0, u), snap(0, -self.control.dt, u_prev)]
    }

    fn coefficients(&self, theta: &[f64]) -> Result<Vec<Coefficients>> {
        (0..self.mesh.n_triangles())
            .map(|t| {
                let [a, b, c] = self.mesh.triangles[t];
                self.field.at(t, (theta[a] + theta[b] + theta[c]) / 3.0)
            })
            .collect()
    }

    /// Advance from level `cur` (with predecessor `prev`) by one step.
    pub fn step(&self, cur: &FieldSnapshot, prev: &FieldSnapshot) -> Result<(FieldSnapshot, StepLog)> {
        let mesh = self.mesh;
        let l = self.loading;
        let ctl = &self.control;
        let dt = ctl.dt;
        let t_new = cur.t + dt;
        let nt = mesh.n_triangles();

        // data independent of the fixed-point iterate
        let heat: Vec<f64> = (0..nt).map(|t| (l.heat)(mesh.centroid(t), t_new)).collect();
        let mut heat_load = assemble_load(mesh, &self.sdofs, &heat);
        for (tag, q) in &l.flux {
            assemble_boundary_load(mesh, &self.sdofs, tag, |p| vec![q(p, t_new)], &mut heat_load);
        }
        let body: Vec<f64> = (0..nt).flat_map(|t| (l.body)(mesh.centroid(t), t_new)).collect();
        let mut body_load = assemble_load(mesh, &self.vdofs, &body);
        for (tag, s) in &l.traction {
            assemble_boundary_load(mesh, &self.vdofs, tag, |p| s(p, t_new).to_vec(), &mut body_load);
        }
        let strain_rate: Vec<[[f64; 2]; 2]> = (0..nt)
            .map(|t| {
                let g = mesh.shape_gradients(t);
                let tri = mesh.triangles[t];
                let mut e = [[0.0; 2]; 2];
                for (p, &n) in tri.iter().enumerate() {
                    for (i, row) in e.iter_mut().enumerate() {
                        let du = (cur.u[2 * n + i] - prev.u[2 * n + i]) / dt;
                        row[0] += du * g[p][0];
                        row[1] += du * g[p][1];
                    }
                }
                e
            })
            .collect();
        let theta_bc: Vec<(usize, f64)> =
            self.theta_fixed.iter().map(|&n| (n, (l.theta_boundary)(mesh.nodes[n], t_new))).collect();
        let u_bc: Vec<(usize, f64)> = self
            .u_fixed
            .iter()
            .flat_map(|&n| {
                let v = (l.u_boundary)(mesh.nodes[n], t_new);
                [(2 * n, v[0]), (2 * n + 1, v[1])]
            })
            .collect();

        let mut theta_it = cur.theta.clone();
        let mut u_it = cur.u.clone();
        let mut theta_changes = Vec::new();
        let mut u_changes = Vec::new();
        for iter in 1..=ctl.max_iter {
            let coeff = self.coefficients(&theta_it)?;

            // heat equation, backward Euler
            let capacity: Vec<f64> = coeff.iter().map(|c| c.capacity / dt).collect();
            let mut a = self.spattern.clone();
            add_mass(&mut a, mesh, &self.sdofs, &capacity, 1.0);
            let mut b = a.apply(&cur.theta);
            let k: Vec<_> = coeff.iter().map(|c| c.k).collect();
            add_scalar_operator(&mut a, mesh, &self.sdofs, &k);
            let coupling: Vec<f64> = coeff
                .iter()
                .zip(&strain_rate)
                .map(|(c, e)| {
                    let mut v = 0.0;
                    for i in 0..2 {
                        for j in 0..2 {
                            v += c.coupling[i][j] * e[i][j];
                        }
                    }
                    -ctl.varpi * v
                })
                .collect();
            let coupling_load = assemble_load(mesh, &self.sdofs, &coupling);
            for ((bi, h), c) in b.iter_mut().zip(&heat_load).zip(&coupling_load) {
                *bi += h + c;
            }
            apply_dirichlet(&mut a, &mut b, &theta_bc);
            let (theta_new, _) = pcg(&a, &b, Some(&theta_it), ctl.cg_tol, ctl.cg_max_iter)?;

            // elasticity, three-level scheme
            let inertia: Vec<f64> = coeff.iter().map(|c| c.rho / (dt * dt)).collect();
            let mut a = self.vpattern.clone();
            add_mass(&mut a, mesh, &self.vdofs, &inertia, 1.0);
            let history: Vec<f64> = cur.u.iter().zip(&prev.u).map(|(x, y)| 2.0 * x - y).collect();
            let mut b = a.apply(&history);
            let c: Vec<_> = coeff.iter().map(|c| c.stiffness).collect();
            add_elasticity_operator(&mut a, mesh, &self.vdofs, &c);
            let mut thermal = ElementLoad::zeros(nt, 2);
            for (t, cf) in coeff.iter().enumerate() {
                let [p, q, r] = mesh.triangles[t];
                let excess = (theta_new[p] + theta_new[q] + theta_new[r]) / 3.0 - l.theta_ref;
                for i in 0..2 {
                    for j in 0..2 {
                        thermal.add_flux(t, i, j, cf.beta[i][j] * excess);
                    }
                }
            }
            let thermal_load = assemble_divergence_rhs(mesh, &self.vdofs, &thermal);
            for ((bi, f), th) in b.iter_mut().zip(&body_load).zip(&thermal_load) {
                *bi += f + th;
            }
            apply_dirichlet(&mut a, &mut b, &u_bc);
            let (u_new, _) = pcg(&a, &b, Some(&u_it), ctl.cg_tol, ctl.cg_max_iter)?;

            let dtheta = max_abs_diff(&theta_new, &theta_it);
            let du = max_abs_diff(&u_new, &u_it);
            theta_changes.push(dtheta);
            u_changes.push(du);
            theta_it = theta_new;
            u_it = u_new;
            if theta_it.iter().chain(&u_it).any(|v| !v.is_finite()) {
                return Err(HotsError::NonFinite(format!("fields at t = {t_new}")));
            }
            if dtheta <= ctl.theta_tol && du <= ctl.u_tol {
                let snap = FieldSnapshot {
                    step: cur.step + 1,
                    t: t_new,
                    theta: theta_it,
                    u: u_it,
                    iterations: iter,
                    theta_change: dtheta,
                    u_change: du,
                };
                let log = StepLog { step: cur.step + 1, t: t_new, iterations: iter, theta_changes, u_changes };
                return Ok((snap, log));
            }
        }
        Err(HotsError::FixedPointDiverged(ctl.max_iter))
    }

    /// Step from the initial state to `t_end`.
    pub fn run(&self, keep: Keep) -> Result<RunOutput> {
        let [init, before] = self.initial();
        let mut snapshots = vec![init.clone()];
        let mut log = Vec::new();
        let (mut cur, mut prev) = (init, before);
        for _ in 0..self.control.n_steps() {
            let (next, entry) = self.step(&cur, &prev)?;
            log::debug!("t = {:.4}: {} fixed-point iterations", entry.t, entry.iterations);
            log.push(entry);
            snapshots.push(next.clone());
            if keep == Keep::Tail && snapshots.len() > 3 {
                snapshots.remove(0);
            }
            prev = std::mem::replace(&mut cur, next);
        }
        Ok(RunOutput { snapshots, log })
    }
}

/// Run a coupled problem to completion.
pub fn run<F: CoefficientField>(
    mesh: &TriMesh,
    field: &F,
    loading: &Loading,
    control: StepControl,
    keep: Keep,
) -> Result<RunOutput> {
    Stepper::new(mesh, field, loading, control)?.run(keep)
}
