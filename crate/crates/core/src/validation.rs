//! Resolved-mesh reference solves and relative error reports.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use crate::cell_lab::CellDesign;
use crate::error::{HotsError, Result};
use crate::fem::mesh::{build_rect_mesh, Rect, TriMesh};
use crate::fem::norms::P1Norms;
use crate::macro_solver::{run, FieldSnapshot, Keep, Loading, MaterialField, RunOutput, StepControl};
use crate::reconstruction::Variant;

/// Default cap on reference degrees of freedom (three per node).
pub const DEFAULT_DOF_CAP: usize = 300_000;

/// Fully resolved composite on a structured mesh aligned with both periods.
pub struct ResolvedProblem {
    pub mesh: TriMesh,
    pub field: MaterialField,
}

/// Number of cells per unit length needed for `per_period` cells per micro
/// period, checked to be an integer.
fn cells_per_unit(zeta2: f64, per_period: usize) -> Result<usize> {
    let n = per_period as f64 / zeta2;
    let r = n.round();
    if r < 1.0 || (n - r).abs() > 1e-6 * r {
        return Err(HotsError::Config(format!(
            "{per_period} cells per micro period of size {zeta2} do not tile a unit length"
        )));
    }
    Ok(r as usize)
}

impl ResolvedProblem {
    /// Mesh `domain` with `per_period` crossed cells per micro period and
    /// assign each triangle the constituent at its centroid.
    pub fn new(
        design: &CellDesign,
        domain: Rect,
        zeta1: f64,
        zeta2: f64,
        per_period: usize,
        dof_cap: usize,
    ) -> Result<Self> {
        let per_unit = cells_per_unit(zeta2, per_period)?;
        let nx = (domain.width() * per_unit as f64).round() as usize;
        let ny = (domain.height() * per_unit as f64).round() as usize;
        let nodes = (nx + 1) * (ny + 1) + nx * ny;
        if 3 * nodes > dof_cap {
            return Err(HotsError::Config(format!(
                "resolved mesh {nx}x{ny} needs {} dofs, above the cap of {dof_cap}; use larger ζ1 and ζ2",
                3 * nodes
            )));
        }
        let mesh = build_rect_mesh(domain, nx, ny, &[])?;
        let material_of =
            (0..mesh.n_triangles()).map(|t| design.resolved_material(mesh.centroid(t), zeta1, zeta2)).collect();
        let field = MaterialField { materials: design.materials.clone(), coupling: design.coupling, material_of };
        Ok(ResolvedProblem { mesh, field })
    }

    pub fn dofs(&self) -> usize {
        3 * self.mesh.n_nodes()
    }
}

/// Step the resolved problem, keeping only the final levels.
pub fn solve_reference(problem: &ResolvedProblem, loading: &Loading, control: StepControl) -> Result<RunOutput> {
    run(&problem.mesh, &problem.field, loading, control, Keep::Tail)
}

/// Which field an error row measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    Theta,
    U,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    L2,
    H1,
}

impl FieldKind {
    pub fn name(self) -> &'static str {
        match self {
            FieldKind::Theta => "theta",
            FieldKind::U => "u",
        }
    }
}

impl NormKind {
    pub fn name(self) -> &'static str {
        match self {
            NormKind::L2 => "l2",
            NormKind::H1 => "h1",
        }
    }
}

/// Relative error of one variant, or the absolute error when the reference
/// norm vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub t: f64,
    pub variant: Variant,
    pub field: FieldKind,
    pub norm: NormKind,
    pub value: f64,
    pub relative: bool,
}

/// `‖a − b‖ / ‖a‖` in L2 and the H1 seminorm for a field with `ncomp`
/// interleaved components; absolute when `‖a‖ = 0`.
pub fn relative_errors(
    norms: &P1Norms,
    reference: &[f64],
    candidate: &[f64],
    ncomp: usize,
) -> [(NormKind, f64, bool); 2] {
    let diff: Vec<f64> = reference.iter().zip(candidate).map(|(a, b)| a - b).collect();
    let rel = |num: f64, den: f64| {
        if den > 0.0 {
            ((num / den).sqrt(), true)
        } else {
            (num.sqrt(), false)
        }
    };
    let (l2, l2_rel) = rel(norms.l2_sq(&diff, ncomp), norms.l2_sq(reference, ncomp));
    let (h1, h1_rel) = rel(norms.h1_semi_sq(&diff, ncomp), norms.h1_semi_sq(reference, ncomp));
    [(NormKind::L2, l2, l2_rel), (NormKind::H1, h1, h1_rel)]
}

/// Problem sizes of the compared computations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CostSummary {
    pub reference_nodes: usize,
    pub reference_elements: usize,
    pub reference_dofs: usize,
    pub micro_nodes: usize,
    pub meso_nodes: usize,
    pub macro_nodes: usize,
    pub multiscale_dofs: usize,
}

/// Wall-clock seconds per stage, kept apart from the reproducible report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageSeconds {
    pub offline: f64,
    pub online: f64,
    pub reference: f64,
}

impl fmt::Display for StageSeconds {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "wall clock: offline {:.2} s, online {:.2} s, reference {:.2} s",
            self.offline, self.online, self.reference
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub cost: CostSummary,
}

/// Error ordering at one time level, best variant first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ordering {
    pub theta_h1: bool,
    pub theta_l2: bool,
    pub u_h1: bool,
}

impl Ordering {
    pub fn all(&self) -> bool {
        self.theta_h1 && self.theta_l2 && self.u_h1
    }
}

/// Relative slack allowed between consecutive L2 errors.
pub const L2_SLACK: f64 = 0.05;

impl ErrorReport {
    /// Add rows comparing each `(variant, theta, u)` with the reference on `mesh`.
    pub fn add_level(
        &mut self,
        mesh: &TriMesh,
        t: f64,
        reference: &FieldSnapshot,
        families: &[(Variant, &[f64], &[f64])],
    ) {
        let norms = P1Norms::new(mesh);
        for &(variant, theta, u) in families {
            for (field, r, c, nc) in
                [(FieldKind::Theta, &reference.theta, theta, 1), (FieldKind::U, &reference.u, u, 2)]
            {
                for (norm, value, relative) in relative_errors(&norms, r, c, nc) {
                    self.rows.push(ErrorRow { t, variant, field, norm, value, relative });
                }
            }
        }
    }

    pub fn value(&self, t: f64, variant: Variant, field: FieldKind, norm: NormKind) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| {
                (r.t - t).abs() <= 1e-12 * t.abs().max(1.0)
                    && r.variant == variant
                    && r.field == field
                    && r.norm == norm
            })
            .map(|r| r.value)
    }

    pub fn last_time(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.t).reduce(f64::max)
    }

    /// Whether HOTS < LOTS < SOTS < homogenized holds at `t` (strict in H1,
    /// within [`L2_SLACK`] in L2). `None` when a variant is missing.
    pub fn ordering(&self, t: f64) -> Option<Ordering> {
        let chain = |field, norm| -> Option<Vec<f64>> {
            [Variant::Hots, Variant::Lots, Variant::Sots, Variant::Homogenized]
                .iter()
                .map(|&v| self.value(t, v, field, norm))
                .collect()
        };
        let strict = |e: &[f64]| e.windows(2).all(|w| w[0] < w[1]);
        let loose = |e: &[f64]| e.windows(2).all(|w| w[0] <= w[1] * (1.0 + L2_SLACK));
        Some(Ordering {
            theta_h1: strict(&chain(FieldKind::Theta, NormKind::H1)?),
            theta_l2: loose(&chain(FieldKind::Theta, NormKind::L2)?),
            u_h1: strict(&chain(FieldKind::U, NormKind::H1)?),
        })
    }

    /// CSV with columns `t,variant,field,norm,value`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,variant,field,norm,value\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{:.12e}", r.t, r.variant, r.field.name(), r.norm.name(), r.value);
        }
        out
    }

    /// Human-readable summary of the final level and the cost figures.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        let Some(t) = self.last_time() else {
            return "no error levels recorded\n".into();
        };
        let _ = writeln!(out, "errors at t = {t}");
        let _ = writeln!(out, "{:<8} {:>12} {:>12} {:>12} {:>12}", "variant", "theta_l2", "theta_h1", "u_l2", "u_h1");
        for v in Variant::ALL {
            let cell = |f, n| self.value(t, v, f, n).map_or("-".to_string(), |x| format!("{x:.4e}"));
            let _ = writeln!(
                out,
                "{:<8} {:>12} {:>12} {:>12} {:>12}",
                v.name(),
                cell(FieldKind::Theta, NormKind::L2),
                cell(FieldKind::Theta, NormKind::H1),
                cell(FieldKind::U, NormKind::L2),
                cell(FieldKind::U, NormKind::H1)
            );
        }
        if self.rows.iter().any(|r| !r.relative) {
            let _ = writeln!(out, "note: some reference norms vanish; those entries are absolute errors");
        }
        match self.ordering(t) {
            Some(o) => {
                let _ = writeln!(
                    out,
                    "ordering hots < lots < sots < theta0: theta_h1 {}, theta_l2 {}, u_h1 {}",
                    o.theta_h1, o.theta_l2, o.u_h1
                );
            }
            None => {
                let _ = writeln!(out, "ordering: not all variants present");
            }
        }
        let c = &self.cost;
        let _ = writeln!(
            out,
            "reference: {} nodes, {} elements, {} dofs",
            c.reference_nodes, c.reference_elements, c.reference_dofs
        );
        let _ = writeln!(
            out,
            "multiscale: {} micro + {} meso + {} macro nodes, {} dofs",
            c.micro_nodes, c.meso_nodes, c.macro_nodes, c.multiscale_dofs
        );
        out
    }
}
