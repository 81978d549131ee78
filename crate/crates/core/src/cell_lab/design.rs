use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::coefficients::Coefficients;
use crate::error::{HotsError, Result};
use crate::fem::mesh::{build_rect_mesh, Rect, RegionSpec, TriMesh, DEFAULT_REGION};
use crate::materials::{CouplingMode, MaterialModel};

/// Boundary treatment of every cell problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellBoundary {
    /// Homogeneous Dirichlet data on the whole cell boundary.
    #[default]
    Dirichlet,
    /// Dirichlet on the faces normal to the first axis, periodic in the
    /// second. Only meant for cells whose data vary along the first axis,
    /// where it reduces every problem to its one-dimensional form.
    LaminateX1,
    /// Periodic in both directions, normalized to zero cell mean.
    Periodic,
}

/// What fills a tagged region of the meso cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Index into [`CellDesign::materials`].
    Material(usize),
    /// Index into [`CellDesign::micro`]: a region homogenized from that cell.
    Micro(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct MicroCell {
    pub name: String,
    pub mesh: TriMesh,
    /// Material index per triangle.
    pub material: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MesoCell {
    pub mesh: TriMesh,
    pub phase: Vec<Phase>,
}

/// Geometry and constituents of the nested cells.
#[derive(Debug, Clone, PartialEq)]
pub struct CellDesign {
    pub materials: Vec<MaterialModel>,
    pub coupling: CouplingMode,
    pub micro: Vec<MicroCell>,
    pub meso: MesoCell,
    pub boundary: CellBoundary,
}

/// User-facing description of a micro cell: regions plus a tag → material map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MicroCellSpec {
    pub name: String,
    pub n: usize,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    pub fill: BTreeMap<String, String>,
}

/// Meso region filling: either a constituent name or a micro cell name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FillSpec {
    Material(String),
    Micro(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MesoCellSpec {
    pub n: usize,
    #[serde(default)]
    pub regions: Vec<RegionSpec>,
    pub fill: BTreeMap<String, FillSpec>,
}

impl CellDesign {
    /// Resolve names and mesh the cells.
    pub fn from_specs(
        materials: Vec<MaterialModel>,
        coupling: CouplingMode,
        micro: &[MicroCellSpec],
        meso: &MesoCellSpec,
        boundary: CellBoundary,
    ) -> Result<Self> {
        for m in &materials {
            m.validate()?;
        }
        let material_index = |name: &str| {
            materials
                .iter()
                .position(|m| m.name == name)
                .ok_or_else(|| HotsError::Config(format!("unknown material `{name}`")))
        };
        let mut micro_cells = Vec::with_capacity(micro.len());
        for spec in micro {
            let mesh = build_rect_mesh(Rect::UNIT, spec.n, spec.n, &spec.regions)?;
            let material = mesh
                .region_tag
                .iter()
                .map(|tag| {
                    let name = spec.fill.get(tag).ok_or_else(|| {
                        HotsError::Config(format!("micro cell `{}`: region `{tag}` has no fill", spec.name))
                    })?;
                    material_index(name)
                })
                .collect::<Result<Vec<_>>>()?;
            micro_cells.push(MicroCell { name: spec.name.clone(), mesh, material });
        }
        let mesh = build_rect_mesh(Rect::UNIT, meso.n, meso.n, &meso.regions)?;
        let phase = mesh
            .region_tag
            .iter()
            .map(|tag| match meso.fill.get(tag) {
                Some(FillSpec::Material(name)) => material_index(name).map(Phase::Material),
                Some(FillSpec::Micro(name)) => micro_cells
                    .iter()
                    .position(|c| &c.name == name)
                    .map(Phase::Micro)
                    .ok_or_else(|| HotsError::Config(format!("unknown micro cell `{name}`"))),
                None => Err(HotsError::Config(format!("meso region `{tag}` has no fill"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellDesign { materials, coupling, micro: micro_cells, meso: MesoCell { mesh, phase }, boundary })
    }

    /// Raw coefficients of each micro triangle at `theta`.
    pub fn micro_coefficients(&self, cell: usize, theta: f64) -> Result<Vec<Coefficients>> {
        let per_material = self.material_coefficients(theta)?;
        Ok(self.micro[cell].material.iter().map(|&m| per_material[m]).collect())
    }

    pub fn material_coefficients(&self, theta: f64) -> Result<Vec<Coefficients>> {
        self.materials.iter().map(|m| m.evaluate(theta, self.coupling).map(Coefficients::from)).collect()
    }

    /// Meso triangle coefficients given each micro cell's homogenized set.
    pub fn meso_coefficients(&self, theta: f64, barred: &[Coefficients]) -> Result<Vec<Coefficients>> {
        let per_material = self.material_coefficients(theta)?;
        Ok(self
            .meso
            .phase
            .iter()
            .map(|p| match *p {
                Phase::Material(m) => per_material[m],
                Phase::Micro(c) => barred[c],
            })
            .collect())
    }

    /// Material assignment of the fully resolved structure at `x`, for meso
    /// period `zeta1` and micro period `zeta2`.
    pub fn resolved_material(&self, x: [f64; 2], zeta1: f64, zeta2: f64) -> usize {
        let y = [frac(x[0] / zeta1), frac(x[1] / zeta1)];
        let (t, _) = self.meso.mesh.locate(y);
        match self.meso.phase[t] {
            Phase::Material(m) => m,
            Phase::Micro(c) => {
                let z = [frac(x[0] / zeta2), frac(x[1] / zeta2)];
                let cell = &self.micro[c];
                let (tz, _) = cell.mesh.locate(z);
                cell.material[tz]
            }
        }
    }

    /// Micro cell index of the meso phase at `y`, if that phase is a composite.
    pub fn micro_cell_at(&self, y: [f64; 2]) -> Option<usize> {
        let (t, _) = self.meso.mesh.locate(y);
        match self.meso.phase[t] {
            Phase::Micro(c) => Some(c),
            Phase::Material(_) => None,
        }
    }

    /// Smallest and largest conductivity among the constituents at `theta`.
    pub fn conductivity_range(&self, theta: f64) -> Result<(f64, f64)> {
        let ks = self.material_coefficients(theta)?;
        Ok(ks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| (lo.min(c.k[0][0]), hi.max(c.k[0][0]))))
    }

    /// Example-style default: a square micro-composite inclusion of side 0.5
    /// centered in a material-1 matrix; the micro cell is a material-2
    /// square of side 0.5 in a material-3 matrix.
    pub fn default_specs(n_micro: usize, n_meso: usize) -> (Vec<MicroCellSpec>, MesoCellSpec) {
        let square = |tag: &str| RegionSpec {
            tag: tag.into(),
            shape: crate::fem::mesh::Shape::Square { center: [0.5, 0.5], side: 0.5 },
        };
        let micro = MicroCellSpec {
            name: "Z".into(),
            n: n_micro,
            regions: vec![square("inclusion")],
            fill: BTreeMap::from([
                (DEFAULT_REGION.to_string(), "material3".to_string()),
                ("inclusion".to_string(), "material2".to_string()),
            ]),
        };
        let meso = MesoCellSpec {
            n: n_meso,
            regions: vec![square("composite")],
            fill: BTreeMap::from([
                (DEFAULT_REGION.to_string(), FillSpec::Material("material1".into())),
                ("composite".to_string(), FillSpec::Micro("Z".into())),
            ]),
        };
        (vec![micro], meso)
    }
}

/// Fractional part in `[0, 1)`, robust to values a hair below an integer.
pub fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if f >= 1.0 - 1e-12 {
        0.0
    } else {
        f
    }
}
