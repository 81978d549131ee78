//! Run configuration: a TOML document with one table per concern.
//!
//! Every field except `[scales]` has a default, and [`RunConfig::resolved`]
//! fills them in so that manifests can echo a self-contained config.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Deserializer, Serialize};

use crate::cell_lab::{uniform_grid, CellBoundary, CellDesign, MesoCellSpec, MicroCellSpec};
use crate::error::{HotsError, Result};
use crate::fem::mesh::{build_rect_mesh, Rect, TriMesh, SIDE_TAGS};
use crate::macro_solver::{constant_scalar, constant_vector, Loading, StepControl};
use crate::materials::{CouplingMode, MaterialModel};
use crate::validation::DEFAULT_DOF_CAP;

/// Ratios must be reciprocal integers to this relative tolerance.
const INTEGER_TOL: f64 = 1e-9;

/// A length-scale ratio written either as a number or as `"p/q"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Ratio(pub f64);

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Number(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(Ratio(v)),
            Repr::Text(s) => parse_ratio(&s).map(Ratio).map_err(serde::de::Error::custom),
        }
    }
}

fn parse_ratio(s: &str) -> std::result::Result<f64, String> {
    let bad = || format!("`{s}` is neither a number nor p/q");
    match s.split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scales {
    pub zeta1: Ratio,
    pub zeta2: Ratio,
}

impl Scales {
    pub fn zeta1(&self) -> f64 {
        self.zeta1.0
    }

    pub fn zeta2(&self) -> f64 {
        self.zeta2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellsConfig {
    pub boundary: CellBoundary,
    /// Mesh resolution used for the built-in cells when `micro`/`meso` are absent.
    pub n: usize,
    pub micro: Vec<MicroCellSpec>,
    pub meso: Option<MesoCellSpec>,
}

impl Default for CellsConfig {
    fn default() -> Self {
        CellsConfig { boundary: CellBoundary::Dirichlet, n: 16, micro: Vec::new(), meso: None }
    }
}

/// Temperature samples for the offline tables. Bounds default to a window
/// around the macro reference temperature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThetaGridConfig {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub samples: usize,
}

impl Default for ThetaGridConfig {
    fn default() -> Self {
        ThetaGridConfig { min: None, max: None, samples: 11 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedScalar {
    pub tag: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaggedVector {
    pub tag: String,
    pub value: [f64; 2],
}

/// Macro domain, mesh, sources, boundary and initial data. All data are
/// constant in space and time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MacroConfig {
    pub domain: Rect,
    pub n: [usize; 2],
    pub theta_ref: f64,
    pub heat: f64,
    pub body: [f64; 2],
    /// Prescribed temperature on `theta_tags`; defaults to `theta_ref`.
    pub theta_boundary: Option<f64>,
    pub u_boundary: [f64; 2],
    pub theta_tags: Vec<String>,
    pub u_tags: Vec<String>,
    pub flux: Vec<TaggedScalar>,
    pub traction: Vec<TaggedVector>,
    /// Initial temperature; defaults to `theta_ref`.
    pub theta_initial: Option<f64>,
    pub u_initial: [f64; 2],
    pub v_initial: [f64; 2],
}

impl Default for MacroConfig {
    fn default() -> Self {
        let sides = SIDE_TAGS.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        MacroConfig {
            domain: Rect::UNIT,
            n: [18, 18],
            theta_ref: 373.15,
            heat: 1.0e4,
            body: [-8.0e3, -8.0e3],
            theta_boundary: None,
            u_boundary: [0.0, 0.0],
            theta_tags: sides.clone(),
            u_tags: sides,
            flux: Vec::new(),
            traction: Vec::new(),
            theta_initial: None,
            u_initial: [0.0, 0.0],
            v_initial: [0.0, 0.0],
        }
    }
}

impl MacroConfig {
    pub fn mesh(&self) -> Result<TriMesh> {
        build_rect_mesh(self.domain, self.n[0], self.n[1], &[])
    }

    pub fn loading(&self) -> Loading {
        let theta_b = self.theta_boundary.unwrap_or(self.theta_ref);
        let theta_0 = self.theta_initial.unwrap_or(self.theta_ref);
        Loading {
            theta_ref: self.theta_ref,
            heat: constant_scalar(self.heat),
            body: constant_vector(self.body),
            theta_boundary: constant_scalar(theta_b),
            u_boundary: constant_vector(self.u_boundary),
            theta_tags: self.theta_tags.clone(),
            u_tags: self.u_tags.clone(),
            flux: self.flux.iter().map(|f| (f.tag.clone(), constant_scalar(f.value))).collect(),
            traction: self.traction.iter().map(|f| (f.tag.clone(), constant_vector(f.value))).collect(),
            theta_initial: constant_scalar(theta_0),
            u_initial: constant_vector(self.u_initial),
            v_initial: constant_vector(self.v_initial),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceConfig {
    /// Elements per micro period and direction.
    pub per_period: usize,
    pub dof_cap: usize,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        ReferenceConfig { per_period: 8, dof_cap: DEFAULT_DOF_CAP }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineConfig {
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Write every `snapshot_every`-th macro level (the last is always written).
    pub snapshot_every: usize,
    pub line: Option<LineConfig>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("hots-out"),
            snapshot_every: 1,
            line: Some(LineConfig { start: [0.0, 0.5], end: [1.0, 0.5], points: 541 }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Extra or overriding constituents; the built-in `material1..3` are always available.
    #[serde(default)]
    pub materials: Vec<MaterialModel>,
    #[serde(default = "default_coupling")]
    pub coupling: CouplingMode,
    pub scales: Scales,
    #[serde(default)]
    pub cells: CellsConfig,
    #[serde(default)]
    pub theta_grid: ThetaGridConfig,
    #[serde(default, rename = "macro")]
    pub macro_problem: MacroConfig,
    #[serde(default)]
    pub time: StepControl,
    #[serde(default)]
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_coupling() -> CouplingMode {
    CouplingMode::ReferenceTemperature { theta_ref: MacroConfig::default().theta_ref }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RunConfig = toml::from_str(text).map_err(|e| HotsError::Config(e.to_string()))?;
        let cfg = raw.resolved();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HotsError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            HotsError::Config(msg) => HotsError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("run config always serializes")
    }

    /// Fill every optional default so the config stands on its own.
    pub fn resolved(mut self) -> Self {
        let mut library: Vec<MaterialModel> = (1..=3).filter_map(MaterialModel::builtin).collect();
        for m in std::mem::take(&mut self.materials) {
            match library.iter_mut().find(|b| b.name == m.name) {
                Some(slot) => *slot = m,
                None => library.push(m),
            }
        }
        self.materials = library;
        if self.cells.micro.is_empty() && self.cells.meso.is_none() {
            let (micro, meso) = CellDesign::default_specs(self.cells.n, self.cells.n);
            self.cells.micro = micro;
            self.cells.meso = Some(meso);
        }
        let mp = &mut self.macro_problem;
        mp.theta_boundary.get_or_insert(mp.theta_ref);
        mp.theta_initial.get_or_insert(mp.theta_ref);
        self.theta_grid.min.get_or_insert(mp.theta_ref - 1.0);
        self.theta_grid.max.get_or_insert(mp.theta_ref + 9.0);
        self
    }

    /// Check every invariant and report all violations at once.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let (z1, z2) = (self.scales.zeta1(), self.scales.zeta2());
        if !(z2 > 0.0 && z2 < z1 && z1 < 1.0) {
            problems.push(format!("scales must satisfy 0 < zeta2 < zeta1 < 1 (got {z1}, {z2})"));
        } else {
            if !is_integer(1.0 / z1) {
                problems.push(format!("1/zeta1 = {} is not an integer", 1.0 / z1));
            }
            if !is_integer(z1 / z2) {
                problems.push(format!("zeta1/zeta2 = {} is not an integer", z1 / z2));
            }
            let d = &self.macro_problem.domain;
            for (axis, len) in [("x1", d.width()), ("x2", d.height())] {
                if !is_integer(len / z1) {
                    problems.push(format!("domain extent along {axis} ({len}) is not a multiple of zeta1"));
                }
            }
        }
        if let Err(e) = self.design() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.theta_grid() {
            problems.push(e.to_string());
        }
        if let Err(e) = self.time.validate() {
            problems.push(e.to_string());
        }
        let mp = &self.macro_problem;
        if let Err(e) = Rect::new(mp.domain.min, mp.domain.max) {
            problems.push(e.to_string());
        }
        if mp.n[0] == 0 || mp.n[1] == 0 {
            problems.push("macro mesh needs at least one cell per direction".into());
        }
        let known = |tag: &String| SIDE_TAGS.contains(&tag.as_str());
        for tag in mp
            .theta_tags
            .iter()
            .chain(&mp.u_tags)
            .chain(mp.flux.iter().map(|f| &f.tag))
            .chain(mp.traction.iter().map(|f| &f.tag))
        {
            if !known(tag) {
                problems.push(format!("unknown boundary tag `{tag}` (expected one of {SIDE_TAGS:?})"));
            }
        }
        if self.reference.per_period == 0 {
            problems.push("reference.per_period must be positive".into());
        }
        if self.output.snapshot_every == 0 {
            problems.push("output.snapshot_every must be positive".into());
        }
        if let Some(line) = &self.output.line {
            if line.points < 2 {
                problems.push("output.line needs at least two points".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(HotsError::Config(problems.join("; ")))
        }
    }

    pub fn design(&self) -> Result<CellDesign> {
        let meso = self.cells.meso.as_ref().ok_or_else(|| HotsError::Config("cells.meso is missing".into()))?;
        CellDesign::from_specs(self.materials.clone(), self.coupling, &self.cells.micro, meso, self.cells.boundary)
    }

    pub fn theta_grid(&self) -> Result<Vec<f64>> {
        let g = &self.theta_grid;
        let lo = g.min.unwrap_or(self.macro_problem.theta_ref - 1.0);
        let hi = g.max.unwrap_or(self.macro_problem.theta_ref + 9.0);
        uniform_grid(lo, hi, g.samples)
    }
}

fn is_integer(v: f64) -> bool {
    v.is_finite() && v >= 1.0 - INTEGER_TOL && (v - v.round()).abs() <= INTEGER_TOL * v.abs().max(1.0)
}
