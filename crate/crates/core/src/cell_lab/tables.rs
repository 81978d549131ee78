use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::coefficients::Coefficients;
use super::design::CellDesign;
use super::ids::{CellProblemId, Symbol};
use super::problems::{
    homogenize, solve_first_order, solve_meso_extras, solve_micro_extras, solve_second_order, FieldSet, FirstOrder,
    LevelSample, MESO, MICRO,
};
use super::solver::CellSolver;
use crate::error::{HotsError, Result};
use crate::fem::io::{read_nodal_csv, write_nodal_csv};
use crate::fem::mesh::TriMesh;

/// Which cell a field lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Micro(usize),
    Meso,
}

/// Linear interpolation weights between two bracketing samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaWeight {
    pub lo: usize,
    pub hi: usize,
    /// Weight of `hi`.
    pub w: f64,
}

impl ThetaWeight {
    #[inline]
    pub fn blend(&self, lo: f64, hi: f64) -> f64 {
        lo + self.w * (hi - lo)
    }
}

/// Solved cell functions and homogenized coefficients over a θ-grid.
#[derive(Debug)]
pub struct ThetaTables {
    pub design: CellDesign,
    pub grid: Vec<f64>,
    /// `micro[cell][sample]`
    pub micro: Vec<Vec<LevelSample>>,
    pub meso: Vec<LevelSample>,
    clamp_warned: AtomicBool,
}

/// Uniform grid of `n` samples on `[lo, hi]`.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 || !(hi > lo) {
        return Err(HotsError::Config(format!(
            "θ-grid needs at least two samples on an increasing range, got {n} on [{lo}, {hi}]"
        )));
    }
    Ok((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
}

fn context(what: &str, theta: f64) -> impl Fn(HotsError) -> HotsError + '_ {
    move |e| HotsError::Solver(format!("{what} at θ = {theta}: {e}"))
}

/// Solve every cell problem of `design` at each sample of `grid`.
pub fn build_theta_tables(design: &CellDesign, grid: &[f64]) -> Result<ThetaTables> {
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HotsError::Config("θ-grid must be strictly increasing with at least two samples".into()));
    }
    let boundary = design.boundary;

    let mut micro = Vec::with_capacity(design.micro.len());
    for (c, cell) in design.micro.iter().enumerate() {
        let mesh = &cell.mesh;
        let first: Vec<(LevelSample, CellSolver)> = grid
            .par_iter()
            .map(|&theta| {
                let coeff = design.micro_coefficients(c, theta)?;
                let solver = CellSolver::new(mesh, boundary, &coeff).map_err(context(&cell.name, theta))?;
                let fields = solve_first_order(mesh, &solver, &coeff, &MICRO).map_err(context(&cell.name, theta))?;
                let homogenized = homogenize(mesh, &coeff, &FirstOrder::of(&fields, &MICRO));
                Ok((LevelSample { coeff, homogenized, fields }, solver))
            })
            .collect::<Result<_>>()?;
        let (mut samples, solvers): (Vec<LevelSample>, Vec<CellSolver>) = first.into_iter().unzip();
        let second: Vec<FieldSet> = (0..grid.len())
            .into_par_iter()
            .map(|s| {
                let mut f = solve_second_order(mesh, &solvers[s], grid, s, &samples, &MICRO)
                    .map_err(context(&cell.name, grid[s]))?;
                f.extend(
                    solve_micro_extras(mesh, &solvers[s], grid, s, &samples).map_err(context(&cell.name, grid[s]))?,
                );
                Ok(f)
            })
            .collect::<Result<_>>()?;
        for (smp, f) in samples.iter_mut().zip(second) {
            smp.fields.extend(f);
        }
        micro.push(samples);
    }

    let mesh = &design.meso.mesh;
    let first: Vec<(LevelSample, CellSolver)> = grid
        .par_iter()
        .enumerate()
        .map(|(s, &theta)| {
            let barred: Vec<Coefficients> = micro.iter().map(|m| m[s].homogenized).collect();
            let coeff = design.meso_coefficients(theta, &barred)?;
            let solver = CellSolver::new(mesh, boundary, &coeff).map_err(context("meso cell", theta))?;
            let fields = solve_first_order(mesh, &solver, &coeff, &MESO).map_err(context("meso cell", theta))?;
            let homogenized = homogenize(mesh, &coeff, &FirstOrder::of(&fields, &MESO));
            Ok((LevelSample { coeff, homogenized, fields }, solver))
        })
        .collect::<Result<_>>()?;
    let (mut meso, solvers): (Vec<LevelSample>, Vec<CellSolver>) = first.into_iter().unzip();
    let second: Vec<FieldSet> = (0..grid.len())
        .into_par_iter()
        .map(|s| {
            let mut f =
                solve_second_order(mesh, &solvers[s], grid, s, &meso, &MESO).map_err(context("meso cell", grid[s]))?;
            f.extend(solve_meso_extras(mesh, &solvers[s], grid, s, &meso).map_err(context("meso cell", grid[s]))?);
            Ok(f)
        })
        .collect::<Result<_>>()?;
    for (smp, f) in meso.iter_mut().zip(second) {
        smp.fields.extend(f);
    }

    for (s, smp) in meso.iter().enumerate() {
        if !smp.homogenized.is_finite() {
            return Err(HotsError::NonFinite(format!("homogenized coefficients at θ = {}", grid[s])));
        }
    }
    Ok(ThetaTables { design: design.clone(), grid: grid.to_vec(), micro, meso, clamp_warned: AtomicBool::new(false) })
}

impl ThetaTables {
    pub fn mesh(&self, owner: Owner) -> &TriMesh {
        match owner {
            Owner::Micro(c) => &self.design.micro[c].mesh,
            Owner::Meso => &self.design.meso.mesh,
        }
    }

    pub fn samples(&self, owner: Owner) -> &[LevelSample] {
        match owner {
            Owner::Micro(c) => &self.micro[c],
            Owner::Meso => &self.meso,
        }
    }

    /// Bracketing samples for `theta`, clamped to the grid.
    pub fn weight(&self, theta: f64) -> ThetaWeight {
        let g = &self.grid;
        let n = g.len();
        if !(theta >= g[0] && theta <= g[n - 1]) && !self.clamp_warned.swap(true, Ordering::Relaxed) {
            log::warn!("θ = {theta} outside the table range [{}, {}]; clamping", g[0], g[n - 1]);
        }
        let th = theta.clamp(g[0], g[n - 1]);
        let hi = g.partition_point(|&v| v < th).clamp(1, n - 1);
        let lo = hi - 1;
        ThetaWeight { lo, hi, w: (th - g[lo]) / (g[hi] - g[lo]) }
    }

    /// Macro (hat) coefficients at `theta`.
    pub fn macro_coefficients(&self, theta: f64) -> Coefficients {
        let w = self.weight(theta);
        self.meso[w.lo].homogenized.combine(1.0 - w.w, &self.meso[w.hi].homogenized, w.w)
    }

    /// Homogenized coefficients of micro cell `cell` at `theta`.
    pub fn meso_coefficients(&self, cell: usize, theta: f64) -> Coefficients {
        let w = self.weight(theta);
        let s = &self.micro[cell];
        s[w.lo].homogenized.combine(1.0 - w.w, &s[w.hi].homogenized, w.w)
    }

    /// Whole nodal field of `id` at `theta`.
    pub fn field(&self, owner: Owner, id: CellProblemId, theta: f64) -> Option<Vec<f64>> {
        let w = self.weight(theta);
        let s = self.samples(owner);
        let (a, b) = (s[w.lo].fields.get(&id)?, s[w.hi].fields.get(&id)?);
        Some(a.iter().zip(b).map(|(x, y)| w.blend(*x, *y)).collect())
    }

    /// Point value of field `id` inside triangle `tri` with barycentric
    /// weights `bary`, blended between samples.
    pub fn point_value(&self, owner: Owner, id: CellProblemId, w: ThetaWeight, tri: usize, bary: [f64; 3]) -> [f64; 2] {
        let s = self.samples(owner);
        let nodes = self.mesh(owner).triangles[tri];
        let nc = id.ncomp();
        let mut out = [0.0; 2];
        let (Some(a), Some(b)) = (s[w.lo].fields.get(&id), s[w.hi].fields.get(&id)) else {
            return out;
        };
        for (c, o) in out.iter_mut().enumerate().take(nc) {
            let at = |f: &[f64]| {
                bary[0] * f[nodes[0] * nc + c] + bary[1] * f[nodes[1] * nc + c] + bary[2] * f[nodes[2] * nc + c]
            };
            *o = w.blend(at(a), at(b));
        }
        out
    }

    /// Drop every field of the given owner (used for reduction checks).
    pub fn zero_fields(&mut self, owner: Owner, keep: impl Fn(Symbol) -> bool) {
        let samples = match owner {
            Owner::Micro(c) => &mut self.micro[c],
            Owner::Meso => &mut self.meso,
        };
        for smp in samples.iter_mut() {
            for (id, f) in smp.fields.iter_mut() {
                if !keep(id.symbol) {
                    f.iter_mut().for_each(|v| *v = 0.0);
                }
            }
        }
    }

    /// One row per sample: θ, then the macro set and each micro cell's set.
    pub fn coefficient_csv(&self) -> String {
        let mut header = vec!["theta".to_string()];
        fn cols(prefix: &str, c: &Coefficients) -> Vec<(String, f64)> {
            c.to_row().into_iter().map(|(n, v)| (format!("{prefix}{n}"), v)).collect()
        }
        let mut rows = Vec::new();
        for (s, &theta) in self.grid.iter().enumerate() {
            let mut row = cols("hat_", &self.meso[s].homogenized);
            for (c, cell) in self.design.micro.iter().enumerate() {
                row.extend(cols(&format!("bar_{}_", cell.name), &self.micro[c][s].homogenized));
            }
            if s == 0 {
                header.extend(row.iter().map(|(n, _)| n.clone()));
            }
            rows.push((theta, row));
        }
        let mut out = header.join(",");
        out.push('\n');
        for (theta, row) in rows {
            let _ = write!(out, "{theta}");
            for (_, v) in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    /// Write CSV field files, the coefficient CSV and a JSON manifest.
    pub fn save(&self, dir: &Path, key: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let owners: Vec<(Owner, String)> = self
            .design
            .micro
            .iter()
            .enumerate()
            .map(|(c, cell)| (Owner::Micro(c), format!("micro_{}", cell.name)))
            .chain(std::iter::once((Owner::Meso, "meso".to_string())))
            .collect();
        for (owner, tag) in &owners {
            let mesh = self.mesh(*owner);
            let mesh_hash = mesh_digest(mesh);
            for (s, smp) in self.samples(*owner).iter().enumerate() {
                let mut names = Vec::new();
                let mut columns = Vec::new();
                let mut problems = Vec::new();
                for (id, f) in &smp.fields {
                    let nc = id.ncomp();
                    let mut labels = Vec::new();
                    for c in 0..nc {
                        let name = if nc == 1 { id.label() } else { format!("{}.{}", id.label(), c + 1) };
                        columns.push(f.iter().skip(c).step_by(nc).copied().collect::<Vec<f64>>());
                        labels.push(name.clone());
                        names.push(name);
                    }
                    problems.push(ProblemEntry { id: *id, columns: labels });
                }
                let file = format!("{tag}_s{s:02}.csv");
                let cols: Vec<(&str, &[f64])> =
                    names.iter().map(String::as_str).zip(columns.iter().map(Vec::as_slice)).collect();
                write_nodal_csv(&dir.join(&file), mesh, &cols)?;
                files.push(FileEntry {
                    owner: tag.clone(),
                    sample: s,
                    theta: self.grid[s],
                    file,
                    mesh_hash: mesh_hash.clone(),
                    problems,
                });
            }
        }
        std::fs::write(dir.join("coefficients.csv"), self.coefficient_csv())?;
        let homogenized = Homogenized {
            meso: self.meso.iter().map(|s| s.homogenized).collect(),
            micro: self.micro.iter().map(|cell| cell.iter().map(|s| s.homogenized).collect()).collect(),
        };
        let manifest = TableManifest { key: key.to_string(), grid: self.grid.clone(), homogenized, files };
        std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    /// Reload tables written by [`ThetaTables::save`] for the same design.
    pub fn load(dir: &Path, design: &CellDesign) -> Result<(Self, String)> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: TableManifest = serde_json::from_str(&text)?;
        let n = manifest.grid.len();
        if manifest.homogenized.micro.len() != design.micro.len() {
            return Err(HotsError::Io("table manifest does not match the cell design".into()));
        }
        let mut micro: Vec<Vec<LevelSample>> = Vec::new();
        for (c, hom) in manifest.homogenized.micro.iter().enumerate() {
            let mut samples = Vec::with_capacity(n);
            for (s, h) in hom.iter().enumerate() {
                samples.push(LevelSample {
                    coeff: design.micro_coefficients(c, manifest.grid[s])?,
                    homogenized: *h,
                    fields: FieldSet::new(),
                });
            }
            micro.push(samples);
        }
        let mut meso = Vec::with_capacity(n);
        for (s, h) in manifest.homogenized.meso.iter().enumerate() {
            let barred: Vec<Coefficients> = micro.iter().map(|m| m[s].homogenized).collect();
            meso.push(LevelSample {
                coeff: design.meso_coefficients(manifest.grid[s], &barred)?,
                homogenized: *h,
                fields: FieldSet::new(),
            });
        }
        for entry in &manifest.files {
            let (owner_mesh, samples) = if entry.owner == "meso" {
                (&design.meso.mesh, &mut meso)
            } else {
                let name = entry.owner.trim_start_matches("micro_");
                let c = design
                    .micro
                    .iter()
                    .position(|m| m.name == name)
                    .ok_or_else(|| HotsError::Io(format!("unknown table owner {}", entry.owner)))?;
                (&design.micro[c].mesh, &mut micro[c])
            };
            if mesh_digest(owner_mesh) != entry.mesh_hash {
                return Err(HotsError::Io(format!("{}: mesh does not match the design", entry.file)));
            }
            let (names, cols) = read_nodal_csv(&dir.join(&entry.file))?;
            let column: BTreeMap<&str, &Vec<f64>> = names.iter().map(String::as_str).zip(cols.iter()).collect();
            let smp = &mut samples[entry.sample];
            for p in &entry.problems {
                let nc = p.id.ncomp();
                let mut f = vec![0.0; owner_mesh.n_nodes() * nc];
                for (c, label) in p.columns.iter().enumerate() {
                    let col = column
                        .get(label.as_str())
                        .ok_or_else(|| HotsError::Io(format!("{}: missing column {label}", entry.file)))?;
                    for (node, v) in col.iter().enumerate() {
                        f[node * nc + c] = *v;
                    }
                }
                smp.fields.insert(p.id, f);
            }
        }
        let tables = ThetaTables {
            design: design.clone(),
            grid: manifest.grid,
            micro,
            meso,
            clamp_warned: AtomicBool::new(false),
        };
        Ok((tables, manifest.key))
    }

    pub fn problem_count(&self) -> usize {
        self.micro.iter().map(|c| c[0].fields.len()).sum::<usize>() + self.meso[0].fields.len()
    }
}

/// Content digest of a mesh (nodes, connectivity and tags).
pub fn mesh_digest(mesh: &TriMesh) -> String {
    let mut h = Sha256::new();
    h.update(mesh.to_text().as_bytes());
    format!("{:x}", h.finalize())
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemEntry {
    id: CellProblemId,
    columns: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
struct FileEntry {
    owner: String,
    sample: usize,
    theta: f64,
    file: String,
    mesh_hash: String,
    problems: Vec<ProblemEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Homogenized {
    meso: Vec<Coefficients>,
    micro: Vec<Vec<Coefficients>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TableManifest {
    key: String,
    grid: Vec<f64>,
    homogenized: Homogenized,
    files: Vec<FileEntry>,
}
