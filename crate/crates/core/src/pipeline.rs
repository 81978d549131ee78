//! Stage orchestration and on-disk artifacts.
//!
//! Layout under the output directory:
//!
//! ```text
//! offline/<key>/        θ-sampled cell tables plus manifest.json
//! online/               level_NNNNN.csv per written level, manifest.json
//! reconstruct/          <variant>.csv on the resolved grid, line.csv
//! reference/            final.csv, manifest.json
//! compare/              errors.csv, summary.txt, report.json
//! ```
//!
//! Manifests hold only deterministic content so that reruns reproduce them
//! byte for byte; wall-clock times go to a sibling `timing.json`.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cell_lab::{build_theta_tables, CellDesign, ThetaTables};
use crate::config::RunConfig;
use crate::error::{HotsError, Result};
use crate::fem::io::{read_nodal_csv, write_nodal_csv};
use crate::fem::mesh::TriMesh;
use crate::macro_solver::{run, FieldSnapshot, HomogenizedField, Keep, StepLog};
use crate::reconstruction::{MacroFields, Reconstructor, Variant};
use crate::validation::{solve_reference, CostSummary, ErrorReport, ResolvedProblem, StageSeconds};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Offline,
    Online,
    Reconstruct,
    Reference,
    Compare,
    All,
}

impl Stage {
    /// Stages in execution order, excluding `All`.
    pub const CHAIN: [Stage; 5] = [Stage::Offline, Stage::Online, Stage::Reconstruct, Stage::Reference, Stage::Compare];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Offline => "offline",
            Stage::Online => "online",
            Stage::Reconstruct => "reconstruct",
            Stage::Reference => "reference",
            Stage::Compare => "compare",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = HotsError;

    fn from_str(s: &str) -> Result<Self> {
        Stage::CHAIN
            .into_iter()
            .chain([Stage::All])
            .find(|st| st.name() == s)
            .ok_or_else(|| HotsError::Config(format!("unknown stage `{s}`")))
    }
}

/// Outcome of one stage.
#[derive(Debug, Clone)]
pub struct StageReport {
    pub stage: Stage,
    pub artifacts: Vec<PathBuf>,
    /// Offline only: whether existing tables were reused.
    pub cache_hit: bool,
    pub seconds: f64,
    /// Text meant for the terminal.
    pub summary: String,
}

#[derive(Serialize)]
struct Timing {
    seconds: f64,
}

#[derive(Serialize, Deserialize)]
struct OnlineManifest {
    config: RunConfig,
    table_key: String,
    levels: Vec<LevelEntry>,
    steps: Vec<StepLog>,
}

#[derive(Serialize, Deserialize)]
struct LevelEntry {
    step: usize,
    t: f64,
    file: String,
}

#[derive(Serialize, Deserialize)]
struct ReferenceManifest {
    config: RunConfig,
    nodes: usize,
    elements: usize,
    dofs: usize,
    t: f64,
    file: String,
    steps: Vec<StepLog>,
}

#[derive(Serialize, Deserialize)]
struct ReconstructManifest {
    config: RunConfig,
    table_key: String,
    t: f64,
    step: usize,
    files: Vec<String>,
}

#[derive(Deserialize)]
struct TimingIn {
    seconds: f64,
}

/// Runs stages for one configuration and output directory.
pub struct Pipeline {
    pub config: RunConfig,
    pub out: PathBuf,
}

impl Pipeline {
    /// `out` overrides the configured output directory.
    pub fn new(config: RunConfig, out: Option<PathBuf>) -> Self {
        let out = out.unwrap_or_else(|| config.output.dir.clone());
        Pipeline { config, out }
    }

    /// Hash of everything the offline tables depend on.
    pub fn table_key(&self) -> Result<String> {
        let c = &self.config;
        let payload = serde_json::json!({
            "materials": c.materials,
            "coupling": c.coupling,
            "cells": c.cells,
            "theta_grid": c.theta_grid()?,
        });
        let digest = Sha256::digest(serde_json::to_vec(&payload)?);
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn tables_dir(&self) -> Result<PathBuf> {
        Ok(self.out.join("offline").join(&self.table_key()?[..16]))
    }

    /// Run `stage`, or every stage in order for [`Stage::All`].
    pub fn run(&self, stage: Stage) -> Result<Vec<StageReport>> {
        let stages: Vec<Stage> = if stage == Stage::All { Stage::CHAIN.to_vec() } else { vec![stage] };
        stages
            .into_iter()
            .map(|s| {
                let t0 = Instant::now();
                let mut report =
                    self.run_one(s).map_err(|e| HotsError::Stage { stage: s.name(), source: Box::new(e) })?;
                report.seconds = t0.elapsed().as_secs_f64();
                Ok(report)
            })
            .collect()
    }

    fn run_one(&self, stage: Stage) -> Result<StageReport> {
        match stage {
            Stage::Offline => self.offline(),
            Stage::Online => self.online(),
            Stage::Reconstruct => self.reconstruct(),
            Stage::Reference => self.reference(),
            Stage::Compare => self.compare(),
            Stage::All => unreachable!("expanded by Pipeline::run"),
        }
    }

    fn stage_dir(&self, stage: Stage) -> Result<PathBuf> {
        let dir = self.out.join(stage.name());
        std::fs::create_dir_all(&dir)?;
        Ok(dir)
    }

    fn report(stage: Stage, artifacts: Vec<PathBuf>, summary: String) -> StageReport {
        StageReport { stage, artifacts, cache_hit: false, seconds: 0.0, summary }
    }

    fn offline(&self) -> Result<StageReport> {
        let key = self.table_key()?;
        let dir = self.tables_dir()?;
        let manifest = dir.join("manifest.json");
        if manifest.exists() {
            let design = self.config.design()?;
            if let Ok((_, stored)) = ThetaTables::load(&dir, &design) {
                if stored == key {
                    log::info!("offline tables {} are up to date", dir.display());
                    let mut r = Self::report(
                        Stage::Offline,
                        vec![manifest],
                        format!("offline: reused tables in {}", dir.display()),
                    );
                    r.cache_hit = true;
                    return Ok(r);
                }
            }
            log::warn!("offline tables in {} are stale; rebuilding", dir.display());
        }
        let t0 = Instant::now();
        let design = self.config.design()?;
        let tables = build_theta_tables(&design, &self.config.theta_grid()?)?;
        tables.save(&dir, &key)?;
        write_json(&dir.join("timing.json"), &Timing { seconds: t0.elapsed().as_secs_f64() })?;
        let summary = format!(
            "offline: {} cell problems at {} temperatures written to {}",
            tables.problem_count(),
            tables.grid.len(),
            dir.display()
        );
        Ok(Self::report(Stage::Offline, vec![manifest, dir.join("coefficients.csv")], summary))
    }

    /// Load tables matching the current config or name the missing artifact.
    pub fn load_tables(&self) -> Result<ThetaTables> {
        let dir = self.tables_dir()?;
        let manifest = dir.join("manifest.json");
        if !manifest.exists() {
            return Err(HotsError::Missing(format!("{} (run the offline stage first)", manifest.display())));
        }
        let (tables, key) = ThetaTables::load(&dir, &self.config.design()?)?;
        if key != self.table_key()? {
            return Err(HotsError::Missing(format!("{} holds tables for another configuration", dir.display())));
        }
        Ok(tables)
    }

    fn online(&self) -> Result<StageReport> {
        let tables = self.load_tables()?;
        let mesh = self.config.macro_problem.mesh()?;
        let loading = self.config.macro_problem.loading();
        let t0 = Instant::now();
        let out = run(&mesh, &HomogenizedField(&tables), &loading, self.config.time, Keep::All)?;
        let seconds = t0.elapsed().as_secs_f64();
        let dir = self.stage_dir(Stage::Online)?;
        let last = out.last().step;
        let every = self.config.output.snapshot_every;
        let mut levels = Vec::new();
        let mut artifacts = Vec::new();
        for snap in &out.snapshots {
            // The last three levels feed the time derivatives of the reconstruction.
            if snap.step % every != 0 && snap.step + 2 < last {
                continue;
            }
            let file = format!("level_{:05}.csv", snap.step);
            write_snapshot(&dir.join(&file), &mesh, snap)?;
            artifacts.push(dir.join(&file));
            levels.push(LevelEntry { step: snap.step, t: snap.t, file });
        }
        let manifest = OnlineManifest {
            config: self.config.clone(),
            table_key: self.table_key()?,
            levels,
            steps: out.log.clone(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        write_json(&dir.join("timing.json"), &Timing { seconds })?;
        artifacts.push(dir.join("manifest.json"));
        let max_iter = out.log.iter().map(|l| l.iterations).max().unwrap_or(0);
        let summary = format!(
            "online: {} steps to t = {}, at most {max_iter} fixed-point iterations per step",
            out.log.len(),
            out.last().t
        );
        Ok(Self::report(Stage::Online, artifacts, summary))
    }

    /// The final online level and its two predecessors, read back from disk.
    fn online_window(&self, mesh: &TriMesh) -> Result<[FieldSnapshot; 3]> {
        let dir = self.out.join(Stage::Online.name());
        let manifest: OnlineManifest = read_json(&dir.join("manifest.json"))?;
        if manifest.table_key != self.table_key()? {
            return Err(HotsError::Missing(format!(
                "{} was produced with other tables; rerun the online stage",
                dir.display()
            )));
        }
        let n = manifest.levels.len();
        let pick = |back: usize| -> Result<FieldSnapshot> {
            let entry = &manifest.levels[n.saturating_sub(1 + back)];
            read_snapshot(&dir.join(&entry.file), mesh, entry.step, entry.t)
        };
        if n == 0 {
            return Err(HotsError::Missing(format!("{}: no levels recorded", dir.display())));
        }
        let cur = pick(0)?;
        // Fewer than three levels only happens at step 0 or 1; repeat the oldest.
        let p1 = if cur.step >= 1 { pick(1)? } else { cur.clone() };
        let p2 = if cur.step >= 2 { pick(2)? } else { p1.clone() };
        Ok([cur, p1, p2])
    }

    fn resolved(&self, design: &CellDesign) -> Result<ResolvedProblem> {
        let c = &self.config;
        ResolvedProblem::new(
            design,
            c.macro_problem.domain,
            c.scales.zeta1(),
            c.scales.zeta2(),
            c.reference.per_period,
            c.reference.dof_cap,
        )
    }

    fn reconstructor<'a>(&self, tables: &'a ThetaTables, mesh: &'a TriMesh) -> Result<(Reconstructor<'a>, usize)> {
        let window = self.online_window(mesh)?;
        let step = window[0].step;
        let fields = MacroFields::from_window(mesh, [&window[0], &window[1], &window[2]], self.config.time.dt);
        let rec = Reconstructor::new(
            tables,
            mesh,
            fields,
            self.config.scales.zeta1(),
            self.config.scales.zeta2(),
            self.config.macro_problem.theta_ref,
        )?;
        Ok((rec, step))
    }

    fn reconstruct(&self) -> Result<StageReport> {
        let tables = self.load_tables()?;
        let mesh = self.config.macro_problem.mesh()?;
        let (rec, step) = self.reconstructor(&tables, &mesh)?;
        let target = self.resolved(&tables.design)?.mesh;
        let samples = rec.sample_nodes(&target)?;
        let dir = self.stage_dir(Stage::Reconstruct)?;
        let mut files = Vec::new();
        for (variant, (theta, u)) in Variant::ALL.iter().zip(&samples) {
            let file = format!("{}.csv", variant.name());
            write_fields(&dir.join(&file), &target, theta, u)?;
            files.push(file);
        }
        if let Some(line) = &self.config.output.line {
            let sample = rec.sample_line(&Variant::ALL, line.start, line.end, line.points)?;
            std::fs::write(dir.join("line.csv"), sample.to_csv())?;
            files.push("line.csv".into());
        }
        let manifest = ReconstructManifest {
            config: self.config.clone(),
            table_key: self.table_key()?,
            t: rec.time(),
            step,
            files,
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        let artifacts = manifest.files.iter().map(|f| dir.join(f)).chain([dir.join("manifest.json")]).collect();
        let summary =
            format!("reconstruct: {} variants on {} nodes at t = {}", Variant::ALL.len(), target.n_nodes(), rec.time());
        Ok(Self::report(Stage::Reconstruct, artifacts, summary))
    }

    fn reference(&self) -> Result<StageReport> {
        let design = self.config.design()?;
        let problem = self.resolved(&design)?;
        let loading = self.config.macro_problem.loading();
        let t0 = Instant::now();
        let out = solve_reference(&problem, &loading, self.config.time)?;
        let seconds = t0.elapsed().as_secs_f64();
        let dir = self.stage_dir(Stage::Reference)?;
        let last = out.last();
        write_snapshot(&dir.join("final.csv"), &problem.mesh, last)?;
        let manifest = ReferenceManifest {
            config: self.config.clone(),
            nodes: problem.mesh.n_nodes(),
            elements: problem.mesh.n_triangles(),
            dofs: problem.dofs(),
            t: last.t,
            file: "final.csv".into(),
            steps: out.log.clone(),
        };
        write_json(&dir.join("manifest.json"), &manifest)?;
        write_json(&dir.join("timing.json"), &Timing { seconds })?;
        let summary = format!("reference: {} nodes, {} steps to t = {}", problem.mesh.n_nodes(), out.log.len(), last.t);
        Ok(Self::report(Stage::Reference, vec![dir.join("final.csv"), dir.join("manifest.json")], summary))
    }

    fn compare(&self) -> Result<StageReport> {
        let design = self.config.design()?;
        let mesh = self.resolved(&design)?.mesh;
        let ref_dir = self.out.join(Stage::Reference.name());
        let rec_dir = self.out.join(Stage::Reconstruct.name());
        let reference: ReferenceManifest = read_json(&ref_dir.join("manifest.json"))?;
        let recon: ReconstructManifest = read_json(&rec_dir.join("manifest.json"))?;
        if (reference.t - recon.t).abs() > 1e-9 * reference.t.abs().max(1.0) {
            return Err(HotsError::Config(format!(
                "reference ends at t = {} but the reconstruction is at t = {}",
                reference.t, recon.t
            )));
        }
        let ref_snap = read_snapshot(&ref_dir.join(&reference.file), &mesh, 0, reference.t)?;
        let mut families = Vec::new();
        for v in Variant::ALL {
            let snap = read_snapshot(&rec_dir.join(format!("{}.csv", v.name())), &mesh, 0, recon.t)?;
            families.push((v, snap.theta, snap.u));
        }
        let borrowed: Vec<(Variant, &[f64], &[f64])> =
            families.iter().map(|(v, a, b)| (*v, a.as_slice(), b.as_slice())).collect();
        let mut report = ErrorReport::default();
        report.add_level(&mesh, reference.t, &ref_snap, &borrowed);
        report.cost = self.cost(&design, &reference)?;
        let seconds = self.stage_seconds()?;
        let dir = self.stage_dir(Stage::Compare)?;
        let summary = report.summary();
        std::fs::write(dir.join("errors.csv"), report.to_csv())?;
        std::fs::write(dir.join("summary.txt"), &summary)?;
        write_json(&dir.join("report.json"), &report)?;
        write_json(&dir.join("timing.json"), &seconds)?;
        let artifacts =
            ["errors.csv", "summary.txt", "report.json", "timing.json"].iter().map(|f| dir.join(f)).collect();
        Ok(Self::report(Stage::Compare, artifacts, format!("{summary}{seconds}\n")))
    }

    fn cost(&self, design: &CellDesign, reference: &ReferenceManifest) -> Result<CostSummary> {
        let micro_nodes: usize = design.micro.iter().map(|c| c.mesh.n_nodes()).sum();
        let meso_nodes = design.meso.mesh.n_nodes();
        let macro_nodes = self.config.macro_problem.mesh()?.n_nodes();
        Ok(CostSummary {
            reference_nodes: reference.nodes,
            reference_elements: reference.elements,
            reference_dofs: reference.dofs,
            micro_nodes,
            meso_nodes,
            macro_nodes,
            multiscale_dofs: 3 * (micro_nodes + meso_nodes + macro_nodes),
        })
    }

    /// Stage timings recorded next to their artifacts; absent files count as zero.
    fn stage_seconds(&self) -> Result<StageSeconds> {
        let timing = |path: PathBuf| read_json::<TimingIn>(&path).map(|t| t.seconds).unwrap_or(0.0);
        Ok(StageSeconds {
            offline: timing(self.tables_dir()?.join("timing.json")),
            online: timing(self.out.join("online").join("timing.json")),
            reference: timing(self.out.join("reference").join("timing.json")),
        })
    }
}

/// Size the global worker pool; `None` keeps the rayon default.
pub fn init_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| HotsError::Config(format!("cannot size the thread pool: {e}")))?;
    }
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|_| HotsError::Missing(path.display().to_string()))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_fields(path: &Path, mesh: &TriMesh, theta: &[f64], u: &[f64]) -> Result<()> {
    let u1: Vec<f64> = u.iter().step_by(2).copied().collect();
    let u2: Vec<f64> = u.iter().skip(1).step_by(2).copied().collect();
    write_nodal_csv(path, mesh, &[("theta", theta), ("u1", &u1), ("u2", &u2)])
}

fn write_snapshot(path: &Path, mesh: &TriMesh, snap: &FieldSnapshot) -> Result<()> {
    write_fields(path, mesh, &snap.theta, &snap.u)
}

/// Read a `theta,u1,u2` nodal CSV back into a snapshot on `mesh`.
pub fn read_snapshot(path: &Path, mesh: &TriMesh, step: usize, t: f64) -> Result<FieldSnapshot> {
    if !path.exists() {
        return Err(HotsError::Missing(path.display().to_string()));
    }
    let (names, cols) = read_nodal_csv(path)?;
    if names != ["theta", "u1", "u2"] {
        return Err(HotsError::Io(format!("{}: expected columns theta,u1,u2", path.display())));
    }
    if cols[0].len() != mesh.n_nodes() {
        return Err(HotsError::Io(format!(
            "{}: {} rows for a mesh of {} nodes",
            path.display(),
            cols[0].len(),
            mesh.n_nodes()
        )));
    }
    let u = cols[1].iter().zip(&cols[2]).flat_map(|(a, b)| [*a, *b]).collect();
    Ok(FieldSnapshot { step, t, theta: cols[0].clone(), u, iterations: 0, theta_change: 0.0, u_change: 0.0 })
}
