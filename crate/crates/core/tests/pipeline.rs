//! Stage chaining, table caching and reproducible artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use hots_core::config::TaggedScalar;
use hots_core::{Pipeline, RunConfig, Stage};
use sha2::{Digest, Sha256};

fn quick() -> RunConfig {
    RunConfig::load(Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/quick.toml"))).unwrap()
}

/// Digest of every artifact except wall-clock timings, keyed by relative path.
fn artifact_digests(root: &Path) -> BTreeMap<String, String> {
    fn walk(dir: &Path, root: &Path, out: &mut BTreeMap<String, String>) {
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(&path, root, out);
            } else if path.file_name().unwrap() != "timing.json" {
                let digest = Sha256::digest(std::fs::read(&path).unwrap());
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, digest.iter().map(|b| format!("{b:02x}")).collect());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

#[test]
fn full_chain_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let reports = Pipeline::new(quick(), Some(dir.path().into())).run(Stage::All).unwrap();
    let stages: Vec<_> = reports.iter().map(|r| r.stage).collect();
    assert_eq!(stages, Stage::CHAIN);
    for r in &reports {
        for a in &r.artifacts {
            assert!(a.exists(), "{} missing after {}", a.display(), r.stage);
        }
    }
    assert!(!reports[0].cache_hit);
}

#[test]
fn reruns_reproduce_every_artifact() {
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    Pipeline::new(quick(), Some(first.path().into())).run(Stage::All).unwrap();
    let fresh = artifact_digests(first.path());
    Pipeline::new(quick(), Some(first.path().into())).run(Stage::All).unwrap();
    assert_eq!(artifact_digests(first.path()), fresh, "rerun in place");
    Pipeline::new(quick(), Some(second.path().into())).run(Stage::All).unwrap();
    assert_eq!(artifact_digests(second.path()), fresh, "run in a new directory");
}

#[test]
fn tables_are_reused_until_a_cell_input_changes() {
    let dir = tempfile::tempdir().unwrap();
    let base = Pipeline::new(quick(), Some(dir.path().into()));
    assert!(!base.run(Stage::Offline).unwrap()[0].cache_hit);
    assert!(base.run(Stage::Offline).unwrap()[0].cache_hit);

    let mut config = quick();
    config.macro_problem.theta_tags.retain(|t| t != "top");
    config.macro_problem.flux.push(TaggedScalar { tag: "top".into(), value: 100.0 });
    config.time.t_end = 0.05;
    let other_macro = Pipeline::new(config, Some(dir.path().into()));
    assert_eq!(other_macro.table_key().unwrap(), base.table_key().unwrap());
    assert!(other_macro.run(Stage::Offline).unwrap()[0].cache_hit);
    other_macro.run(Stage::Online).unwrap();

    let mut config = quick();
    config.cells.n = 6;
    let other_cells = Pipeline::new(config, Some(dir.path().into()));
    assert_ne!(other_cells.table_key().unwrap(), base.table_key().unwrap());
    assert!(!other_cells.run(Stage::Offline).unwrap()[0].cache_hit);
}

#[test]
fn stages_name_the_artifact_they_lack() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::new(quick(), Some(dir.path().into()));
    for stage in [Stage::Online, Stage::Reconstruct, Stage::Compare] {
        let err = pipeline.run(stage).unwrap_err();
        assert_eq!(err.category(), "missing", "{stage}: {err}");
        assert!(err.to_string().contains("manifest.json"), "{stage}: {err}");
    }
}

#[test]
fn stage_names_parse_back() {
    for stage in Stage::CHAIN.into_iter().chain([Stage::All]) {
        assert_eq!(stage.name().parse::<Stage>().unwrap(), stage);
    }
    assert!("everything".parse::<Stage>().is_err());
}
