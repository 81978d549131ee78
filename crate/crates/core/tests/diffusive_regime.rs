//! With micro-cell diffusion much faster than the observation time the
//! quasi-static correctors are valid, and the high-order reconstruction
//! beats the homogenized temperature by a wide margin.

use std::path::Path;

use hots_core::reconstruction::Variant;
use hots_core::validation::{ErrorReport, FieldKind, NormKind};
use hots_core::{Pipeline, Polynomial, RunConfig, Stage};

#[test]
fn fast_diffusion_favours_the_high_order_temperature() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example1.toml");
    let mut config = RunConfig::load(Path::new(path)).unwrap();
    // a millionth of the density shortens every diffusion time by the same factor
    for m in &mut config.materials {
        m.rho = Polynomial::constant(1e-6 * m.rho.eval(0.0));
    }
    // the faster transient heats well past the default sampling range
    config.theta_grid.max = Some(2000.0);
    let dir = tempfile::tempdir().unwrap();
    Pipeline::new(config, Some(dir.path().into())).run(Stage::All).unwrap();
    let report: ErrorReport =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("compare/report.json")).unwrap()).unwrap();
    let t = report.last_time().unwrap();
    let h1 = |v| report.value(t, v, FieldKind::Theta, NormKind::H1).unwrap();
    assert!(h1(Variant::Hots) < 0.25 * h1(Variant::Homogenized), "{}", report.summary());
    let ordering = report.ordering(t).unwrap();
    assert!(ordering.theta_l2 && ordering.u_h1, "{}", report.summary());
}
