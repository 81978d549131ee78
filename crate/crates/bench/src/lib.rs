//! Benchmark fixtures shared by the kernel benches.

use hots_core::cell_lab::{build_theta_tables, ThetaTables};
use hots_core::fem::mesh::{build_rect_mesh, Rect, TriMesh};
use hots_core::RunConfig;

/// Default composite on coarse cells with a short transient.
pub const SMALL_RUN: &str = r#"
[scales]
zeta1 = "1/3"
zeta2 = "1/9"
[cells]
n = 8
[theta_grid]
samples = 3
[macro]
n = [12, 12]
[time]
dt = 0.01
t_end = 0.03
"#;

pub fn small_config() -> RunConfig {
    RunConfig::from_toml(SMALL_RUN).expect("fixture config is valid")
}

pub fn unit_square(n: usize) -> TriMesh {
    build_rect_mesh(Rect::new([0.0, 0.0], [1.0, 1.0]).unwrap(), n, n, &[]).expect("fixture mesh builds")
}

pub fn small_tables(config: &RunConfig) -> ThetaTables {
    build_theta_tables(&config.design().unwrap(), &config.theta_grid().unwrap()).expect("fixture tables build")
}
