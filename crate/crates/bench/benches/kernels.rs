use criterion::{criterion_group, criterion_main, Criterion};
use hots_bench::{small_config, small_tables, unit_square};
use hots_core::cell_lab::build_theta_tables;
use hots_core::fem::assemble::{assemble_elasticity_operator, assemble_scalar_operator};
use hots_core::fem::linalg::{DofMap, Factorization};
use hots_core::macro_solver::{run, HomogenizedField, Keep};
use hots_core::Stiffness;

fn assembly(c: &mut Criterion) {
    let mesh = unit_square(64);
    let k = vec![[[2.0, 0.5], [0.5, 1.0]]; mesh.n_triangles()];
    let stiff = vec![Stiffness::isotropic(1.5, 1.0); mesh.n_triangles()];
    let scalar = DofMap::identity(&mesh, 1);
    let vector = DofMap::identity(&mesh, 2);
    c.bench_function("assemble heat 64x64", |b| b.iter(|| assemble_scalar_operator(&mesh, &scalar, &k)));
    c.bench_function("assemble elasticity 64x64", |b| b.iter(|| assemble_elasticity_operator(&mesh, &vector, &stiff)));
    let a = assemble_elasticity_operator(&mesh, &vector, &stiff);
    // a pure-traction operator is singular; the shift keeps the factor defined
    let mut shifted = a.clone();
    for i in 0..vector.n_dofs() {
        shifted.add(i, i, 1.0);
    }
    c.bench_function("factor elasticity 64x64", |b| b.iter(|| Factorization::new(&shifted).unwrap()));
}

fn offline(c: &mut Criterion) {
    let config = small_config();
    let design = config.design().unwrap();
    let grid = config.theta_grid().unwrap();
    let mut group = c.benchmark_group("offline");
    group.sample_size(10);
    group.bench_function("theta tables, 8x8 cells, 3 samples", |b| {
        b.iter(|| build_theta_tables(&design, &grid).unwrap())
    });
    group.finish();
}

fn online(c: &mut Criterion) {
    let config = small_config();
    let tables = small_tables(&config);
    let mesh = config.macro_problem.mesh().unwrap();
    let loading = config.macro_problem.loading();
    let mut group = c.benchmark_group("online");
    group.sample_size(10);
    group.bench_function("macro transient, 3 steps", |b| {
        b.iter(|| run(&mesh, &HomogenizedField(&tables), &loading, config.time, Keep::Tail).unwrap())
    });
    group.finish();
}

criterion_group!(kernels, assembly, offline, online);
criterion_main!(kernels);
