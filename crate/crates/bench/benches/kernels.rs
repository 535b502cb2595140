use criterion::{black_box, criterion_group, criterion_main, Criterion};
use ntv_core::bregman::{d_update, Armijo, BregmanConfig, BregmanState};
use ntv_core::fem::{source_patches, FemSystem};
use ntv_core::functionals::dtv;
use ntv_core::mesh::{add_vertex_noise, generate};
use ntv_core::s2;
use ntv_core::shapegrad::{h1_surface_gradient, penalty_gradient};
use ntv_core::{Vec3, VertexField};

fn surface_kernels(c: &mut Criterion) {
    let mesh = add_vertex_noise(&generate::icosphere(4, 1.0), 0.05, 1);
    let logs = ntv_core::bregman::edge_logs(&mesh).unwrap();
    let zeros = vec![Vec3::zeros(); mesh.edge_count()];
    let config = BregmanConfig {
        beta: 1e-3,
        lambda: 1e-2,
        inner_steps: 1,
        step0: 1.0,
        grad_tol: 0.0,
        max_outer: 1,
        h1_scale: None,
        armijo: Armijo::default(),
    };

    c.bench_function("dtv/icosphere4", |b| b.iter(|| dtv(black_box(&mesh)).value));
    c.bench_function("penalty_gradient/icosphere4", |b| {
        b.iter(|| penalty_gradient(black_box(&mesh), &logs, &zeros, 1e-3, 1e-2).unwrap())
    });
    c.bench_function("d_update/icosphere4", |b| {
        let mut state = BregmanState::zeros(&mesh);
        b.iter(|| d_update(black_box(&mesh), &mut state, &config).unwrap())
    });
    let rhs = VertexField(mesh.vertex_normals());
    c.bench_function("h1_gradient/icosphere4", |b| b.iter(|| h1_surface_gradient(&mesh, black_box(&rhs), 1e-2).unwrap()));
}

fn sphere_ops(c: &mut Criterion) {
    let n = Vec3::new(0.3, -0.2, 0.9).normalize();
    let m = Vec3::new(-0.5, 0.7, 0.1).normalize();
    let xi = Vec3::new(0.1, 0.2, 0.0) - n * n.dot(&Vec3::new(0.1, 0.2, 0.0));
    c.bench_function("s2/log", |b| b.iter(|| s2::log_vec(black_box(&n), black_box(&m)).unwrap()));
    c.bench_function("s2/transport", |b| b.iter(|| s2::transport_vec(black_box(&n), black_box(&m), &xi).unwrap()));
}

fn fem_solve(c: &mut Criterion) {
    let mesh = generate::shell_tet_mesh(&generate::icosphere(2, 0.5), 4);
    let system = FemSystem::assemble(&mesh, 1e-5, source_patches(&mesh, 8).unwrap(), 8).unwrap();
    let mut group = c.benchmark_group("fem");
    group.sample_size(10);
    group.bench_function("state_solves/r8", |b| b.iter(|| system.solve_state(None).unwrap()));
    group.finish();
}

criterion_group!(benches, surface_kernels, sphere_ops, fem_solve);
criterion_main!(benches);
