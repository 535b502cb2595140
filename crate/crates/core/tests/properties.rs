//! Property tests for the structural invariants of each module.

use nalgebra::Rotation3;
use ntv_core::bregman::{self, Armijo, BregmanConfig, DenoiseLoss};
use ntv_core::fem::{source_patches, FemSystem};
use ntv_core::functionals::{dtv, dtv_euclidean, surface_area, DenoiseProblem};
use ntv_core::linalg::spmv;
use ntv_core::mesh::{add_vertex_noise, compute_edge_geometry, generate};
use ntv_core::shapegrad::h1_surface_gradient;
use ntv_core::{s2, SurfaceMesh, Vec3, VertexField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit(v: [f64; 3]) -> Option<Vec3> {
    let v = Vec3::from(v);
    (v.norm() > 1e-3).then(|| v.normalize())
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

fn noisy_mesh(kind: u8, seed: u64) -> SurfaceMesh {
    let base = match kind % 3 {
        0 => generate::icosphere(1, 1.0),
        1 => generate::cube_grid(2, 0.8),
        _ => generate::box_surface(Vec3::new(-1.0, -0.5, -0.3), Vec3::new(1.0, 0.5, 0.3), [3, 2, 2]),
    };
    add_vertex_noise(&base, 0.05, seed)
}

fn rigid(mesh: &SurfaceMesh, axis: [f64; 3], shift: [f64; 3]) -> SurfaceMesh {
    let r = Rotation3::from_scaled_axis(Vec3::from(axis) * 2.0);
    let t = Vec3::from(shift) * 3.0;
    mesh.map_vertices(|x| r * x + t).unwrap()
}

fn random_field(n: usize, seed: u64) -> VertexField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VertexField((0..n).map(|_| Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn signed_volume_flips_with_orientation(kind in 0u8..3, seed in 0u64..1000) {
        let m = noisy_mesh(kind, seed);
        prop_assert!((m.signed_volume() + m.flipped().signed_volume()).abs() < 1e-12);
        prop_assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn co_normal_identity(kind in 0u8..3, seed in 0u64..1000) {
        let m = noisy_mesh(kind, seed);
        for g in compute_edge_geometry(&m).unwrap() {
            let via_normals = g.n_plus.dot(&g.n_minus).clamp(-1.0, 1.0).acos();
            let via_co_normals = g.mu_plus.dot(&(-g.mu_minus)).clamp(-1.0, 1.0).acos();
            prop_assert!((via_normals - via_co_normals).abs() < 1e-8);
        }
    }

    #[test]
    fn edge_geometry_is_rigid_invariant(kind in 0u8..3, seed in 0u64..1000, axis in vec3(), shift in vec3()) {
        let m = noisy_mesh(kind, seed);
        let a = compute_edge_geometry(&m).unwrap();
        let b = compute_edge_geometry(&rigid(&m, axis, shift)).unwrap();
        for (g, h) in a.iter().zip(&b) {
            prop_assert!((g.theta - h.theta).abs() < 1e-10);
            prop_assert!((g.length - h.length).abs() < 1e-10);
        }
    }

    #[test]
    fn transport_is_isometric_tangent_and_invertible(n in vec3(), m in vec3(), x in vec3()) {
        let (Some(n), Some(m)) = (unit(n), unit(m)) else { return Ok(()) };
        prop_assume!(n.dot(&m) > -1.0 + 1e-6);
        let xi = Vec3::from(x) - n * n.dot(&Vec3::from(x));
        let t = s2::transport_vec(&n, &m, &xi).unwrap();
        prop_assert!((t.norm() - xi.norm()).abs() < 1e-12);
        prop_assert!(t.dot(&m).abs() < 1e-10);
        let back = s2::transport_vec(&m, &n, &t).unwrap();
        prop_assert!((back - xi).norm() < 1e-10);
        prop_assert!(s2::log_vec(&n, &m).unwrap().dot(&n).abs() < 1e-10);
    }

    #[test]
    fn exp_is_metric_compatible(n in vec3(), x in vec3(), t in 0.0f64..1.0) {
        let Some(n) = unit(n) else { return Ok(()) };
        let xi = Vec3::from(x) - n * n.dot(&Vec3::from(x));
        prop_assume!(xi.norm() > 1e-6);
        let step = xi * (t * std::f64::consts::PI / xi.norm());
        let m = s2::exp_vec(&n, &step);
        prop_assert!((s2::distance_vec(&n, &m) - step.norm()).abs() < 1e-9);
    }

    #[test]
    fn dtv_bounds_and_invariance(kind in 0u8..3, seed in 0u64..1000, axis in vec3(), shift in vec3(), alpha in 0.1f64..5.0) {
        let m = noisy_mesh(kind, seed);
        let tv = dtv(&m).value;
        prop_assert!(tv >= dtv_euclidean(&m).value);
        prop_assert!(dtv_euclidean(&m).value >= 0.0);
        prop_assert!((dtv(&rigid(&m, axis, shift)).value - tv).abs() < 1e-12 * tv);
        let s = m.scaled(alpha).unwrap();
        prop_assert!((dtv(&s).value - alpha * tv).abs() < 1e-12 * alpha * tv);
        let a = surface_area(&m).value;
        prop_assert!((surface_area(&s).value - alpha * alpha * a).abs() < 1e-12 * alpha * alpha * a);
    }

    #[test]
    fn h1_riesz_map_is_self_adjoint_and_positive(seed in 0u64..1000, scale in 1e-4f64..1e-1) {
        let m = noisy_mesh(0, seed);
        let r1 = random_field(m.vertex_count(), seed);
        let r2 = random_field(m.vertex_count(), seed + 1);
        let w1 = h1_surface_gradient(&m, &r1, scale).unwrap();
        let w2 = h1_surface_gradient(&m, &r2, scale).unwrap();
        prop_assert!((w1.dot(&r2) - r1.dot(&w2)).abs() < 1e-8 * w1.norm() * r2.norm());
        prop_assert!(w1.dot(&r1) > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fem_operator_symmetry_and_linearity(layers in 1usize..3, n in 2usize..4, c in 0.1f64..10.0) {
        let mesh = generate::shell_tet_mesh(&generate::cubed_sphere(n, 0.5), layers);
        let mut s = FemSystem::assemble(&mesh, 1e-3, source_patches(&mesh, 2).unwrap(), 2).unwrap();
        for i in 0..s.operator.nrows() {
            for (j, v) in s.operator.row(i) {
                prop_assert!((s.operator.get(j, i) - v).abs() < 1e-12);
            }
        }
        let u = s.solve_state(None).unwrap();
        let l0 = s.loss(&u);
        for f in &mut s.loads {
            f.iter_mut().for_each(|v| *v *= c);
        }
        let uc = s.solve_state(None).unwrap();
        for (a, b) in u[0].iter().zip(&uc[0]) {
            prop_assert!((c * a - b).abs() < 1e-8 * b.abs().max(1.0));
        }
        prop_assert!((s.loss(&uc) - c * c * l0).abs() < 1e-8 * c * c * l0);
        let mut y = vec![0.0; u[0].len()];
        spmv(&s.operator, &uc[0], &mut y);
        let energy: f64 = uc[0].iter().zip(&y).map(|(a, b)| a * b).sum();
        let work: f64 = uc[0].iter().zip(&s.loads[0]).map(|(a, b)| a * b).sum();
        prop_assert!((energy - work).abs() < 1e-8 * work);
    }

    #[test]
    fn bregman_state_stays_tangent_and_inner_descent_is_monotone(seed in 0u64..1000) {
        let clean = generate::icosphere(1, 1.0);
        let noisy = add_vertex_noise(&clean, 0.1, seed);
        let config = BregmanConfig {
            beta: 0.05,
            lambda: 0.5,
            inner_steps: 5,
            step0: 1.0,
            grad_tol: 1e-10,
            max_outer: 1,
            h1_scale: None,
            armijo: Armijo::default(),
        };
        let mut loss = DenoiseLoss { problem: DenoiseProblem::new(noisy.vertices().to_vec(), 0.05).unwrap() };
        let mut mesh = clean.clone();
        let mut state = bregman::BregmanState::zeros(&mesh);
        for _ in 0..5 {
            let old = mesh.clone();
            let report = bregman::shape_substep(&mut mesh, &mut state, &config, &mut loss).unwrap();
            prop_assert!(report.values.windows(2).all(|w| w[1] <= w[0]));
            bregman::transport_state(&old, &mesh, &mut state).unwrap();
            bregman::d_update(&mesh, &mut state, &config).unwrap();
            bregman::b_update(&mesh, &mut state).unwrap();
            prop_assert!(state.tangency_error(&mesh) < 1e-8);
        }
    }
}
