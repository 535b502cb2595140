//! Checks against closed-form values computed independently in the tests.

use std::f64::consts::{FRAC_PI_2, PI};

use ntv_core::bregman::{d_update, edge_logs, shrink_vec, Armijo, BregmanConfig, BregmanState};
use ntv_core::functionals::{area_gradient, dihedral_angles, dtv, surface_area};
use ntv_core::mesh::{add_vertex_noise, generate};
use ntv_core::{s2, Vec3, VertexField};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn regular_polyhedra_match_edge_angle_formula() {
    let tet = generate::regular_tetrahedron(1.3);
    let a = tet.edge_length(0);
    let exterior = PI - (1.0f64 / 3.0).acos();
    assert!(close(dtv(&tet).value, 6.0 * a * exterior, 1e-12));

    let ico = generate::icosahedron(0.8);
    let a = ico.edge_length(0);
    let exterior = PI - (-(5.0f64).sqrt() / 3.0).acos();
    assert!(close(dtv(&ico).value, 30.0 * a * exterior, 1e-12));
}

#[test]
fn crossed_cube_diagonals_are_flat() {
    let cube = generate::cube_crossed_diagonals(2.0);
    let angles = dihedral_angles(&cube);
    assert_eq!(angles.iter().filter(|&&t| t < 1e-12).count(), 24);
    assert_eq!(angles.iter().filter(|&&t| (t - FRAC_PI_2).abs() < 1e-12).count(), 12);
    assert!(close(dtv(&cube).value, 12.0 * PI, 1e-14));
    assert!(close(surface_area(&cube).value, 24.0, 1e-14));
}

#[test]
fn quarter_turn_log_and_transport() {
    let (ex, ey, ez) = (Vec3::x(), Vec3::y(), Vec3::z());
    assert!((s2::log_vec(&ez, &ex).unwrap() - ex * FRAC_PI_2).norm() < 1e-15);
    assert!((s2::transport_vec(&ez, &ex, &ex).unwrap() + ez).norm() < 1e-15);
    assert!((s2::transport_vec(&ez, &ex, &ey).unwrap() - ey).norm() < 1e-15);
    assert!((s2::exp_vec(&ez, &(ey * PI)) + ez).norm() < 1e-15);
    assert!(s2::log_vec(&ez, &(-ez)).is_err());
}

#[test]
fn shrinkage_closed_form() {
    let v = Vec3::new(3.0, 4.0, 0.0);
    assert!((shrink_vec(&v, 1.0) - Vec3::new(2.4, 3.2, 0.0)).norm() < 1e-15);
    assert_eq!(shrink_vec(&v, 5.0), Vec3::zeros());
    assert_eq!(shrink_vec(&v, 0.0), v);
}

#[test]
fn zero_weight_d_update_copies_log_plus_multiplier() {
    let mesh = add_vertex_noise(&generate::icosphere(1, 1.0), 0.1, 3);
    let config = BregmanConfig {
        beta: 0.0,
        lambda: 1.0,
        inner_steps: 1,
        step0: 1.0,
        grad_tol: 0.0,
        max_outer: 1,
        h1_scale: None,
        armijo: Armijo::default(),
    };
    let logs = edge_logs(&mesh).unwrap();
    let normals = mesh.facet_normals();
    let mut state = BregmanState::zeros(&mesh);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let n = normals[edge.facet_plus];
        state.b[e] = n.cross(&Vec3::new(0.1, 0.0, 0.2));
    }
    d_update(&mesh, &mut state, &config).unwrap();
    for e in 0..mesh.edge_count() {
        assert!((state.d[e] - logs[e] - state.b[e]).norm() < 1e-15);
    }
}

#[test]
fn area_gradient_on_sphere_is_radial() {
    let sphere = generate::icosphere(3, 2.0);
    let g = area_gradient(&sphere);
    let radial: VertexField = VertexField(sphere.vertices().iter().map(|x| x / 2.0).collect());
    // x ↦ x + s·x/R scales the area by (1 + s/R)².
    let expected = 2.0 * surface_area(&sphere).value / 2.0;
    assert!(close(g.dot(&radial), expected, 1e-12));
}
