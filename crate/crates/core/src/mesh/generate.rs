//! Procedural meshes used by the experiments and tests.

use std::collections::HashMap;

use super::{BoundaryTag, SurfaceMesh, TetMesh};
use crate::Vec3;

/// Unit-edge cube `[0, a]³` whose faces are split by both diagonals around a
/// centre vertex: 14 vertices, 24 triangles, 36 edges.
pub fn cube_crossed_diagonals(a: f64) -> SurfaceMesh {
    let mut vertices = Vec::with_capacity(14);
    for i in 0..8 {
        vertices.push(Vec3::new((i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64) * a);
    }
    // faces as corner quads in counter-clockwise order seen from outside
    let quads = [
        [0, 2, 3, 1], // z = 0
        [4, 5, 7, 6], // z = a
        [0, 1, 5, 4], // y = 0
        [2, 6, 7, 3], // y = a
        [0, 4, 6, 2], // x = 0
        [1, 3, 7, 5], // x = a
    ];
    let mut triangles = Vec::with_capacity(24);
    for q in quads {
        let c = vertices.len();
        vertices.push(q.iter().map(|&i| vertices[i]).sum::<Vec3>() / 4.0);
        for k in 0..4 {
            triangles.push([q[k], q[(k + 1) % 4], c]);
        }
    }
    SurfaceMesh::new(vertices, triangles).expect("valid cube")
}

/// Regular tetrahedron with edge length `a`, centred at the origin.
pub fn regular_tetrahedron(a: f64) -> SurfaceMesh {
    let s = a / (2.0 * 2f64.sqrt());
    let vertices = vec![
        Vec3::new(1.0, 1.0, 1.0) * s,
        Vec3::new(1.0, -1.0, -1.0) * s,
        Vec3::new(-1.0, 1.0, -1.0) * s,
        Vec3::new(-1.0, -1.0, 1.0) * s,
    ];
    SurfaceMesh::new(vertices, vec![[0, 1, 2], [0, 3, 1], [0, 2, 3], [1, 3, 2]]).expect("valid tetrahedron")
}

/// Regular icosahedron inscribed in the sphere of radius `radius`.
pub fn icosahedron(radius: f64) -> SurfaceMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, t, 0.0),
        (1.0, t, 0.0),
        (-1.0, -t, 0.0),
        (1.0, -t, 0.0),
        (0.0, -1.0, t),
        (0.0, 1.0, t),
        (0.0, -1.0, -t),
        (0.0, 1.0, -t),
        (t, 0.0, -1.0),
        (t, 0.0, 1.0),
        (-t, 0.0, -1.0),
        (-t, 0.0, 1.0),
    ];
    let vertices = raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z).normalize() * radius).collect();
    let triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    SurfaceMesh::new(vertices, triangles).expect("valid icosahedron")
}

/// Uniformly rescales `mesh` about the origin so that its area equals `area`.
pub fn scaled_to_area(mesh: &SurfaceMesh, area: f64) -> SurfaceMesh {
    let current: f64 = (0..mesh.triangle_count()).map(|t| mesh.triangle_area(t)).sum();
    mesh.scaled((area / current).sqrt()).expect("scaling keeps triangles valid")
}

/// Icosphere: the icosahedron with `level` rounds of 1-to-4 midpoint
/// subdivision, vertices projected onto the sphere of radius `radius`.
/// Level `k` has `20·4^k` triangles.
pub fn icosphere(level: u32, radius: f64) -> SurfaceMesh {
    let base = icosahedron(1.0);
    let mut vertices = base.vertices().to_vec();
    let mut triangles = base.triangles().to_vec();
    for _ in 0..level {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
            *midpoint.entry((a.min(b), a.max(b))).or_insert_with(|| {
                vertices.push((vertices[a] + vertices[b]).normalize());
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(4 * triangles.len());
        for &[a, b, c] in &triangles {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        triangles = next;
    }
    let vertices = vertices.into_iter().map(|v| v * radius).collect();
    SurfaceMesh::new(vertices, triangles).expect("valid icosphere")
}

/// Surface of the box `[lo, hi]` with `cells[k]` grid cells along axis `k`.
/// Every grid square is split into two triangles along alternating diagonals.
pub fn box_surface(lo: Vec3, hi: Vec3, cells: [usize; 3]) -> SurfaceMesh {
    assert!(cells.iter().all(|&c| c >= 1));
    let mut index: HashMap<[usize; 3], usize> = HashMap::new();
    let mut vertices = Vec::new();
    let mut vid = |g: [usize; 3], vertices: &mut Vec<Vec3>| -> usize {
        *index.entry(g).or_insert_with(|| {
            let p = Vec3::from_fn(|k, _| lo[k] + (hi[k] - lo[k]) * g[k] as f64 / cells[k] as f64);
            vertices.push(p);
            vertices.len() - 1
        })
    };
    let mut triangles = Vec::new();
    for axis in 0..3 {
        let (u, v) = ((axis + 1) % 3, (axis + 2) % 3);
        for side in [0, cells[axis]] {
            for i in 0..cells[u] {
                for j in 0..cells[v] {
                    let g = |di: usize, dj: usize| {
                        let mut p = [0; 3];
                        p[axis] = side;
                        p[u] = i + di;
                        p[v] = j + dj;
                        p
                    };
                    let q = [
                        vid(g(0, 0), &mut vertices),
                        vid(g(1, 0), &mut vertices),
                        vid(g(1, 1), &mut vertices),
                        vid(g(0, 1), &mut vertices),
                    ];
                    // (u, v, axis) is right-handed, so q is counter-clockwise
                    // seen from +axis
                    let q = if side == 0 { [q[0], q[3], q[2], q[1]] } else { q };
                    if (i + j) % 2 == 0 {
                        triangles.push([q[0], q[1], q[2]]);
                        triangles.push([q[0], q[2], q[3]]);
                    } else {
                        triangles.push([q[0], q[1], q[3]]);
                        triangles.push([q[1], q[2], q[3]]);
                    }
                }
            }
        }
    }
    SurfaceMesh::new(vertices, triangles).expect("valid box surface")
}

/// Cube `[-half, half]³` with an `n×n` grid per face.
pub fn cube_grid(n: usize, half: f64) -> SurfaceMesh {
    box_surface(Vec3::repeat(-half), Vec3::repeat(half), [n, n, n])
}

/// Unit icosphere whose vertices are nudged so that the radial image of the
/// mesh on a cube follows the cube's corners and edges.
///
/// In cube coordinates `p = x/|x|_∞`, the vertex nearest each corner is moved
/// onto it. Then, closest first, a vertex whose second-largest coordinate is
/// within `snap` of ±1 is moved onto the cube edge, unless that would shrink
/// an incident triangle on the cube below half its area. The result is
/// projected back to the unit sphere.
pub fn cube_fitted_icosphere(level: u32, snap: f64) -> SurfaceMesh {
    let base = icosphere(level, 1.0);
    let mut p: Vec<Vec3> = base.vertices().iter().map(|v| v / v.amax()).collect();
    for corner in 0..8 {
        let c = Vec3::new(
            if corner & 1 == 0 { -1.0 } else { 1.0 },
            if corner & 2 == 0 { -1.0 } else { 1.0 },
            if corner & 4 == 0 { -1.0 } else { 1.0 },
        );
        let nearest = (0..p.len()).max_by(|&a, &b| p[a].normalize().dot(&c).total_cmp(&p[b].normalize().dot(&c))).unwrap();
        p[nearest] = c;
    }
    let mut incident = vec![Vec::new(); p.len()];
    for (t, tri) in base.triangles().iter().enumerate() {
        tri.iter().for_each(|&v| incident[v].push(t));
    }
    let area = |p: &[Vec3], t: usize| {
        let [a, b, c] = base.triangles()[t].map(|v| p[v]);
        0.5 * (b - a).cross(&(c - a)).norm()
    };
    let second = |q: &Vec3| {
        let mut order = [0, 1, 2];
        order.sort_by(|&a, &b| q[b].abs().total_cmp(&q[a].abs()));
        order[1]
    };
    let mut candidates: Vec<usize> = (0..p.len()).filter(|&v| 1.0 - p[v][second(&p[v])].abs() < snap).collect();
    candidates.sort_by(|&a, &b| p[b][second(&p[b])].abs().total_cmp(&p[a][second(&p[a])].abs()));
    for v in candidates {
        let k = second(&p[v]);
        let before: Vec<f64> = incident[v].iter().map(|&t| area(&p, t)).collect();
        let old = p[v];
        p[v][k] = p[v][k].signum();
        if incident[v].iter().zip(&before).any(|(&t, &a)| area(&p, t) < 0.5 * a) {
            p[v] = old;
        }
    }
    let vertices = p.iter().map(|q| q.normalize()).collect();
    base.with_vertices(vertices).expect("snapping keeps triangles valid")
}

/// [`cube_grid`] projected radially onto the sphere of radius `radius`.
pub fn cubed_sphere(n: usize, radius: f64) -> SurfaceMesh {
    let cube = cube_grid(n, 1.0);
    cube.map_vertices(|v| v.normalize() * radius).expect("projection keeps triangles valid")
}

/// Radial projection of `mesh` onto the sphere of radius `radius`.
pub fn project_to_sphere(mesh: &SurfaceMesh, radius: f64) -> SurfaceMesh {
    mesh.map_vertices(|v| v.normalize() * radius).expect("star-shaped mesh")
}

/// Radial projection of `mesh` onto the cube `[-half, half]³`.
pub fn project_to_cube(mesh: &SurfaceMesh, half: f64) -> SurfaceMesh {
    mesh.map_vertices(|v| v * (half / v.amax())).expect("star-shaped mesh")
}

/// Tetrahedral mesh of the region between a star-shaped inner surface and the
/// unit sphere, built from `layers` radial layers of prisms.
///
/// Layer `k` places surface vertex `v` at `(1 − t_k)·x_v + t_k·x_v/|x_v|`
/// with `t_k = k/layers`. Each prism is split into three tetrahedra by the
/// rule "on the quad over edge (i, j) with i < j, connect bottom j to top i",
/// which depends only on global indices and is therefore conforming.
/// Γ₁ is the inner surface, Γ₂ the unit sphere.
pub fn shell_tet_mesh(inner: &SurfaceMesh, layers: usize) -> TetMesh {
    assert!(layers >= 1);
    let n = inner.vertex_count();
    let mut vertices = Vec::with_capacity(n * (layers + 1));
    for k in 0..=layers {
        let t = k as f64 / layers as f64;
        vertices.extend(inner.vertices().iter().map(|x| x * (1.0 - t) + x.normalize() * t));
    }
    let mut tets = Vec::with_capacity(3 * layers * inner.triangle_count());
    for k in 0..layers {
        let (bot, top) = (k * n, (k + 1) * n);
        for tri in inner.triangles() {
            let mut s = *tri;
            s.sort_unstable();
            let [a, b, c] = s;
            tets.push([bot + a, bot + b, bot + c, top + a]);
            tets.push([bot + b, bot + c, top + a, top + b]);
            tets.push([bot + c, top + a, top + b, top + c]);
        }
    }
    let mut tagged = Vec::with_capacity(2 * inner.triangle_count());
    for tri in inner.triangles() {
        tagged.push((*tri, BoundaryTag::Interface));
        tagged.push((tri.map(|v| v + layers * n), BoundaryTag::Outer));
    }
    TetMesh::new(vertices, tets, &tagged).expect("valid shell mesh")
}
