//! Closed triangulated surfaces, their oriented-edge topology, and tetrahedral
//! volume meshes.
//!
//! A [`SurfaceMesh`] is validated on construction: every undirected edge is
//! shared by exactly two triangles that traverse it in opposite directions.
//! Geometry (vertex coordinates) can be swapped out while the connectivity and
//! edge table are shared, which is how the optimizers produce new iterates.

pub mod generate;
pub mod io;
mod tet;
pub mod distance;

use std::collections::HashMap;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::{s2, Error, Result, Vec3};

pub use tet::{extract_interface, BoundaryFacet, BoundaryTag, Interface, TetMesh, MIN_RADIUS_RATIO};

/// An interior edge of a closed surface with a fixed orientation.
///
/// `endpoints` is stored as `(min, max)`. `facet_plus` is the triangle that
/// traverses the edge from `endpoints[0]` to `endpoints[1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrientedEdge {
    pub endpoints: [usize; 2],
    pub facet_plus: usize,
    pub facet_minus: usize,
}

/// Per-edge geometric quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub length: f64,
    pub n_plus: Vec3,
    pub n_minus: Vec3,
    /// In-plane unit vectors orthogonal to the edge, pointing away from the
    /// respective facet.
    pub mu_plus: Vec3,
    pub mu_minus: Vec3,
    /// Exterior dihedral angle in `[0, π]`.
    pub theta: f64,
}

#[derive(Debug)]
struct Topology {
    triangles: Vec<[usize; 3]>,
    edges: Vec<OrientedEdge>,
    /// `triangle_edges[t][k]` is the edge between local vertices `k` and `k+1`.
    triangle_edges: Vec<[usize; 3]>,
}

/// A closed, consistently oriented triangle mesh.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    vertices: Vec<Vec3>,
    topology: Arc<Topology>,
}

impl SurfaceMesh {
    /// Builds and validates a mesh; rejects open, non-manifold, inconsistently
    /// oriented and degenerate inputs.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let topology = build_topology(vertices.len(), triangles)?;
        let mesh = Self { vertices, topology: Arc::new(topology) };
        mesh.check_geometry()?;
        Ok(mesh)
    }

    /// Same connectivity, new coordinates; checked for degenerate triangles.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        let mesh = self.with_vertices_unchecked(vertices);
        mesh.check_geometry()?;
        Ok(mesh)
    }

    /// Same connectivity, new coordinates, no geometric checks.
    pub fn with_vertices_unchecked(&self, vertices: Vec<Vec3>) -> Self {
        assert_eq!(vertices.len(), self.vertices.len(), "vertex count must not change");
        Self { vertices, topology: Arc::clone(&self.topology) }
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.topology.triangles
    }

    pub fn edges(&self) -> &[OrientedEdge] {
        &self.topology.edges
    }

    pub fn triangle_edges(&self) -> &[[usize; 3]] {
        &self.topology.triangle_edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn edge_count(&self) -> usize {
        self.topology.edges.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.topology.triangles.len()
    }

    pub fn shares_topology(&self, other: &SurfaceMesh) -> bool {
        Arc::ptr_eq(&self.topology, &other.topology)
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.topology.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Unnormalized normal `(x_b − x_a) × (x_c − x_a)`; its norm is twice the area.
    pub fn triangle_cross(&self, t: usize) -> Vec3 {
        let [a, b, c] = self.triangle_points(t);
        (b - a).cross(&(c - a))
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        0.5 * self.triangle_cross(t).norm()
    }

    pub fn facet_normals(&self) -> Vec<Vec3> {
        (0..self.triangle_count()).map(|t| self.triangle_cross(t).normalize()).collect()
    }

    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.topology.edges[e].endpoints;
        (self.vertices[a] - self.vertices[b]).norm()
    }

    pub fn average_edge_length(&self) -> f64 {
        (0..self.edge_count()).map(|e| self.edge_length(e)).sum::<f64>() / self.edge_count() as f64
    }

    pub fn bounding_box_diagonal(&self) -> f64 {
        let mut lo = Vec3::repeat(f64::INFINITY);
        let mut hi = Vec3::repeat(f64::NEG_INFINITY);
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (hi - lo).norm()
    }

    /// Triangles with area below this threshold are considered degenerate.
    pub fn area_eps(&self) -> f64 {
        1e-12 * self.bounding_box_diagonal().powi(2)
    }

    pub fn check_geometry(&self) -> Result<()> {
        let eps = self.area_eps();
        for t in 0..self.triangle_count() {
            let area = self.triangle_area(t);
            if !(area >= eps) {
                return Err(Error::DegenerateTriangle { index: t, area, eps });
            }
        }
        Ok(())
    }

    /// Σ x_a · (x_b × x_c) / 6 over all triangles.
    pub fn signed_volume(&self) -> f64 {
        self.triangles()
            .iter()
            .map(|&[a, b, c]| self.vertices[a].dot(&self.vertices[b].cross(&self.vertices[c])) / 6.0)
            .sum()
    }

    /// Copy with every triangle's orientation reversed.
    pub fn flipped(&self) -> Self {
        let tris = self.triangles().iter().map(|&[a, b, c]| [a, c, b]).collect();
        Self::new(self.vertices.clone(), tris).expect("flipping preserves validity")
    }

    /// Applies `f` to every vertex; the result is re-checked for degeneracy.
    pub fn map_vertices(&self, f: impl FnMut(&Vec3) -> Vec3) -> Result<Self> {
        self.with_vertices(self.vertices.iter().map(f).collect())
    }

    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        self.map_vertices(|v| v * alpha)
    }

    /// Sorted neighbour lists, one per vertex.
    pub fn vertex_neighbors(&self) -> Vec<Vec<usize>> {
        let mut nb = vec![Vec::new(); self.vertex_count()];
        for e in self.edges() {
            let [a, b] = e.endpoints;
            nb[a].push(b);
            nb[b].push(a);
        }
        for list in &mut nb {
            list.sort_unstable();
        }
        nb
    }

    /// Angle-weighted average of the incident facet normals, normalized.
    pub fn vertex_normals(&self) -> Vec<Vec3> {
        let mut acc = vec![Vec3::zeros(); self.vertex_count()];
        for (t, tri) in self.triangles().iter().enumerate() {
            let n = self.triangle_cross(t).normalize();
            for k in 0..3 {
                let p = self.vertices[tri[k]];
                let u = self.vertices[tri[(k + 1) % 3]] - p;
                let v = self.vertices[tri[(k + 2) % 3]] - p;
                acc[tri[k]] += n * s2::distance_vec(&u.normalize(), &v.normalize());
            }
        }
        acc.into_iter().map(|v| v.normalize()).collect()
    }
}

fn build_topology(vertex_count: usize, triangles: Vec<[usize; 3]>) -> Result<Topology> {
    // directed half-edge (from, to) -> triangle
    let mut half: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
    let mut undirected: HashMap<(usize, usize), usize> = HashMap::with_capacity(2 * triangles.len());
    for (t, tri) in triangles.iter().enumerate() {
        for &v in tri {
            if v >= vertex_count {
                return Err(Error::VertexOutOfRange { index: t, vertex: v, count: vertex_count });
            }
        }
        if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
            return Err(Error::DegenerateTriangle { index: t, area: 0.0, eps: 0.0 });
        }
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            *undirected.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            // a repeated directed half-edge surfaces below as either a
            // non-manifold count or a missing opposite half-edge
            half.insert((a, b), t);
        }
    }

    let mut keys: Vec<(usize, usize)> = undirected.keys().copied().collect();
    keys.sort_unstable();
    for &(a, b) in &keys {
        let count = undirected[&(a, b)];
        if count != 2 {
            return Err(Error::NonManifoldEdge { a, b, count });
        }
    }

    let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(keys.len());
    let mut edges = Vec::with_capacity(keys.len());
    for &(a, b) in &keys {
        match (half.get(&(a, b)), half.get(&(b, a))) {
            (Some(&fp), Some(&fm)) if fp != fm => {
                index.insert((a, b), edges.len());
                edges.push(OrientedEdge { endpoints: [a, b], facet_plus: fp, facet_minus: fm });
            }
            _ => return Err(Error::InconsistentOrientation { a, b }),
        }
    }

    let triangle_edges = triangles
        .iter()
        .map(|tri| {
            let mut out = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                out[k] = index[&(a.min(b), a.max(b))];
            }
            out
        })
        .collect();

    Ok(Topology { triangles, edges, triangle_edges })
}

/// The vertex of `tri` that is neither `a` nor `b`.
pub(crate) fn opposite_vertex(tri: &[usize; 3], a: usize, b: usize) -> usize {
    *tri.iter().find(|&&v| v != a && v != b).expect("edge belongs to triangle")
}

/// Edge lengths, normals, co-normals and dihedral angles for every edge.
pub fn compute_edge_geometry(mesh: &SurfaceMesh) -> Result<Vec<EdgeGeometry>> {
    mesh.check_geometry()?;
    let normals = mesh.facet_normals();
    let x = mesh.vertices();
    Ok(mesh
        .edges()
        .iter()
        .map(|e| {
            let [a, b] = e.endpoints;
            let edge = x[b] - x[a];
            let n_plus = normals[e.facet_plus];
            let n_minus = normals[e.facet_minus];
            EdgeGeometry {
                length: edge.norm(),
                n_plus,
                n_minus,
                // F⁺ runs a→b, F⁻ runs b→a
                mu_plus: edge.cross(&n_plus).normalize(),
                mu_minus: (-edge).cross(&n_minus).normalize(),
                theta: s2::distance_vec(&n_plus, &n_minus),
            }
        })
        .collect())
}

/// Moves every vertex along its angle-weighted normal by a Gaussian amount
/// with standard deviation `sigma_rel` times the average edge length.
///
/// The result is not checked for degenerate triangles.
pub fn add_vertex_noise(mesh: &SurfaceMesh, sigma_rel: f64, seed: u64) -> SurfaceMesh {
    assert!(sigma_rel >= 0.0, "sigma_rel must be non-negative");
    if sigma_rel == 0.0 {
        return mesh.clone();
    }
    let sigma = sigma_rel * mesh.average_edge_length();
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normals = mesh.vertex_normals();
    let vertices = mesh
        .vertices()
        .iter()
        .zip(&normals)
        .map(|(x, n)| x + n * normal.sample(&mut rng))
        .collect();
    mesh.with_vertices_unchecked(vertices)
}

#[cfg(test)]
mod tests {
    use super::generate;
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn open_patch(z: f64) -> (Vec<Vec3>, Vec<[usize; 3]>) {
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(1.0, 1.0, z),
        ];
        (v, vec![[0, 1, 2], [1, 3, 2]])
    }

    #[test]
    fn open_surface_is_rejected() {
        let (v, t) = open_patch(0.0);
        assert!(matches!(SurfaceMesh::new(v, t), Err(Error::NonManifoldEdge { count: 1, .. })));
    }

    #[test]
    fn tetrahedron_counts() {
        let m = generate::regular_tetrahedron(1.0);
        assert_eq!((m.vertex_count(), m.edge_count(), m.triangle_count()), (4, 6, 4));
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn edges_of_a_shared_face_are_non_manifold() {
        // two tetrahedra glued along a face, plus the shared face: each of its
        // edges has four incident triangles
        let v = vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
            Vec3::new(0.0, 0.0, -1.0),
        ];
        let t = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2], [0, 1, 4], [1, 2, 4], [0, 4, 2], [0, 1, 2]];
        let err = SurfaceMesh::new(v, t).unwrap_err();
        assert!(matches!(err, Error::NonManifoldEdge { count: 4, .. }), "{err}");
    }

    #[test]
    fn inconsistent_orientation_is_reported() {
        let m = generate::regular_tetrahedron(1.0);
        let mut t = m.triangles().to_vec();
        t[0] = [t[0][0], t[0][2], t[0][1]];
        let err = SurfaceMesh::new(m.vertices().to_vec(), t).unwrap_err();
        assert!(matches!(err, Error::InconsistentOrientation { .. }), "{err}");
    }

    #[test]
    fn degenerate_triangle_is_rejected() {
        let m = generate::regular_tetrahedron(1.0);
        let mut v = m.vertices().to_vec();
        v[3] = (v[0] + v[1]) * 0.5;
        v[2] = (v[0] + v[1]) * 0.25;
        assert!(matches!(m.with_vertices(v), Err(Error::DegenerateTriangle { .. })));
    }

    #[test]
    fn edge_orientation_convention() {
        let m = generate::icosphere(1, 1.0);
        for e in m.edges() {
            let [a, b] = e.endpoints;
            assert!(a < b);
            let tp = m.triangles()[e.facet_plus];
            let runs_forward = (0..3).any(|k| tp[k] == a && tp[(k + 1) % 3] == b);
            assert!(runs_forward);
            assert_ne!(e.facet_plus, e.facet_minus);
        }
    }

    #[test]
    fn cube_and_tetrahedron_angles() {
        let cube = generate::cube_crossed_diagonals(1.0);
        let geo = compute_edge_geometry(&cube).unwrap();
        assert_eq!(geo.len(), 36);
        let sharp: Vec<_> = geo.iter().filter(|g| g.theta > 1e-9).collect();
        assert_eq!(sharp.len(), 12);
        for g in sharp {
            assert!((g.theta - FRAC_PI_2).abs() < 1e-14);
            assert!((g.length - 1.0).abs() < 1e-14);
        }

        let tet = generate::regular_tetrahedron(1.0);
        let expected = PI - (1.0f64 / 3.0).acos();
        for g in compute_edge_geometry(&tet).unwrap() {
            assert!((g.theta - expected).abs() < 1e-12);
            assert!((g.theta - 1.9106).abs() < 1e-4);
        }
    }

    #[test]
    fn edge_geometry_invariants() {
        let m = generate::icosphere(2, 1.3);
        for (e, g) in m.edges().iter().zip(compute_edge_geometry(&m).unwrap()) {
            let dir = m.vertices()[e.endpoints[1]] - m.vertices()[e.endpoints[0]];
            assert!((g.n_plus.norm() - 1.0).abs() < 1e-12);
            assert!((g.n_minus.norm() - 1.0).abs() < 1e-12);
            for mu in [g.mu_plus, g.mu_minus] {
                assert!(mu.dot(&dir).abs() < 1e-10);
            }
            assert!(g.mu_plus.dot(&g.n_plus).abs() < 1e-10);
            assert!(g.mu_minus.dot(&g.n_minus).abs() < 1e-10);
        }
    }

    #[test]
    fn co_normal_points_away_from_facet() {
        let m = generate::icosphere(1, 1.0);
        let geo = compute_edge_geometry(&m).unwrap();
        for (e, g) in m.edges().iter().zip(&geo) {
            let [a, b] = e.endpoints;
            let x = m.vertices();
            let c_plus = x[opposite_vertex(&m.triangles()[e.facet_plus], a, b)];
            let c_minus = x[opposite_vertex(&m.triangles()[e.facet_minus], a, b)];
            assert!(g.mu_plus.dot(&(c_plus - x[a])) < 0.0);
            assert!(g.mu_minus.dot(&(c_minus - x[a])) < 0.0);
        }
    }

    #[test]
    fn flat_hinge_has_zero_angle() {
        // the crossed cube has coplanar facets across every diagonal edge
        let cube = generate::cube_crossed_diagonals(1.0);
        let geo = compute_edge_geometry(&cube).unwrap();
        assert_eq!(geo.iter().filter(|g| g.theta == 0.0).count(), 24);
    }

    #[test]
    fn flipping_negates_signed_volume() {
        let m = generate::icosphere(2, 0.8);
        let v = m.signed_volume();
        assert!(v > 0.0);
        assert!((m.flipped().signed_volume() + v).abs() < 1e-14);
    }

    #[test]
    fn noise_zero_sigma_is_identity_and_seeded() {
        let m = generate::icosphere(2, 1.0);
        assert_eq!(add_vertex_noise(&m, 0.0, 7).vertices(), m.vertices());
        let a = add_vertex_noise(&m, 0.1, 42);
        let b = add_vertex_noise(&m, 0.1, 42);
        let c = add_vertex_noise(&m, 0.1, 43);
        assert_eq!(a.vertices(), b.vertices());
        assert_ne!(a.vertices(), c.vertices());
    }
}
