use std::collections::HashMap;
use std::sync::Arc;

use super::SurfaceMesh;
use crate::{Error, Result, Vec3};

/// Tetrahedra whose radius ratio falls below this value count as corrupted.
pub const MIN_RADIUS_RATIO: f64 = 0.05;

/// Physical tag of a boundary facet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryTag {
    /// Γ₁, the interface to the inclusion (physical group 1).
    Interface,
    /// Γ₂, the outer measurement boundary (physical group 2).
    Outer,
}

impl BoundaryTag {
    pub fn from_physical(tag: u32) -> Option<Self> {
        match tag {
            1 => Some(Self::Interface),
            2 => Some(Self::Outer),
            _ => None,
        }
    }

    pub fn physical(self) -> u32 {
        match self {
            Self::Interface => 1,
            Self::Outer => 2,
        }
    }
}

/// A boundary triangle, oriented with its normal pointing out of the volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFacet {
    pub vertices: [usize; 3],
    pub tag: BoundaryTag,
    pub tet: usize,
}

#[derive(Debug)]
struct TetTopology {
    tets: Vec<[usize; 4]>,
    boundary: Vec<BoundaryFacet>,
}

/// A tetrahedral mesh of Ω with tagged boundary Γ₁ ∪ Γ₂.
#[derive(Debug, Clone)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    topology: Arc<TetTopology>,
}

/// Outward faces of a positively oriented tetrahedron.
const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 3, 2], [0, 1, 3], [0, 2, 1]];

fn sorted3(f: [usize; 3]) -> [usize; 3] {
    let mut s = f;
    s.sort_unstable();
    s
}

impl TetMesh {
    /// Validates and builds a mesh. Negatively oriented tetrahedra are
    /// reordered; flat ones are rejected. Every boundary facet must carry a tag
    /// and every tagged triangle must be a boundary facet.
    pub fn new(vertices: Vec<Vec3>, mut tets: Vec<[usize; 4]>, tagged: &[([usize; 3], BoundaryTag)]) -> Result<Self> {
        let scale = bounding_diagonal(&vertices).powi(3);
        for (i, t) in tets.iter_mut().enumerate() {
            if let Some(&v) = t.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::VertexOutOfRange { index: i, vertex: v, count: vertices.len() });
            }
            let vol = signed_volume(&vertices, t);
            if vol.abs() <= 1e-14 * scale {
                return Err(Error::InvertedTet { index: i, volume: vol });
            }
            if vol < 0.0 {
                t.swap(2, 3);
            }
        }

        let mut faces: HashMap<[usize; 3], (usize, [usize; 3], usize)> = HashMap::new();
        for (i, t) in tets.iter().enumerate() {
            for lf in LOCAL_FACES {
                let f = [t[lf[0]], t[lf[1]], t[lf[2]]];
                faces.entry(sorted3(f)).and_modify(|e| e.0 += 1).or_insert((1, f, i));
            }
        }

        let tags: HashMap<[usize; 3], BoundaryTag> = tagged.iter().map(|&(f, tag)| (sorted3(f), tag)).collect();
        for key in tags.keys() {
            match faces.get(key) {
                Some((1, _, _)) => {}
                _ => return Err(Error::StrayTag { facet: *key }),
            }
        }

        let mut boundary: Vec<BoundaryFacet> = faces
            .iter()
            .filter(|(_, (count, _, _))| *count == 1)
            .map(|(key, &(_, oriented, tet))| match tags.get(key) {
                Some(&tag) => Ok(BoundaryFacet { vertices: oriented, tag, tet }),
                None => Err(Error::UntaggedBoundary { facet: oriented }),
            })
            .collect::<Result<_>>()?;
        boundary.sort_unstable_by_key(|f| (f.tag.physical(), sorted3(f.vertices)));

        Ok(Self { vertices, topology: Arc::new(TetTopology { tets, boundary }) })
    }

    /// Same connectivity, new coordinates. Fails on inverted tetrahedra.
    pub fn with_vertices(&self, vertices: Vec<Vec3>) -> Result<Self> {
        assert_eq!(vertices.len(), self.vertices.len());
        let mesh = Self { vertices, topology: Arc::clone(&self.topology) };
        for (i, t) in mesh.tets().iter().enumerate() {
            let vol = signed_volume(&mesh.vertices, t);
            if !(vol > 0.0) {
                return Err(Error::InvertedTet { index: i, volume: vol });
            }
        }
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.topology.tets
    }

    pub fn boundary(&self) -> &[BoundaryFacet] {
        &self.topology.boundary
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn tet_count(&self) -> usize {
        self.topology.tets.len()
    }

    pub fn facets_with(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryFacet> {
        self.boundary().iter().filter(move |f| f.tag == tag)
    }

    /// Sorted, deduplicated vertex indices touching facets with `tag`.
    pub fn tagged_vertices(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut v: Vec<usize> = self.facets_with(tag).flat_map(|f| f.vertices).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        signed_volume(&self.vertices, &self.topology.tets[t])
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tet_count()).map(|t| self.tet_volume(t)).sum()
    }

    /// Normalized radius ratio 3 r_in / R_circ of tetrahedron `t` (1 for a
    /// regular tetrahedron, 0 for a flat one).
    pub fn radius_ratio(&self, t: usize) -> f64 {
        let [i0, i1, i2, i3] = self.topology.tets[t];
        let x = &self.vertices;
        let (a, b, c) = (x[i1] - x[i0], x[i2] - x[i0], x[i3] - x[i0]);
        let det = a.dot(&b.cross(&c));
        if det <= 0.0 {
            return 0.0;
        }
        let face_area = |p: Vec3, q: Vec3, r: Vec3| 0.5 * (q - p).cross(&(r - p)).norm();
        let area = face_area(x[i1], x[i2], x[i3])
            + face_area(x[i0], x[i2], x[i3])
            + face_area(x[i0], x[i1], x[i3])
            + face_area(x[i0], x[i1], x[i2]);
        let r_in = det / (2.0 * area);
        let circ = b.cross(&c) * a.norm_squared() + c.cross(&a) * b.norm_squared() + a.cross(&b) * c.norm_squared();
        let r_out = circ.norm() / (2.0 * det);
        3.0 * r_in / r_out
    }

    pub fn min_quality(&self) -> f64 {
        (0..self.tet_count()).map(|t| self.radius_ratio(t)).fold(f64::INFINITY, f64::min)
    }

    /// Errors with [`Error::MeshCorrupted`] if any tetrahedron falls below
    /// [`MIN_RADIUS_RATIO`].
    pub fn check_quality(&self) -> Result<()> {
        let q = self.min_quality();
        if q < MIN_RADIUS_RATIO {
            return Err(Error::MeshCorrupted { quality: q, threshold: MIN_RADIUS_RATIO });
        }
        Ok(())
    }
}

fn signed_volume(x: &[Vec3], t: &[usize; 4]) -> f64 {
    let [i0, i1, i2, i3] = *t;
    (x[i1] - x[i0]).dot(&(x[i2] - x[i0]).cross(&(x[i3] - x[i0]))) / 6.0
}

fn bounding_diagonal(x: &[Vec3]) -> f64 {
    let mut lo = Vec3::repeat(f64::INFINITY);
    let mut hi = Vec3::repeat(f64::NEG_INFINITY);
    for v in x {
        lo = lo.inf(v);
        hi = hi.sup(v);
    }
    (hi - lo).norm()
}

/// The interface Γ₁ as a standalone surface, plus the vertex correspondence.
#[derive(Debug, Clone)]
pub struct Interface {
    /// Oriented with normals pointing out of Ω, i.e. into the inclusion.
    pub surface: SurfaceMesh,
    pub surface_to_volume: Vec<usize>,
    pub volume_to_surface: Vec<Option<usize>>,
}

impl Interface {
    /// Writes the surface coordinates back into a volume vertex array.
    pub fn scatter(&self, surface: &SurfaceMesh, volume: &mut [Vec3]) {
        for (s, &v) in self.surface_to_volume.iter().enumerate() {
            volume[v] = surface.vertices()[s];
        }
    }

    /// Reads the surface coordinates out of a volume mesh.
    pub fn gather(&self, mesh: &TetMesh) -> Vec<Vec3> {
        self.surface_to_volume.iter().map(|&v| mesh.vertices()[v]).collect()
    }
}

/// Extracts Γ₁ as a closed [`SurfaceMesh`].
pub fn extract_interface(mesh: &TetMesh) -> Result<Interface> {
    let surface_to_volume = mesh.tagged_vertices(BoundaryTag::Interface);
    if surface_to_volume.is_empty() {
        return Err(Error::InterfaceNotClosed("no Γ₁ facets".into()));
    }
    let mut volume_to_surface = vec![None; mesh.vertex_count()];
    for (s, &v) in surface_to_volume.iter().enumerate() {
        volume_to_surface[v] = Some(s);
    }
    let triangles = mesh
        .facets_with(BoundaryTag::Interface)
        .map(|f| f.vertices.map(|v| volume_to_surface[v].expect("tagged vertex")))
        .collect();
    let vertices = surface_to_volume.iter().map(|&v| mesh.vertices()[v]).collect();
    let surface = SurfaceMesh::new(vertices, triangles).map_err(|e| match e {
        Error::NonManifoldEdge { .. } | Error::InconsistentOrientation { .. } => {
            Error::InterfaceNotClosed(e.to_string())
        }
        other => other,
    })?;
    Ok(Interface { surface, surface_to_volume, volume_to_surface })
}
