//! Shape functionals on closed triangle meshes and their vertex gradients.

use std::ops::{Index, IndexMut};

use crate::mesh::{opposite_vertex, SurfaceMesh};
use crate::{s2, Error, Result, Vec3};

/// `4√(3π)`, the total variation of the normal of the smooth sphere with
/// area 6. Used as the reference value for the sphere refinement table.
pub fn sphere_reference_tv() -> f64 {
    4.0 * (3.0 * std::f64::consts::PI).sqrt()
}

/// A functional value with an optional per-edge breakdown.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalValue {
    pub value: f64,
    pub per_edge: Option<Vec<f64>>,
}

impl FunctionalValue {
    fn from_edges(per_edge: Vec<f64>) -> Self {
        Self { value: per_edge.iter().sum(), per_edge: Some(per_edge) }
    }
}

/// One 3-vector per mesh vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexField(pub Vec<Vec3>);

impl VertexField {
    pub fn zeros(n: usize) -> Self {
        Self(vec![Vec3::zeros(); n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dot(&self, other: &VertexField) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a.dot(b)).sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().flat_map(|v| v.iter().copied()).fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.iter().map(|v| v * s).collect())
    }

    /// `self += s · other`
    pub fn axpy(&mut self, s: f64, other: &VertexField) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b * s;
        }
    }

    /// Vertex positions displaced by `s · self`.
    pub fn displace(&self, base: &[Vec3], s: f64) -> Vec<Vec3> {
        base.iter().zip(&self.0).map(|(x, v)| x + v * s).collect()
    }
}

impl Index<usize> for VertexField {
    type Output = Vec3;
    fn index(&self, i: usize) -> &Vec3 {
        &self.0[i]
    }
}

impl IndexMut<usize> for VertexField {
    fn index_mut(&mut self, i: usize) -> &mut Vec3 {
        &mut self.0[i]
    }
}

/// Noisy targets and a regularization weight for the denoising problem.
#[derive(Debug, Clone)]
pub struct DenoiseProblem {
    pub targets: Vec<Vec3>,
    pub weight: f64,
}

impl DenoiseProblem {
    pub fn new(targets: Vec<Vec3>, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::InvalidConfig(format!("regularization weight must be ≥ 0, got {weight}")));
        }
        Ok(Self { targets, weight })
    }
}

/// Σ_E d(n_E⁺, n_E⁻)·|E|, with the per-edge terms H_E = |E|·Θ_E.
pub fn dtv(mesh: &SurfaceMesh) -> FunctionalValue {
    let normals = mesh.facet_normals();
    FunctionalValue::from_edges(
        mesh.edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| s2::distance_vec(&normals[edge.facet_plus], &normals[edge.facet_minus]) * mesh.edge_length(e))
            .collect(),
    )
}

/// Dihedral angles `d(n_E⁺, n_E⁻)` per edge.
pub fn dihedral_angles(mesh: &SurfaceMesh) -> Vec<f64> {
    let normals = mesh.facet_normals();
    mesh.edges().iter().map(|e| s2::distance_vec(&normals[e.facet_plus], &normals[e.facet_minus])).collect()
}

/// Fraction of edges whose dihedral angle is below `tol`.
pub fn flat_edge_fraction(mesh: &SurfaceMesh, tol: f64) -> f64 {
    let angles = dihedral_angles(mesh);
    angles.iter().filter(|&&a| a < tol).count() as f64 / angles.len().max(1) as f64
}

/// Σ_E |n_E⁺ − n_E⁻|₂·|E|.
pub fn dtv_euclidean(mesh: &SurfaceMesh) -> FunctionalValue {
    let normals = mesh.facet_normals();
    FunctionalValue::from_edges(
        mesh.edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| (normals[edge.facet_plus] - normals[edge.facet_minus]).norm() * mesh.edge_length(e))
            .collect(),
    )
}

pub fn surface_area(mesh: &SurfaceMesh) -> FunctionalValue {
    let value = (0..mesh.triangle_count()).map(|t| mesh.triangle_area(t)).sum();
    FunctionalValue { value, per_edge: None }
}

/// Returns `(dtv(αΓ), α·dtv(Γ))`.
pub fn dtv_scaling_check(mesh: &SurfaceMesh, alpha: f64) -> Result<(f64, f64)> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidConfig(format!("scale factor must be positive, got {alpha}")));
    }
    Ok((dtv(&mesh.scaled(alpha)?).value, alpha * dtv(mesh).value))
}

/// Gradient of the total area, assembled per triangle.
pub fn area_gradient(mesh: &SurfaceMesh) -> VertexField {
    let x = mesh.vertices();
    let mut g = VertexField::zeros(mesh.vertex_count());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let n = mesh.triangle_cross(t).normalize();
        for k in 0..3 {
            let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            g[tri[k]] += n.cross(&(x[b] - x[a])) * 0.5;
        }
    }
    g
}

/// Cotangent of the angle at `apex` in the triangle `(apex, p, q)`.
fn cot_at(apex: &Vec3, p: &Vec3, q: &Vec3, triangle: usize) -> Result<f64> {
    let (u, v) = (p - apex, q - apex);
    let cross = u.cross(&v).norm();
    let scale = u.norm() * v.norm();
    if !(cross > 1e-12 * scale) {
        return Err(Error::DegenerateTriangle { index: triangle, area: 0.5 * cross, eps: 0.5e-12 * scale });
    }
    Ok(u.dot(&v) / cross)
}

/// Generalized gradient of `dtv + μ·(area − A₀)` via the cotangent formula
///
/// ∇ᵢ = Σ_{j∈N(i)} [Θ_ij/|E_ij| + (μ/2)(cot α_ij + cot β_ij)] (x_i − x_j).
///
/// Where some Θ_ij vanish the first term selects zero, which is a valid
/// Clarke subgradient. For meshes whose dihedral angles all bend the same way
/// this is the classical gradient.
pub fn lagrangian_gradient(mesh: &SurfaceMesh, mu: f64) -> Result<VertexField> {
    lagrangian_gradient_parts(mesh, 1.0, mu)
}

/// `tv_weight·(TV part) + mu·(area part)` of [`lagrangian_gradient`].
pub fn lagrangian_gradient_parts(mesh: &SurfaceMesh, tv_weight: f64, mu: f64) -> Result<VertexField> {
    let x = mesh.vertices();
    let normals = mesh.facet_normals();
    let mut g = VertexField::zeros(mesh.vertex_count());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let [i, j] = edge.endpoints;
        let tp = mesh.triangles()[edge.facet_plus];
        let tm = mesh.triangles()[edge.facet_minus];
        let alpha = cot_at(&x[opposite_vertex(&tp, i, j)], &x[i], &x[j], edge.facet_plus)?;
        let beta = cot_at(&x[opposite_vertex(&tm, i, j)], &x[i], &x[j], edge.facet_minus)?;
        let theta = s2::distance_vec(&normals[edge.facet_plus], &normals[edge.facet_minus]);
        let w = tv_weight * theta / mesh.edge_length(e) + 0.5 * mu * (alpha + beta);
        let d = (x[i] - x[j]) * w;
        g[i] += d;
        g[j] -= d;
    }
    Ok(g)
}

/// ½ Σ_V |x_V − x̃_V|² and its gradient x_V − x̃_V.
pub fn denoise_loss(mesh: &SurfaceMesh, problem: &DenoiseProblem) -> Result<(f64, VertexField)> {
    if problem.targets.len() != mesh.vertex_count() {
        return Err(Error::LengthMismatch { expected: mesh.vertex_count(), got: problem.targets.len() });
    }
    let grad: Vec<Vec3> = mesh.vertices().iter().zip(&problem.targets).map(|(x, t)| x - t).collect();
    let value = 0.5 * grad.iter().map(|d| d.norm_squared()).sum::<f64>();
    Ok((value, VertexField(grad)))
}

/// Root-mean-square vertex distance between two meshes of equal size.
pub fn vertex_rmse(a: &[Vec3], b: &[Vec3]) -> f64 {
    assert_eq!(a.len(), b.len());
    (a.iter().zip(b).map(|(p, q)| (p - q).norm_squared()).sum::<f64>() / a.len() as f64).sqrt()
}
