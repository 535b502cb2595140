//! Vertex derivatives of normals, log maps and the splitting penalty, and the
//! scaled H¹(Γ) Riesz map from derivatives to smooth ascent fields.

use crate::linalg::{csr_from_triplets, pcg, spmv, CgOptions, CsrMatrix};
use crate::mesh::SurfaceMesh;
use crate::{s2, Error, Mat3, Result, Vec3, VertexField};

/// Default weight of the stiffness term in the H¹(Γ) product.
pub const DEFAULT_H1_SCALE: f64 = 1e-4;

/// Below this `|w|` (sine of the angle) the log-map Jacobians use their
/// first-order limits.
const SMALL_ANGLE: f64 = 1e-8;

/// `∂n/∂x_v` for the three vertices of the triangle `(x₀, x₁, x₂)`, where
/// `n = (x₁ − x₀)×(x₂ − x₀) / |·|`.
pub fn normal_jacobian(x: [Vec3; 3]) -> Result<[Mat3; 3]> {
    let c = (x[1] - x[0]).cross(&(x[2] - x[0]));
    let len = c.norm();
    let scale = (x[1] - x[0]).norm_squared().max((x[2] - x[0]).norm_squared());
    if !(len > 1e-12 * scale) {
        return Err(Error::DegenerateTriangle { index: 0, area: 0.5 * len, eps: 0.5e-12 * scale });
    }
    let n = c / len;
    let proj = (Mat3::identity() - n * n.transpose()) / len;
    Ok(std::array::from_fn(|v| proj * (x[(v + 2) % 3] - x[(v + 1) % 3]).cross_matrix()))
}

/// Jacobians `(L_p, L_q)` of `(p, q) ↦ log_p(q)` on `S² × S²`, as maps from
/// ambient perturbations of `p` and `q` that are tangent to `p` and `q`.
pub fn log_jacobians(p: &Vec3, q: &Vec3) -> Result<(Mat3, Mat3)> {
    let c = p.dot(q);
    if c <= -1.0 + s2::ANTIPODAL_EPS {
        return Err(Error::Antipodal { context: "log-map derivative".into() });
    }
    let w = q - p * c;
    let s = w.norm();
    let i = Mat3::identity();
    let dw_dp = -(p * q.transpose()) - i * c;
    let dw_dq = i - p * p.transpose();
    if s < SMALL_ANGLE {
        return Ok((dw_dp, dw_dq));
    }
    let theta = s.atan2(c);
    let u = w / s;
    let tang = (i - u * u.transpose()) * (theta / s);
    Ok((-(u * q.transpose()) / s + tang * dw_dp, -(u * p.transpose()) / s + tang * dw_dq))
}

/// `β Σ|d_E||E| + (λ/2) Σ|E||d_E − log_{n⁺}(n⁻) − b_E|²`.
pub fn penalty_value(mesh: &SurfaceMesh, d: &[Vec3], b: &[Vec3], beta: f64, lambda: f64) -> Result<f64> {
    check_len(mesh, d, b)?;
    let normals = mesh.facet_normals();
    let mut total = 0.0;
    for (e, edge) in mesh.edges().iter().enumerate() {
        let log = s2::log_vec(&normals[edge.facet_plus], &normals[edge.facet_minus])?;
        let len = mesh.edge_length(e);
        total += beta * d[e].norm() * len + 0.5 * lambda * len * (d[e] - log - b[e]).norm_squared();
    }
    Ok(total)
}

fn check_len(mesh: &SurfaceMesh, d: &[Vec3], b: &[Vec3]) -> Result<()> {
    for v in [d, b] {
        if v.len() != mesh.edge_count() {
            return Err(Error::LengthMismatch { expected: mesh.edge_count(), got: v.len() });
        }
    }
    Ok(())
}

/// Exact vertex gradient of [`penalty_value`] with `d` and `b` held fixed as
/// ambient vectors.
pub fn penalty_gradient(mesh: &SurfaceMesh, d: &[Vec3], b: &[Vec3], beta: f64, lambda: f64) -> Result<VertexField> {
    check_len(mesh, d, b)?;
    let x = mesh.vertices();
    let normals = mesh.facet_normals();
    let jac: Vec<[Mat3; 3]> = mesh
        .triangles()
        .iter()
        .enumerate()
        .map(|(t, tri)| {
            normal_jacobian(tri.map(|v| x[v])).map_err(|e| match e {
                Error::DegenerateTriangle { area, eps, .. } => Error::DegenerateTriangle { index: t, area, eps },
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let mut g = VertexField::zeros(mesh.vertex_count());
    for (e, edge) in mesh.edges().iter().enumerate() {
        let (p, q) = (normals[edge.facet_plus], normals[edge.facet_minus]);
        let log = s2::log_vec(&p, &q)?;
        let [ia, ib] = edge.endpoints;
        let len = mesh.edge_length(e);
        let r = d[e] - log - b[e];
        let dlen = (x[ia] - x[ib]) / len;
        let coef = beta * d[e].norm() + 0.5 * lambda * r.norm_squared();
        g[ia] += dlen * coef;
        g[ib] -= dlen * coef;

        let (lp, lq) = log_jacobians(&p, &q)?;
        let sp = lp.transpose() * r * (-lambda * len);
        let sq = lq.transpose() * r * (-lambda * len);
        for (facet, s) in [(edge.facet_plus, sp), (edge.facet_minus, sq)] {
            let tri = mesh.triangles()[facet];
            for k in 0..3 {
                g[tri[k]] += jac[facet][k].transpose() * s;
            }
        }
    }
    Ok(g)
}

/// Scalar P1 surface mass and cotangent stiffness matrices of a mesh.
#[derive(Debug, Clone)]
pub struct SurfaceOperatorCache {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub h1_scale: f64,
    system: CsrMatrix,
}

impl SurfaceOperatorCache {
    pub fn assemble(mesh: &SurfaceMesh, h1_scale: f64) -> Result<Self> {
        let x = mesh.vertices();
        let n = mesh.vertex_count();
        let mut mass = Vec::with_capacity(9 * mesh.triangle_count());
        let mut stiff = Vec::with_capacity(9 * mesh.triangle_count());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let area = mesh.triangle_area(t);
            if !(area > 0.0) {
                return Err(Error::DegenerateTriangle { index: t, area, eps: 0.0 });
            }
            for i in 0..3 {
                for j in 0..3 {
                    mass.push((tri[i], tri[j], area / if i == j { 6.0 } else { 12.0 }));
                }
            }
            // opposite edge vectors e_k = x_{k+2} − x_{k+1}; K_ij = e_i·e_j / (4A)
            let e: [Vec3; 3] = std::array::from_fn(|k| x[tri[(k + 2) % 3]] - x[tri[(k + 1) % 3]]);
            for i in 0..3 {
                for j in 0..3 {
                    stiff.push((tri[i], tri[j], e[i].dot(&e[j]) / (4.0 * area)));
                }
            }
        }
        let mass = csr_from_triplets(n, &mass);
        let stiffness = csr_from_triplets(n, &stiff);
        let system = mass.add_scaled(h1_scale, &stiffness);
        Ok(Self { mass, stiffness, h1_scale, system })
    }

    /// `(h1_scale·K + M)` applied component-wise.
    pub fn apply(&self, w: &VertexField) -> VertexField {
        let n = w.len();
        let mut out = VertexField::zeros(n);
        let mut y = vec![0.0; n];
        for c in 0..3 {
            let xc: Vec<f64> = w.0.iter().map(|v| v[c]).collect();
            spmv(&self.system, &xc, &mut y);
            for i in 0..n {
                out[i][c] = y[i];
            }
        }
        out
    }

    /// Solves `(h1_scale·K + M) W = rhs` component-wise.
    pub fn solve(&self, rhs: &VertexField) -> Result<VertexField> {
        let n = rhs.len();
        if n != self.system.nrows() {
            return Err(Error::LengthMismatch { expected: self.system.nrows(), got: n });
        }
        let opts = CgOptions { rel_tol: 1e-10, max_iter: 10 * n.max(1) };
        let mut out = VertexField::zeros(n);
        for c in 0..3 {
            let b: Vec<f64> = rhs.0.iter().map(|v| v[c]).collect();
            let mut w = vec![0.0; n];
            pcg(&self.system, &b, &mut w, opts)?;
            for i in 0..n {
                out[i][c] = w[i];
            }
        }
        Ok(out)
    }
}

/// Smoothed ascent field for the derivative `rhs` in the scaled H¹(Γ) product.
pub fn h1_surface_gradient(mesh: &SurfaceMesh, rhs: &VertexField, h1_scale: f64) -> Result<VertexField> {
    SurfaceOperatorCache::assemble(mesh, h1_scale)?.solve(rhs)
}
