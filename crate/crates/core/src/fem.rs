//! P1 finite elements on tetrahedral shells for the inclusion-detection EIT
//! problem
//!
//! ```text
//! −Δu_i = 0 in Ω,   ∂u_i/∂n = 0 on Γ₁,   ∂u_i/∂n + α u_i = f_i on Γ₂,
//! ℓ = ½ Σ_i ∫_{Γ₂} |u_i − z_i|²,
//! ```
//!
//! with adjoints, the vertex derivative of `ℓ`, source patches, synthetic
//! data, and the harmonic extension used to move interior vertices.

use std::f64::consts::PI;

use log::debug;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bregman::LossModel;
use crate::linalg::{csr_from_triplets, pcg, pcg_deflated, spmv, CgOptions, CsrMatrix};
use crate::mesh::{extract_interface, BoundaryTag, Interface, SurfaceMesh, TetMesh};
use crate::{Error, Mat3, Result, Vec3, VertexField};

/// Edge-matrix `D = [x₁ − x₀, x₂ − x₀, x₃ − x₀]` of a tetrahedron.
fn edge_matrix(x: &[Vec3], t: &[usize; 4]) -> Mat3 {
    Mat3::from_columns(&[x[t[1]] - x[t[0]], x[t[2]] - x[t[0]], x[t[3]] - x[t[0]]])
}

/// Gradients of the four barycentric coordinates and the volume.
fn p1_gradients(x: &[Vec3], t: &[usize; 4], index: usize) -> Result<([Vec3; 4], f64, Mat3)> {
    let d = edge_matrix(x, t);
    let vol = d.determinant() / 6.0;
    if !(vol > 0.0) {
        return Err(Error::InvertedTet { index, volume: vol });
    }
    let inv = d.try_inverse().ok_or(Error::InvertedTet { index, volume: vol })?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Ok(([-(g1 + g2 + g3), g1, g2, g3], vol, inv))
}

fn facet_area(x: &[Vec3], f: &[usize; 3]) -> f64 {
    0.5 * (x[f[1]] - x[f[0]]).cross(&(x[f[2]] - x[f[0]])).norm()
}

/// Volume stiffness `∫∇φ_i·∇φ_j` and mass `∫φ_iφ_j`.
pub fn volume_matrices(mesh: &TetMesh) -> Result<(CsrMatrix, CsrMatrix)> {
    let x = mesh.vertices();
    let mut k = Vec::with_capacity(16 * mesh.tet_count());
    let mut m = Vec::with_capacity(16 * mesh.tet_count());
    for (ti, t) in mesh.tets().iter().enumerate() {
        let (g, vol, _) = p1_gradients(x, t, ti)?;
        for i in 0..4 {
            for j in 0..4 {
                k.push((t[i], t[j], vol * g[i].dot(&g[j])));
                m.push((t[i], t[j], vol / if i == j { 10.0 } else { 20.0 }));
            }
        }
    }
    let n = mesh.vertex_count();
    Ok((csr_from_triplets(n, &k), csr_from_triplets(n, &m)))
}

/// Boundary mass `∫_{Γ₂} φ_iφ_j`.
pub fn outer_mass(mesh: &TetMesh) -> CsrMatrix {
    let x = mesh.vertices();
    let mut m = Vec::new();
    for f in mesh.facets_with(BoundaryTag::Outer) {
        let a = facet_area(x, &f.vertices);
        for i in 0..3 {
            for j in 0..3 {
                m.push((f.vertices[i], f.vertices[j], a / if i == j { 6.0 } else { 12.0 }));
            }
        }
    }
    csr_from_triplets(mesh.vertex_count(), &m)
}

/// Assigns every Γ₂ facet (in [`TetMesh::facets_with`] order) to one of `r`
/// patches by binning its centroid direction into `n_lat × n_lon` cells,
/// equal-area in latitude. `n_lat` is the largest divisor of `r` not above
/// `√r` (6×8 for `r = 48`).
pub fn source_patches(mesh: &TetMesh, r: usize) -> Result<Vec<usize>> {
    if r == 0 {
        return Err(Error::InvalidConfig("number of sources must be ≥ 1".into()));
    }
    let n_lat = (1..=r).filter(|d| r % d == 0 && d * d <= r).max().unwrap_or(1);
    let n_lon = r / n_lat;
    let x = mesh.vertices();
    let patches: Vec<usize> = mesh
        .facets_with(BoundaryTag::Outer)
        .map(|f| {
            let c = (x[f.vertices[0]] + x[f.vertices[1]] + x[f.vertices[2]]).normalize();
            let lat = (((c.z + 1.0) / 2.0 * n_lat as f64) as usize).min(n_lat - 1);
            let lon = (((c.y.atan2(c.x) + PI) / (2.0 * PI) * n_lon as f64) as usize).min(n_lon - 1);
            lat * n_lon + lon
        })
        .collect();
    let mut counts = vec![0usize; r];
    for &p in &patches {
        counts[p] += 1;
    }
    if let Some(p) = counts.iter().position(|&c| c == 0) {
        return Err(Error::EmptyPatch { patch: p });
    }
    Ok(patches)
}

/// Load vectors `∫_{Γ₂} f_i φ_j` for characteristic functions of the patches.
pub fn source_loads(mesh: &TetMesh, patches: &[usize], r: usize) -> Vec<Vec<f64>> {
    let x = mesh.vertices();
    let mut loads = vec![vec![0.0; mesh.vertex_count()]; r];
    for (f, &p) in mesh.facets_with(BoundaryTag::Outer).zip(patches) {
        let a = facet_area(x, &f.vertices) / 3.0;
        for &v in &f.vertices {
            loads[p][v] += a;
        }
    }
    loads
}

/// Linear systems, sources and data of the forward problem on one mesh.
#[derive(Debug, Clone)]
pub struct FemSystem {
    pub alpha: f64,
    pub r: usize,
    /// `K + α M_{Γ₂}`
    pub operator: CsrMatrix,
    pub stiffness: CsrMatrix,
    /// `M_{Γ₂}`, not scaled by `α`.
    pub robin_mass: CsrMatrix,
    pub patches: Vec<usize>,
    pub loads: Vec<Vec<f64>>,
    /// Measurements `z_i` as vertex vectors, zero away from Γ₂.
    pub data: Vec<Vec<f64>>,
    pub cg: CgOptions,
}

impl FemSystem {
    /// Assembles the operator and loads with zero data.
    pub fn assemble(mesh: &TetMesh, alpha: f64, patches: Vec<usize>, r: usize) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::InvalidConfig(format!("Robin coefficient must be > 0, got {alpha}")));
        }
        let n_outer = mesh.facets_with(BoundaryTag::Outer).count();
        if patches.len() != n_outer {
            return Err(Error::LengthMismatch { expected: n_outer, got: patches.len() });
        }
        if patches.iter().any(|&p| p >= r) {
            return Err(Error::InvalidConfig(format!("patch index out of range for r = {r}")));
        }
        let (stiffness, _) = volume_matrices(mesh)?;
        let robin_mass = outer_mass(mesh);
        let operator = stiffness.add_scaled(alpha, &robin_mass);
        let loads = source_loads(mesh, &patches, r);
        let n = mesh.vertex_count();
        Ok(Self {
            alpha,
            r,
            operator,
            stiffness,
            robin_mass,
            patches,
            loads,
            data: vec![vec![0.0; n]; r],
            cg: CgOptions { rel_tol: 1e-10, max_iter: 20 * n.max(1) },
        })
    }

    /// Same sources and data on a moved copy of the mesh.
    pub fn reassemble(&self, mesh: &TetMesh) -> Result<Self> {
        let mut s = Self::assemble(mesh, self.alpha, self.patches.clone(), self.r)?;
        s.data = self.data.clone();
        s.cg = self.cg;
        Ok(s)
    }

    pub fn vertex_count(&self) -> usize {
        self.operator.nrows()
    }

    fn solve(&self, rhs: &[f64], warm: Option<&[f64]>) -> Result<Vec<f64>> {
        let n = self.vertex_count();
        let mut x = warm.map(<[f64]>::to_vec).unwrap_or_else(|| vec![0.0; n]);
        let report = pcg_deflated(&self.operator, rhs, &mut x, &vec![1.0; n], self.cg)?;
        debug!("state solve: {} iterations, residual {:e}", report.iterations, report.rel_residual);
        Ok(x)
    }

    /// `A u_i = F_i` for every source, optionally warm-started.
    pub fn solve_state(&self, warm: Option<&[Vec<f64>]>) -> Result<Vec<Vec<f64>>> {
        (0..self.r).map(|i| self.solve(&self.loads[i], warm.map(|w| w[i].as_slice()))).collect()
    }

    /// `A p_i = −M_{Γ₂}(u_i − z_i)`, optionally warm-started.
    pub fn solve_adjoint(&self, states: &[Vec<f64>], warm: Option<&[Vec<f64>]>) -> Result<Vec<Vec<f64>>> {
        states
            .iter()
            .zip(&self.data)
            .enumerate()
            .map(|(i, (u, z))| {
                let diff: Vec<f64> = u.iter().zip(z).map(|(a, b)| a - b).collect();
                let mut rhs = vec![0.0; diff.len()];
                spmv(&self.robin_mass, &diff, &mut rhs);
                rhs.iter_mut().for_each(|v| *v = -*v);
                self.solve(&rhs, warm.map(|w| w[i].as_slice()))
            })
            .collect()
    }

    /// `½ Σ_i (u_i − z_i)ᵀ M_{Γ₂} (u_i − z_i)`
    pub fn loss(&self, states: &[Vec<f64>]) -> f64 {
        let mut y = vec![0.0; self.vertex_count()];
        states
            .iter()
            .zip(&self.data)
            .map(|(u, z)| {
                let diff: Vec<f64> = u.iter().zip(z).map(|(a, b)| a - b).collect();
                spmv(&self.robin_mass, &diff, &mut y);
                0.5 * diff.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>()
            })
            .sum()
    }

    /// `max_i |A u_i − F_i| / |F_i|`
    pub fn state_residual(&self, states: &[Vec<f64>]) -> f64 {
        let mut y = vec![0.0; self.vertex_count()];
        states
            .iter()
            .zip(&self.loads)
            .map(|(u, f)| {
                spmv(&self.operator, u, &mut y);
                let r: f64 = y.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                r / f.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Derivative of the Lagrangian
/// `Σ_i [½∫_{Γ₂}|u_i − z_i|² + ∫∇p_i·∇u_i + ∫_{Γ₂} p_i(αu_i − f_i)]`
/// with respect to every vertex coordinate, at fixed nodal `u`, `p`, `z`.
/// When `u` and `p` solve the state and adjoint equations this is the
/// derivative of the reduced loss.
pub fn loss_shape_derivative(
    system: &FemSystem,
    mesh: &TetMesh,
    states: &[Vec<f64>],
    adjoints: &[Vec<f64>],
) -> Result<VertexField> {
    let x = mesh.vertices();
    let mut g = VertexField::zeros(mesh.vertex_count());
    for (ti, t) in mesh.tets().iter().enumerate() {
        let (grads, vol, inv) = p1_gradients(x, t, ti)?;
        let mut s = Mat3::zeros();
        for (u, p) in states.iter().zip(adjoints) {
            let a: Vec3 = (0..4).map(|k| grads[k] * u[t[k]]).sum();
            let b: Vec3 = (0..4).map(|k| grads[k] * p[t[k]]).sum();
            s += Mat3::identity() * a.dot(&b) - a * b.transpose() - b * a.transpose();
        }
        let m = inv * s * vol;
        for k in 0..3 {
            let row = m.row(k).transpose();
            g[t[k + 1]] += row;
            g[t[0]] -= row;
        }
    }
    let local_mass = |fv: &[usize; 3], a: &dyn Fn(usize) -> f64, b: &dyn Fn(usize) -> f64| -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += a(fv[i]) * b(fv[j]) / if i == j { 6.0 } else { 12.0 };
            }
        }
        s
    };
    for (f, &patch) in mesh.facets_with(BoundaryTag::Outer).zip(&system.patches) {
        let fv = &f.vertices;
        let n = (x[fv[1]] - x[fv[0]]).cross(&(x[fv[2]] - x[fv[0]])).normalize();
        // every Γ₂ term is the facet area times a fixed reference integral
        let mut per_area = 0.0;
        for ((u, p), z) in states.iter().zip(adjoints).zip(&system.data) {
            let diff = |v: usize| u[v] - z[v];
            per_area += 0.5 * local_mass(fv, &diff, &diff) + system.alpha * local_mass(fv, &|v| p[v], &|v| u[v]);
        }
        per_area -= fv.iter().map(|&v| adjoints[patch][v]).sum::<f64>() / 3.0;
        for k in 0..3 {
            let (a, b) = (fv[(k + 1) % 3], fv[(k + 2) % 3]);
            g[fv[k]] += n.cross(&(x[b] - x[a])) * (0.5 * per_area);
        }
    }
    Ok(g)
}

/// Harmonic-type extension `(K + M)W = 0` of a displacement on Γ₁ into the
/// volume, with `W = 0` on Γ₂.
#[derive(Debug, Clone)]
pub struct VolumeExtension {
    matrix: CsrMatrix,
    interior: Vec<usize>,
    interior_matrix: CsrMatrix,
    interface: Vec<usize>,
    is_interface: Vec<bool>,
    cg: CgOptions,
}

impl VolumeExtension {
    pub fn new(mesh: &TetMesh) -> Result<Self> {
        let (k, m) = volume_matrices(mesh)?;
        let matrix = k.add_scaled(1.0, &m);
        let n = mesh.vertex_count();
        let mut fixed = vec![false; n];
        let mut is_interface = vec![false; n];
        let interface = mesh.tagged_vertices(BoundaryTag::Interface);
        for &v in &interface {
            fixed[v] = true;
            is_interface[v] = true;
        }
        for v in mesh.tagged_vertices(BoundaryTag::Outer) {
            fixed[v] = true;
        }
        let keep: Vec<bool> = fixed.iter().map(|f| !f).collect();
        let interior: Vec<usize> = (0..n).filter(|&v| keep[v]).collect();
        let interior_matrix = matrix.submatrix(&keep);
        Ok(Self { matrix, interior, interior_matrix, interface, is_interface, cg: CgOptions { rel_tol: 1e-10, max_iter: 10 * n.max(1) } })
    }

    /// Γ₁ vertex indices in the order expected by [`Self::extend`].
    pub fn interface_vertices(&self) -> &[usize] {
        &self.interface
    }

    fn solve_interior(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut y = vec![0.0; rhs.len()];
        pcg(&self.interior_matrix, rhs, &mut y, self.cg)?;
        Ok(y)
    }

    /// Full displacement field from values on Γ₁ (indexed like
    /// [`Self::interface_vertices`]).
    pub fn extend(&self, w_interface: &[Vec3]) -> Result<VertexField> {
        let n = self.matrix.nrows();
        if w_interface.len() != self.interface.len() {
            return Err(Error::LengthMismatch { expected: self.interface.len(), got: w_interface.len() });
        }
        let mut out = VertexField::zeros(n);
        for (&v, w) in self.interface.iter().zip(w_interface) {
            out[v] = *w;
        }
        for c in 0..3 {
            let rhs: Vec<f64> = self
                .interior
                .iter()
                .map(|&i| -self.matrix.row(i).filter(|&(j, _)| self.is_interface[j]).map(|(j, a)| a * out[j][c]).sum::<f64>())
                .collect();
            let y = self.solve_interior(&rhs)?;
            for (&i, v) in self.interior.iter().zip(y) {
                out[i][c] = v;
            }
        }
        Ok(out)
    }

    /// Adjoint of [`Self::extend`]: maps a derivative over all volume
    /// vertices to the derivative with respect to the Γ₁ values.
    pub fn extend_transpose(&self, g: &VertexField) -> Result<Vec<Vec3>> {
        let mut out: Vec<Vec3> = self.interface.iter().map(|&v| g[v]).collect();
        let pos: std::collections::HashMap<usize, usize> =
            self.interface.iter().enumerate().map(|(s, &v)| (v, s)).collect();
        for c in 0..3 {
            let rhs: Vec<f64> = self.interior.iter().map(|&i| g[i][c]).collect();
            let y = self.solve_interior(&rhs)?;
            for (&i, yi) in self.interior.iter().zip(&y) {
                for (j, a) in self.matrix.row(i) {
                    if let Some(&s) = pos.get(&j) {
                        out[s][c] -= a * yi;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// [`VolumeExtension::extend`] in one call.
pub fn volume_extension(mesh: &TetMesh, w_interface: &[Vec3]) -> Result<VertexField> {
    VolumeExtension::new(mesh)?.extend(w_interface)
}

/// Synthetic measurements on the Γ₂ vertices of `mesh`, computed on
/// `true_mesh`, which must share the Γ₂ vertex positions, plus Gaussian noise
/// of standard deviation `sigma` on every Γ₂ value.
pub fn synthesize_data(
    true_mesh: &TetMesh,
    mesh: &TetMesh,
    alpha: f64,
    r: usize,
    sigma: f64,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    let truth = FemSystem::assemble(true_mesh, alpha, source_patches(true_mesh, r)?, r)?;
    let states = truth.solve_state(None)?;
    let src = true_mesh.tagged_vertices(BoundaryTag::Outer);
    let dst = mesh.tagged_vertices(BoundaryTag::Outer);
    if src.len() != dst.len() {
        return Err(Error::LengthMismatch { expected: dst.len(), got: src.len() });
    }
    let tol = 1e-9 * (1.0 + mesh.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max));
    let matches: Vec<usize> = dst
        .iter()
        .map(|&v| {
            let p = mesh.vertices()[v];
            src.iter()
                .copied()
                .min_by(|&a, &b| {
                    let da = (true_mesh.vertices()[a] - p).norm();
                    let db = (true_mesh.vertices()[b] - p).norm();
                    da.total_cmp(&db)
                })
                .filter(|&s| (true_mesh.vertices()[s] - p).norm() <= tol)
                .ok_or_else(|| Error::InvalidConfig(format!("Γ₂ vertex {v} has no counterpart on the reference mesh")))
        })
        .collect::<Result<_>>()?;
    let noise = Normal::new(0.0, sigma.max(0.0)).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(states
        .iter()
        .map(|u| {
            let mut z = vec![0.0; mesh.vertex_count()];
            for (&v, &s) in dst.iter().zip(&matches) {
                z[v] = u[s] + if sigma > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            }
            z
        })
        .collect())
}

/// Mean over experiments of `max_{Γ₂} z_i − min_{Γ₂} z_i`.
pub fn mean_data_range(mesh: &TetMesh, data: &[Vec<f64>]) -> f64 {
    let outer = mesh.tagged_vertices(BoundaryTag::Outer);
    data.iter()
        .map(|z| {
            let (lo, hi) = outer.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(z[v]), hi.max(z[v])));
            hi - lo
        })
        .sum::<f64>()
        / data.len() as f64
}

struct Evaluation {
    surface: Vec<Vec3>,
    mesh: TetMesh,
    system: FemSystem,
    states: Vec<Vec<f64>>,
    loss: f64,
}

/// The EIT data misfit as a function of the Γ₁ vertex positions.
///
/// A surface is mapped to a volume mesh by extending its displacement from
/// the last accepted Γ₁ into Ω. Trials whose volume mesh inverts a
/// tetrahedron or drops below the quality threshold fail with a geometric
/// error.
pub struct EitLoss {
    mesh: TetMesh,
    system: FemSystem,
    interface: Interface,
    extension: VolumeExtension,
    states: Vec<Vec<f64>>,
    adjoints: Option<Vec<Vec<f64>>>,
    cache: Option<Evaluation>,
    /// Number of forward solves performed, for diagnostics.
    pub solves: usize,
}

impl EitLoss {
    pub fn new(mesh: TetMesh, system: FemSystem) -> Result<Self> {
        let interface = extract_interface(&mesh)?;
        let extension = VolumeExtension::new(&mesh)?;
        if extension.interface_vertices() != interface.surface_to_volume.as_slice() {
            return Err(Error::InvalidConfig("interface vertex order mismatch".into()));
        }
        let states = system.solve_state(None)?;
        Ok(Self { mesh, system, interface, extension, states, adjoints: None, cache: None, solves: 1 })
    }

    /// Γ₁ of the accepted mesh, oriented out of Ω.
    pub fn interface_surface(&self) -> SurfaceMesh {
        self.interface.surface.with_vertices_unchecked(self.interface.gather(&self.mesh))
    }

    pub fn mesh(&self) -> &TetMesh {
        &self.mesh
    }

    pub fn system(&self) -> &FemSystem {
        &self.system
    }

    fn evaluate(&mut self, surface: &SurfaceMesh) -> Result<&Evaluation> {
        let hit = self.cache.as_ref().is_some_and(|c| c.surface == surface.vertices());
        if !hit {
            let current = self.interface.gather(&self.mesh);
            if surface.vertex_count() != current.len() {
                return Err(Error::LengthMismatch { expected: current.len(), got: surface.vertex_count() });
            }
            let w: Vec<Vec3> = surface.vertices().iter().zip(&current).map(|(a, b)| a - b).collect();
            let disp = self.extension.extend(&w)?;
            let moved = self.mesh.with_vertices(disp.displace(self.mesh.vertices(), 1.0))?;
            moved.check_quality()?;
            let system = self.system.reassemble(&moved)?;
            let states = system.solve_state(Some(&self.states))?;
            self.solves += 1;
            let loss = system.loss(&states);
            self.cache = Some(Evaluation { surface: surface.vertices().to_vec(), mesh: moved, system, states, loss });
        }
        Ok(self.cache.as_ref().unwrap())
    }
}

impl LossModel for EitLoss {
    fn value(&mut self, mesh: &SurfaceMesh) -> Result<f64> {
        Ok(self.evaluate(mesh)?.loss)
    }

    fn gradient(&mut self, mesh: &SurfaceMesh) -> Result<VertexField> {
        self.evaluate(mesh)?;
        let eval = self.cache.as_ref().unwrap();
        let adjoints = eval.system.solve_adjoint(&eval.states, self.adjoints.as_deref())?;
        let full = loss_shape_derivative(&eval.system, &eval.mesh, &eval.states, &adjoints)?;
        self.adjoints = Some(adjoints);
        Ok(VertexField(self.extension.extend_transpose(&full)?))
    }

    fn accept(&mut self, mesh: &SurfaceMesh) -> Result<()> {
        self.evaluate(mesh)?;
        let eval = self.cache.take().unwrap();
        self.extension = VolumeExtension::new(&eval.mesh)?;
        self.mesh = eval.mesh;
        self.system = eval.system;
        self.states = eval.states;
        Ok(())
    }
}
