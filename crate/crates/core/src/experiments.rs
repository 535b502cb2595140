//! Experiment drivers shared by the command-line tool and the acceptance
//! suite: the polyhedron table, the sphere refinement table, stationarity
//! residuals, mesh denoising and the EIT inclusion detection.

use std::f64::consts::PI;

use crate::bregman::{
    gradient_descent, run_with_observer, AreaRegularized, Armijo, BregmanConfig, DenoiseLoss, DescentConfig, History,
    LossModel, RunResult, Status,
};
use crate::fem::{mean_data_range, source_patches, synthesize_data, EitLoss, FemSystem};
use crate::functionals::{
    dihedral_angles, dtv, flat_edge_fraction, lagrangian_gradient, sphere_reference_tv, surface_area, vertex_rmse,
    DenoiseProblem,
};
use crate::mesh::distance::hausdorff_distance;
use crate::mesh::{add_vertex_noise, generate};
use crate::{Result, SurfaceMesh, Vec3};

/// Angles below this count as zero when listing contributing edges.
const ZERO_ANGLE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct PolyhedronRow {
    pub name: &'static str,
    /// Length of the edges with non-zero dihedral angle.
    pub edge_length: f64,
    pub contributing_edges: usize,
    pub zero_angle_edges: usize,
    pub angle: f64,
    pub dtv: f64,
    pub expected: f64,
}

impl PolyhedronRow {
    pub fn rel_error(&self) -> f64 {
        (self.dtv - self.expected).abs() / self.expected
    }
}

fn polyhedron_row(name: &'static str, mesh: &SurfaceMesh, expected: f64) -> PolyhedronRow {
    let angles = dihedral_angles(mesh);
    let first = angles.iter().position(|&a| a > ZERO_ANGLE).unwrap_or(0);
    PolyhedronRow {
        name,
        edge_length: mesh.edge_length(first),
        contributing_edges: angles.iter().filter(|&&a| a > ZERO_ANGLE).count(),
        zero_angle_edges: angles.iter().filter(|&&a| a <= ZERO_ANGLE).count(),
        angle: angles[first],
        dtv: dtv(mesh).value,
        expected,
    }
}

/// Unit cube with crossed diagonals, and the regular tetrahedron and
/// icosahedron of the same area.
pub fn polyhedron_table() -> Vec<PolyhedronRow> {
    vec![
        polyhedron_row("cube", &generate::cube_crossed_diagonals(1.0), 6.0 * PI),
        polyhedron_row("tetrahedron", &generate::scaled_to_area(&generate::regular_tetrahedron(1.0), 6.0), 21.3365),
        polyhedron_row("icosahedron", &generate::scaled_to_area(&generate::icosahedron(1.0), 6.0), 18.2218),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SphereRow {
    pub level: u32,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
    pub dtv: f64,
    pub ratio: f64,
}

/// Radius of the sphere with area 6.
pub fn unit_cube_area_radius() -> f64 {
    (3.0 / (2.0 * PI)).sqrt()
}

/// DTV of icospheres of area 6 relative to the smooth value `4√(3π)`.
pub fn sphere_table(levels: &[u32]) -> Vec<SphereRow> {
    levels
        .iter()
        .map(|&level| {
            let s = generate::icosphere(level, unit_cube_area_radius());
            let value = dtv(&s).value;
            SphereRow {
                level,
                vertices: s.vertex_count(),
                edges: s.edge_count(),
                faces: s.triangle_count(),
                dtv: value,
                ratio: value / sphere_reference_tv(),
            }
        })
        .collect()
}

/// Multiplier `−√3·arccos(√5/3)·(5√3/6)^{1/2}` of the area-6 icosahedron.
pub fn icosahedron_multiplier() -> f64 {
    -(3f64).sqrt() * ((5f64).sqrt() / 3.0).acos() * (5.0 * (3f64).sqrt() / 6.0).sqrt()
}

/// Homogeneity fixes the multiplier of any stationary point of
/// `DTV + μ·Area` at `μ = −DTV / (2·Area)`.
pub fn homogeneity_multiplier(mesh: &SurfaceMesh) -> f64 {
    -dtv(mesh).value / (2.0 * surface_area(mesh).value)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub icosahedron_mu: f64,
    pub icosahedron_residual: f64,
    pub cube_mu: f64,
    pub cube_residual: f64,
    /// Residual of the cube at `μ = −π√2/4`.
    pub cube_residual_alt: f64,
    pub perturbed_residual: f64,
}

/// ∞-norms of the cotangent Lagrangian gradient at the icosahedron and the
/// crossed-diagonal cube, plus a perturbed icosahedron as negative control.
pub fn stationarity(seed: u64) -> Result<StationarityReport> {
    let ico = generate::scaled_to_area(&generate::icosahedron(1.0), 6.0);
    let cube = generate::cube_crossed_diagonals(1.0);
    let icosahedron_mu = icosahedron_multiplier();
    let cube_mu = homogeneity_multiplier(&cube);
    let perturbed = add_vertex_noise(&ico, 1e-2, seed);
    Ok(StationarityReport {
        icosahedron_mu,
        icosahedron_residual: lagrangian_gradient(&ico, icosahedron_mu)?.max_norm(),
        cube_mu,
        cube_residual: lagrangian_gradient(&cube, cube_mu)?.max_norm(),
        cube_residual_alt: lagrangian_gradient(&cube, -PI * 2f64.sqrt() / 4.0)?.max_norm(),
        perturbed_residual: lagrangian_gradient(&perturbed, icosahedron_mu)?.max_norm(),
    })
}

/// Settings of the box denoising comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseSettings {
    pub cells: [usize; 3],
    /// Noise standard deviation relative to the average edge length.
    pub sigma: f64,
    pub seed: u64,
    pub betas: Vec<f64>,
    /// `λ = lambda_ratio · β`
    pub lambda_ratio: f64,
    pub gammas: Vec<f64>,
    pub inner_steps: usize,
    pub step0: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub h1_scale: Option<f64>,
}

impl Default for DenoiseSettings {
    fn default() -> Self {
        Self {
            cells: [10, 15, 20],
            sigma: 0.2,
            seed: 7,
            betas: vec![1e-2, 1e-3, 1e-4],
            lambda_ratio: 10.0,
            gammas: vec![0.02, 0.01, 0.005],
            inner_steps: 10,
            step0: 1.0,
            grad_tol: 1e-7,
            max_outer: 200,
            h1_scale: None,
        }
    }
}

#[derive(Debug)]
pub struct PriorRun {
    pub prior: &'static str,
    pub weight: f64,
    pub rmse: f64,
    pub result: RunResult,
}

#[derive(Debug)]
pub struct DenoiseReport {
    pub clean: SurfaceMesh,
    pub noisy: SurfaceMesh,
    pub initial: SurfaceMesh,
    pub noisy_rmse: f64,
    pub runs: Vec<PriorRun>,
}

impl DenoiseReport {
    pub fn best(&self, prior: &str) -> Option<&PriorRun> {
        self.runs.iter().filter(|r| r.prior == prior).min_by(|a, b| a.rmse.total_cmp(&b.rmse))
    }
}

/// Box `(−1,1)×(−1.5,1.5)×(−2,2)`, noise along vertex normals, a sphere of the
/// same area and connectivity as the initial guess.
pub fn denoise_inputs(settings: &DenoiseSettings) -> (SurfaceMesh, SurfaceMesh, SurfaceMesh) {
    let clean = generate::box_surface(Vec3::new(-1.0, -1.5, -2.0), Vec3::new(1.0, 1.5, 2.0), settings.cells);
    let noisy = add_vertex_noise(&clean, settings.sigma, settings.seed);
    let radius = (surface_area(&clean).value / (4.0 * PI)).sqrt();
    let initial = generate::project_to_sphere(&clean, radius);
    (clean, noisy, initial)
}

/// One split Bregman run per β and one gradient-descent run per γ.
pub fn denoise(settings: &DenoiseSettings) -> Result<DenoiseReport> {
    let (clean, noisy, initial) = denoise_inputs(settings);
    let mut runs = Vec::new();
    for &beta in &settings.betas {
        let config = BregmanConfig {
            beta,
            lambda: settings.lambda_ratio * beta,
            inner_steps: settings.inner_steps,
            step0: settings.step0,
            grad_tol: settings.grad_tol,
            max_outer: settings.max_outer,
            h1_scale: settings.h1_scale,
            armijo: Armijo::default(),
        };
        let mut loss = DenoiseLoss { problem: DenoiseProblem::new(noisy.vertices().to_vec(), beta)? };
        let result = run_with_observer(&initial, &config, &mut loss, &mut |_, _| {})?;
        runs.push(PriorRun { prior: "dtv", weight: beta, rmse: vertex_rmse(result.mesh.vertices(), clean.vertices()), result });
    }
    for &gamma in &settings.gammas {
        let config = DescentConfig {
            step0: settings.step0,
            grad_tol: settings.grad_tol,
            max_iter: settings.max_outer * settings.inner_steps,
            h1_scale: settings.h1_scale,
            armijo: Armijo::default(),
        };
        let mut loss = AreaRegularized {
            inner: DenoiseLoss { problem: DenoiseProblem::new(noisy.vertices().to_vec(), gamma)? },
            gamma,
        };
        let result = gradient_descent(&initial, &config, &mut loss, settings.inner_steps)?;
        runs.push(PriorRun { prior: "area", weight: gamma, rmse: vertex_rmse(result.mesh.vertices(), clean.vertices()), result });
    }
    let noisy_rmse = vertex_rmse(noisy.vertices(), clean.vertices());
    Ok(DenoiseReport { clean, noisy, initial, noisy_rmse, runs })
}

/// Which shape prior an EIT run uses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EitPrior {
    /// Split Bregman with weight `β` on the total variation of the normal.
    Dtv { beta: f64, lambda: f64 },
    /// Gradient descent with weight `γ` on the surface area.
    Area { gamma: f64 },
}

/// Settings of the EIT inclusion detection at desk scale.
#[derive(Debug, Clone, PartialEq)]
pub struct EitSettings {
    /// Icosphere level of the Γ₁/Γ₂ triangulation.
    pub level: u32,
    /// Edge snapping distance of [`generate::cube_fitted_icosphere`].
    pub snap: f64,
    /// Radial layers of the inversion mesh; the data mesh uses twice as many.
    pub layers: usize,
    pub initial_radius: f64,
    pub cube_half: f64,
    pub r: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub seed: u64,
    pub prior: EitPrior,
    pub inner_steps: usize,
    pub step0: f64,
    pub step_growth: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub h1_scale: Option<f64>,
    /// Barycentric subdivisions per triangle when sampling for Hausdorff
    /// distances.
    pub hausdorff_samples: usize,
}

impl Default for EitSettings {
    fn default() -> Self {
        Self {
            level: 3,
            snap: 0.15,
            layers: 7,
            initial_radius: 0.5,
            cube_half: 0.4,
            r: 48,
            alpha: 1e-5,
            sigma: 0.0,
            seed: 1,
            prior: EitPrior::Dtv { beta: 1e-6, lambda: 1e-5 },
            inner_steps: 3,
            step0: 1e3,
            step_growth: 4.0,
            grad_tol: 1e-7,
            max_outer: 60,
            h1_scale: Some(1e-2),
            hausdorff_samples: 3,
        }
    }
}

/// Everything needed to run an inversion: the loss on the inversion mesh,
/// the initial Γ₁ (oriented out of Ω), the discrete true inclusion and the
/// exact cube.
pub struct EitProblem {
    pub loss: EitLoss,
    pub initial: SurfaceMesh,
    pub truth: SurfaceMesh,
    pub cube: SurfaceMesh,
    pub data_range: f64,
    pub vertex_count: usize,
}

/// Builds the inversion and data meshes, synthesizes the measurements and
/// sets up the loss.
pub fn eit_problem(settings: &EitSettings) -> Result<EitProblem> {
    let base = generate::cube_fitted_icosphere(settings.level, settings.snap);
    let truth = generate::project_to_cube(&base, settings.cube_half);
    let true_mesh = generate::shell_tet_mesh(&truth, 2 * settings.layers);
    let mesh = generate::shell_tet_mesh(&generate::project_to_sphere(&base, settings.initial_radius), settings.layers);
    let mut system = FemSystem::assemble(&mesh, settings.alpha, source_patches(&mesh, settings.r)?, settings.r)?;
    system.data = synthesize_data(&true_mesh, &mesh, settings.alpha, settings.r, settings.sigma, settings.seed)?;
    let data_range = mean_data_range(&mesh, &system.data);
    let vertex_count = mesh.vertex_count();
    let loss = EitLoss::new(mesh, system)?;
    let initial = loss.interface_surface();
    let n = 4 * settings.level.max(1) as usize;
    let cube = generate::cube_grid(n, settings.cube_half);
    Ok(EitProblem { loss, initial, truth, cube, data_range, vertex_count })
}

#[derive(Debug)]
pub struct EitReport {
    pub vertex_count: usize,
    /// Γ₁ at the start of the run.
    pub initial: SurfaceMesh,
    pub data_range: f64,
    /// Hausdorff distance of the discrete true inclusion to the exact cube.
    pub truth_hausdorff: f64,
    pub initial_hausdorff: f64,
    pub final_hausdorff: f64,
    pub initial_flat: f64,
    pub final_flat: f64,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub solves: usize,
    pub result: RunResult,
}

impl EitReport {
    pub fn history(&self) -> &History {
        &self.result.history
    }

    pub fn status(&self) -> &Status {
        &self.result.status
    }
}

/// Edges with dihedral angle below this count as flat.
pub const FLAT_ANGLE: f64 = 0.05;

/// Runs the inversion with the configured prior. `observer(k, Γ₁)` is called
/// after every outer iteration of the split Bregman run.
pub fn eit(settings: &EitSettings, observer: &mut dyn FnMut(usize, &SurfaceMesh)) -> Result<EitReport> {
    let EitProblem { mut loss, initial, truth, cube, data_range, vertex_count } = eit_problem(settings)?;
    let k = settings.hausdorff_samples;
    let initial_loss = loss.value(&initial)?;
    let armijo = Armijo { growth: settings.step_growth, ..Armijo::default() };
    let (result, solves, final_loss) = match settings.prior {
        EitPrior::Dtv { beta, lambda } => {
            let config = BregmanConfig {
                beta,
                lambda,
                inner_steps: settings.inner_steps,
                step0: settings.step0,
                grad_tol: settings.grad_tol,
                max_outer: settings.max_outer,
                h1_scale: settings.h1_scale,
                armijo,
            };
            let result = run_with_observer(&initial, &config, &mut loss, observer)?;
            let final_loss = loss.value(&result.mesh)?;
            (result, loss.solves, final_loss)
        }
        EitPrior::Area { gamma } => {
            let config = DescentConfig {
                step0: settings.step0,
                grad_tol: settings.grad_tol,
                max_iter: settings.max_outer * settings.inner_steps,
                h1_scale: settings.h1_scale,
                armijo,
            };
            let mut area = AreaRegularized { inner: loss, gamma };
            let result = gradient_descent(&initial, &config, &mut area, settings.inner_steps)?;
            let final_loss = area.inner.value(&result.mesh)?;
            (result, area.inner.solves, final_loss)
        }
    };
    Ok(EitReport {
        vertex_count,
        data_range,
        truth_hausdorff: hausdorff_distance(&truth, &cube, k),
        initial_hausdorff: hausdorff_distance(&initial, &cube, k),
        final_hausdorff: hausdorff_distance(&result.mesh, &cube, k),
        initial_flat: flat_edge_fraction(&initial, FLAT_ANGLE),
        final_flat: flat_edge_fraction(&result.mesh, FLAT_ANGLE),
        initial_loss,
        final_loss,
        solves,
        result,
        initial,
    })
}
