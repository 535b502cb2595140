//! Riemannian split Bregman iteration for `ℓ(Γ) + β·DTV(Γ)` and a plain
//! Armijo gradient-descent driver for smooth objectives.
//!
//! Each edge carries a splitting variable `d_E` and a multiplier `b_E` in the
//! tangent plane of `S²` at `n_E⁺`. One outer iteration performs a few
//! descent steps on the vertex positions, transports `b` to the new normals,
//! then updates `d` by vectorial shrinkage and `b` by the splitting residual.

use std::fmt::Write as _;

use log::{debug, info, warn};

use crate::functionals::{self, denoise_loss, DenoiseProblem};
use crate::mesh::SurfaceMesh;
use crate::shapegrad::{penalty_gradient, penalty_value, SurfaceOperatorCache};
use crate::{s2, Error, Result, TangentVector, Vec3, VertexField};

/// A smooth data term `ℓ` of the surface vertex positions.
///
/// `gradient` returns the Euclidean derivative with respect to the vertex
/// coordinates. `accept` is called once a trial mesh becomes the new iterate,
/// so that implementations can keep state tied to the current geometry.
pub trait LossModel {
    fn value(&mut self, mesh: &SurfaceMesh) -> Result<f64>;
    fn gradient(&mut self, mesh: &SurfaceMesh) -> Result<VertexField>;
    fn accept(&mut self, _mesh: &SurfaceMesh) -> Result<()> {
        Ok(())
    }
}

/// `½ Σ_V |x_V − x̃_V|²`
#[derive(Debug, Clone)]
pub struct DenoiseLoss {
    pub problem: DenoiseProblem,
}

impl LossModel for DenoiseLoss {
    fn value(&mut self, mesh: &SurfaceMesh) -> Result<f64> {
        Ok(denoise_loss(mesh, &self.problem)?.0)
    }

    fn gradient(&mut self, mesh: &SurfaceMesh) -> Result<VertexField> {
        Ok(denoise_loss(mesh, &self.problem)?.1)
    }
}

/// `ℓ + γ·area`
pub struct AreaRegularized<L> {
    pub inner: L,
    pub gamma: f64,
}

impl<L: LossModel> LossModel for AreaRegularized<L> {
    fn value(&mut self, mesh: &SurfaceMesh) -> Result<f64> {
        Ok(self.inner.value(mesh)? + self.gamma * functionals::surface_area(mesh).value)
    }

    fn gradient(&mut self, mesh: &SurfaceMesh) -> Result<VertexField> {
        let mut g = self.inner.gradient(mesh)?;
        g.axpy(self.gamma, &functionals::area_gradient(mesh));
        Ok(g)
    }

    fn accept(&mut self, mesh: &SurfaceMesh) -> Result<()> {
        self.inner.accept(mesh)
    }
}

/// Backtracking line-search constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Armijo {
    pub sufficient_decrease: f64,
    pub factor: f64,
    pub max_backtracks: usize,
    /// When positive, each search starts at `min(step0, growth · t_prev)`
    /// with `t_prev` the last accepted step; otherwise at `step0`.
    pub growth: f64,
}

impl Default for Armijo {
    fn default() -> Self {
        Self { sufficient_decrease: 1e-4, factor: 0.5, max_backtracks: 30, growth: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BregmanConfig {
    pub beta: f64,
    pub lambda: f64,
    pub inner_steps: usize,
    pub step0: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    /// Stiffness weight of the H¹(Γ) product used to smooth the descent
    /// direction; `None` descends along the Euclidean gradient.
    pub h1_scale: Option<f64>,
    pub armijo: Armijo,
}

impl BregmanConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.beta >= 0.0) {
            return bad(format!("beta must be ≥ 0, got {}", self.beta));
        }
        if !(self.lambda > 0.0) {
            return bad(format!("lambda must be > 0, got {}", self.lambda));
        }
        if self.inner_steps == 0 {
            return bad("inner_steps must be ≥ 1".into());
        }
        if !(self.step0 > 0.0) {
            return bad(format!("step0 must be > 0, got {}", self.step0));
        }
        if !(self.grad_tol >= 0.0) {
            return bad(format!("grad_tol must be ≥ 0, got {}", self.grad_tol));
        }
        if let Some(s) = self.h1_scale {
            if !(s >= 0.0) {
                return bad(format!("h1_scale must be ≥ 0, got {s}"));
            }
        }
        let a = &self.armijo;
        if !(a.sufficient_decrease > 0.0 && a.sufficient_decrease < 1.0 && a.factor > 0.0 && a.factor < 1.0) {
            return bad("Armijo constants must lie in (0, 1)".into());
        }
        Ok(())
    }
}

/// Splitting variables and multipliers, one ambient 3-vector per edge, each
/// tangent to `S²` at the current `n_E⁺`.
#[derive(Debug, Clone, PartialEq)]
pub struct BregmanState {
    pub d: Vec<Vec3>,
    pub b: Vec<Vec3>,
    pub k: usize,
    /// Last accepted line-search step.
    pub step: Option<f64>,
}

impl BregmanState {
    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        Self { d: vec![Vec3::zeros(); mesh.edge_count()], b: vec![Vec3::zeros(); mesh.edge_count()], k: 0, step: None }
    }

    /// `d_E` as a tangent vector at `n_E⁺` of `mesh`.
    pub fn d_tangent(&self, mesh: &SurfaceMesh, e: usize) -> TangentVector {
        tangent_at(mesh, e, self.d[e])
    }

    pub fn b_tangent(&self, mesh: &SurfaceMesh, e: usize) -> TangentVector {
        tangent_at(mesh, e, self.b[e])
    }

    /// Largest `|d_E·n_E⁺|` or `|b_E·n_E⁺|` over all edges.
    pub fn tangency_error(&self, mesh: &SurfaceMesh) -> f64 {
        let n = mesh.facet_normals();
        mesh.edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| {
                let p = n[edge.facet_plus];
                self.d[e].dot(&p).abs().max(self.b[e].dot(&p).abs())
            })
            .fold(0.0, f64::max)
    }
}

fn tangent_at(mesh: &SurfaceMesh, e: usize, v: Vec3) -> TangentVector {
    let [a, b, c] = mesh.triangles()[mesh.edges()[e].facet_plus];
    let x = mesh.vertices();
    let n = crate::SpherePoint::new((x[b] - x[a]).cross(&(x[c] - x[a]))).expect("non-degenerate facet");
    TangentVector { base: n, vec: v }
}

/// `log_{n⁺}(n⁻)` per edge.
pub fn edge_logs(mesh: &SurfaceMesh) -> Result<Vec<Vec3>> {
    let n = mesh.facet_normals();
    mesh.edges().iter().map(|e| s2::log_vec(&n[e.facet_plus], &n[e.facet_minus])).collect()
}

/// `max(|v| − κ, 0)·v/|v|`
pub fn shrink_vec(v: &Vec3, kappa: f64) -> Vec3 {
    let norm = v.norm();
    if norm <= kappa {
        Vec3::zeros()
    } else {
        v * ((norm - kappa) / norm)
    }
}

pub fn shrink(v: &TangentVector, kappa: f64) -> TangentVector {
    TangentVector { base: v.base, vec: shrink_vec(&v.vec, kappa) }
}

/// `ℓ + β Σ|d_E||E| + (λ/2) Σ|E||d_E − log_{n⁺}(n⁻) − b_E|²`
pub fn augmented_lagrangian(
    mesh: &SurfaceMesh,
    state: &BregmanState,
    config: &BregmanConfig,
    loss: &mut dyn LossModel,
) -> Result<f64> {
    Ok(loss.value(mesh)? + penalty_value(mesh, &state.d, &state.b, config.beta, config.lambda)?)
}

/// `d_E := shrink(log_{n⁺}(n⁻) + b_E, β/λ)`
pub fn d_update(mesh: &SurfaceMesh, state: &mut BregmanState, config: &BregmanConfig) -> Result<()> {
    let kappa = config.beta / config.lambda;
    for (e, log) in edge_logs(mesh)?.into_iter().enumerate() {
        state.d[e] = shrink_vec(&(log + state.b[e]), kappa);
    }
    Ok(())
}

/// `b_E += log_{n⁺}(n⁻) − d_E`
pub fn b_update(mesh: &SurfaceMesh, state: &mut BregmanState) -> Result<()> {
    for (e, log) in edge_logs(mesh)?.into_iter().enumerate() {
        state.b[e] += log - state.d[e];
    }
    Ok(())
}

/// Moves every `b_E` from the tangent plane at the old `n_E⁺` to the one at
/// the new `n_E⁺`. `d` is left alone; it is recomputed by [`d_update`].
pub fn transport_state(old: &SurfaceMesh, new: &SurfaceMesh, state: &mut BregmanState) -> Result<()> {
    if !old.shares_topology(new) && old.edges() != new.edges() {
        return Err(Error::InvalidConfig("transport between meshes of different connectivity".into()));
    }
    let n_old = old.facet_normals();
    let n_new = new.facet_normals();
    for (e, edge) in old.edges().iter().enumerate() {
        let (p, q) = (n_old[edge.facet_plus], n_new[edge.facet_plus]);
        state.b[e] = s2::transport_vec(&p, &q, &state.b[e]).map_err(|_| Error::Antipodal {
            context: format!("normal of facet {} flipped during the shape step (edge {e})", edge.facet_plus),
        })?;
    }
    Ok(())
}

/// Outcome of one Armijo descent sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct DescentReport {
    /// `√⟨G, W⟩` at the first iterate, where `W` is the descent field for `G`.
    pub initial_grad_norm: f64,
    pub accepted_steps: usize,
    /// Line searches that exhausted their backtracks.
    pub failed_searches: usize,
    pub values: Vec<f64>,
}

struct Objective<'a> {
    loss: &'a mut dyn LossModel,
    d: &'a [Vec3],
    b: &'a [Vec3],
    beta: f64,
    lambda: f64,
    splitting: bool,
}

impl Objective<'_> {
    fn value(&mut self, mesh: &SurfaceMesh) -> Result<f64> {
        let mut v = self.loss.value(mesh)?;
        if self.splitting {
            v += penalty_value(mesh, self.d, self.b, self.beta, self.lambda)?;
        }
        Ok(v)
    }

    fn gradient(&mut self, mesh: &SurfaceMesh) -> Result<VertexField> {
        let mut g = self.loss.gradient(mesh)?;
        if self.splitting {
            g.axpy(1.0, &penalty_gradient(mesh, self.d, self.b, self.beta, self.lambda)?);
        }
        Ok(g)
    }
}

/// Runs `steps` Armijo steps along the (optionally H¹-smoothed) negative
/// gradient. A trial that yields invalid geometry counts as rejected.
fn descend(
    mesh: &mut SurfaceMesh,
    obj: &mut Objective<'_>,
    steps: usize,
    step0: f64,
    h1_scale: Option<f64>,
    armijo: &Armijo,
    grad_tol: f64,
    last_step: &mut Option<f64>,
) -> Result<DescentReport> {
    let mut value = obj.value(mesh)?;
    let mut report = DescentReport { initial_grad_norm: f64::NAN, accepted_steps: 0, failed_searches: 0, values: vec![value] };
    for step in 0..steps {
        let g = obj.gradient(mesh)?;
        let w = match h1_scale {
            Some(s) => SurfaceOperatorCache::assemble(mesh, s)?.solve(&g)?,
            None => g.clone(),
        };
        let slope = g.dot(&w).max(0.0);
        if step == 0 {
            report.initial_grad_norm = slope.sqrt();
            if report.initial_grad_norm < grad_tol {
                break;
            }
        }
        if slope == 0.0 {
            break;
        }
        let mut t = match *last_step {
            Some(prev) if armijo.growth > 0.0 => step0.min(armijo.growth * prev),
            _ => step0,
        };
        let mut accepted = None;
        for _ in 0..=armijo.max_backtracks {
            match mesh.with_vertices(w.displace(mesh.vertices(), -t)) {
                Ok(trial) => match obj.value(&trial) {
                    Ok(v) if v <= value - armijo.sufficient_decrease * t * slope => {
                        accepted = Some((trial, v));
                        break;
                    }
                    Ok(_) => {}
                    Err(e) if e.is_geometric() => {}
                    Err(e) => return Err(e),
                },
                Err(e) if e.is_geometric() => {}
                Err(e) => return Err(e),
            }
            t *= armijo.factor;
        }
        match accepted {
            Some((trial, v)) => {
                obj.loss.accept(&trial)?;
                *mesh = trial;
                value = v;
                *last_step = Some(t);
                report.values.push(v);
                report.accepted_steps += 1;
                debug!("descent step {step}: t = {t:e}, value = {v:e}");
            }
            None => {
                report.failed_searches += 1;
                warn!("Armijo search exhausted after {} backtracks", armijo.max_backtracks);
                break;
            }
        }
    }
    Ok(report)
}

/// Inner descent on `Γ ↦ L(Γ, d, b)` at fixed `(d, b)`.
pub fn shape_substep(
    mesh: &mut SurfaceMesh,
    state: &mut BregmanState,
    config: &BregmanConfig,
    loss: &mut dyn LossModel,
) -> Result<DescentReport> {
    let mut step = state.step;
    let mut obj =
        Objective { loss, d: &state.d, b: &state.b, beta: config.beta, lambda: config.lambda, splitting: true };
    let report =
        descend(mesh, &mut obj, config.inner_steps, config.step0, config.h1_scale, &config.armijo, config.grad_tol, &mut step)?;
    state.step = step;
    Ok(report)
}

/// One row of the per-iteration history.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub k: usize,
    /// Augmented Lagrangian (or the objective for smooth descent).
    pub lagrangian: f64,
    pub loss: f64,
    pub dtv: f64,
    /// `Σ|E||log_{n⁺}(n⁻) − d_E|²`
    pub penalty_residual: f64,
    pub grad_norm: f64,
    pub step_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct History {
    pub rows: Vec<HistoryRow>,
}

impl History {
    pub const HEADER: &'static str = "k,L,loss,dtv,penalty_residual,grad_norm,step_count";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{}",
                r.k, r.lagrangian, r.loss, r.dtv, r.penalty_residual, r.grad_norm, r.step_count
            )
            .unwrap();
        }
        s
    }
}

#[derive(Debug)]
pub enum Status {
    Converged,
    MaxIterations,
    /// The run stopped on an error; the mesh is the last accepted iterate.
    Aborted(Error),
}

#[derive(Debug)]
pub struct RunResult {
    pub mesh: SurfaceMesh,
    pub state: BregmanState,
    pub history: History,
    pub status: Status,
}

/// `Σ|E||log_{n⁺}(n⁻) − d_E|²`
pub fn penalty_residual(mesh: &SurfaceMesh, state: &BregmanState) -> Result<f64> {
    Ok(edge_logs(mesh)?
        .iter()
        .enumerate()
        .map(|(e, log)| mesh.edge_length(e) * (log - state.d[e]).norm_squared())
        .sum())
}

/// Split Bregman iteration from `d = b = 0`.
pub fn run(initial: &SurfaceMesh, config: &BregmanConfig, loss: &mut dyn LossModel) -> Result<RunResult> {
    run_with_observer(initial, config, loss, &mut |_, _| {})
}

/// [`run`], calling `observer(k, mesh)` after every outer iteration.
pub fn run_with_observer(
    initial: &SurfaceMesh,
    config: &BregmanConfig,
    loss: &mut dyn LossModel,
    observer: &mut dyn FnMut(usize, &SurfaceMesh),
) -> Result<RunResult> {
    config.validate()?;
    let mut mesh = initial.clone();
    let mut state = BregmanState::zeros(&mesh);
    let mut history = History::default();
    let status = loop {
        if state.k >= config.max_outer {
            break Status::MaxIterations;
        }
        match outer_iteration(&mut mesh, &mut state, config, loss) {
            Ok((row, converged)) => {
                info!(
                    "outer {}: L = {:e}, loss = {:e}, dtv = {:e}, residual = {:e}, |g| = {:e}, steps = {}",
                    row.k, row.lagrangian, row.loss, row.dtv, row.penalty_residual, row.grad_norm, row.step_count
                );
                history.rows.push(row);
                observer(state.k, &mesh);
                if converged {
                    break Status::Converged;
                }
            }
            Err(e) => {
                warn!("split Bregman aborted at outer iteration {}: {e}", state.k);
                break Status::Aborted(e);
            }
        }
    };
    Ok(RunResult { mesh, state, history, status })
}

fn outer_iteration(
    mesh: &mut SurfaceMesh,
    state: &mut BregmanState,
    config: &BregmanConfig,
    loss: &mut dyn LossModel,
) -> Result<(HistoryRow, bool)> {
    let old = mesh.clone();
    let mut trial = mesh.clone();
    let mut next = state.clone();
    let report = shape_substep(&mut trial, &mut next, config, loss)?;
    let converged = report.initial_grad_norm < config.grad_tol;
    if !converged {
        transport_state(&old, &trial, &mut next)?;
        d_update(&trial, &mut next, config)?;
        b_update(&trial, &mut next)?;
        next.k += 1;
    }
    let loss_value = loss.value(&trial)?;
    let row = HistoryRow {
        k: next.k,
        lagrangian: loss_value + penalty_value(&trial, &next.d, &next.b, config.beta, config.lambda)?,
        loss: loss_value,
        dtv: functionals::dtv(&trial).value,
        penalty_residual: penalty_residual(&trial, &next)?,
        grad_norm: report.initial_grad_norm,
        step_count: report.accepted_steps,
    };
    *mesh = trial;
    *state = next;
    Ok((row, converged))
}

/// Settings for [`gradient_descent`].
#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub step0: f64,
    pub grad_tol: f64,
    pub max_iter: usize,
    pub h1_scale: Option<f64>,
    pub armijo: Armijo,
}

/// Armijo gradient descent on a smooth objective. History rows are written
/// every `record_every` steps with `penalty_residual = 0`.
pub fn gradient_descent(
    initial: &SurfaceMesh,
    config: &DescentConfig,
    loss: &mut dyn LossModel,
    record_every: usize,
) -> Result<RunResult> {
    if !(config.step0 > 0.0) || record_every == 0 {
        return Err(Error::InvalidConfig("step0 must be > 0 and record_every ≥ 1".into()));
    }
    let mut mesh = initial.clone();
    let mut history = History::default();
    let mut it = 0;
    let mut step = None;
    let status = loop {
        if it >= config.max_iter {
            break Status::MaxIterations;
        }
        let chunk = record_every.min(config.max_iter - it);
        let mut obj = Objective { loss: &mut *loss, d: &[], b: &[], beta: 0.0, lambda: 0.0, splitting: false };
        match descend(&mut mesh, &mut obj, chunk, config.step0, config.h1_scale, &config.armijo, config.grad_tol, &mut step) {
            Ok(report) => {
                it += chunk;
                let value = *report.values.last().unwrap();
                history.rows.push(HistoryRow {
                    k: it,
                    lagrangian: value,
                    loss: value,
                    dtv: functionals::dtv(&mesh).value,
                    penalty_residual: 0.0,
                    grad_norm: report.initial_grad_norm,
                    step_count: report.accepted_steps,
                });
                if report.initial_grad_norm < config.grad_tol {
                    break Status::Converged;
                }
                if report.accepted_steps == 0 {
                    break Status::Aborted(Error::InvalidConfig("line search made no progress".into()));
                }
            }
            Err(e) => break Status::Aborted(e),
        }
    };
    Ok(RunResult { state: BregmanState::zeros(&mesh), mesh, history, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{add_vertex_noise, generate};

    fn config(beta: f64, lambda: f64) -> BregmanConfig {
        BregmanConfig {
            beta,
            lambda,
            inner_steps: 10,
            step0: 1.0,
            grad_tol: 1e-9,
            max_outer: 50,
            h1_scale: None,
            armijo: Armijo::default(),
        }
    }

    #[test]
    fn shrink_examples() {
        let u = Vec3::new(0.0, 0.6, 0.8);
        assert_eq!(shrink_vec(&(u * 0.5), 1.0), Vec3::zeros());
        assert_eq!(shrink_vec(&Vec3::zeros(), 0.0), Vec3::zeros());
        assert_eq!(shrink_vec(&(u * 3.0), 0.0), u * 3.0);
        assert!((shrink_vec(&(u * 3.0), 1.0) - u * 2.0).norm() < 1e-15);
    }

    #[test]
    fn lagrangian_reduces_to_scaled_dtv() {
        let mesh = generate::icosphere(1, 1.0);
        let mut state = BregmanState::zeros(&mesh);
        state.d = edge_logs(&mesh).unwrap();
        let cfg = config(0.7, 3.0);
        let mut zero = DenoiseLoss { problem: DenoiseProblem::new(mesh.vertices().to_vec(), 0.7).unwrap() };
        let l = augmented_lagrangian(&mesh, &state, &cfg, &mut zero).unwrap();
        assert!((l - 0.7 * functionals::dtv(&mesh).value).abs() < 1e-12);
    }

    #[test]
    fn d_update_dead_zone_and_hinge() {
        let mesh = generate::icosphere(1, 1.0);
        let max_theta = edge_logs(&mesh).unwrap().iter().map(|l| l.norm()).fold(0.0, f64::max);
        let mut state = BregmanState::zeros(&mesh);
        d_update(&mesh, &mut state, &config(max_theta * 1.01, 1.0)).unwrap();
        assert!(state.d.iter().all(|d| *d == Vec3::zeros()));

        let logs = edge_logs(&mesh).unwrap();
        let theta = logs[0].norm();
        let cfg = config(theta / 2.0, 1.0);
        d_update(&mesh, &mut state, &cfg).unwrap();
        assert!((state.d[0].norm() - theta / 2.0).abs() < 1e-14);
        assert!((state.d[0].normalize() - logs[0].normalize()).norm() < 1e-14);
    }

    #[test]
    fn b_update_examples() {
        let mesh = generate::icosphere(1, 1.0);
        let logs = edge_logs(&mesh).unwrap();
        let mut state = BregmanState::zeros(&mesh);
        state.d = logs.clone();
        b_update(&mesh, &mut state).unwrap();
        assert!(state.b.iter().all(|b| *b == Vec3::zeros()));
        state.d = vec![Vec3::zeros(); mesh.edge_count()];
        b_update(&mesh, &mut state).unwrap();
        assert_eq!(state.b, logs);
        assert!(state.tangency_error(&mesh) < 1e-8);
    }

    #[test]
    fn transport_keeps_norms_and_tangency() {
        let mesh = generate::icosphere(1, 1.0);
        let moved = add_vertex_noise(&mesh, 0.1, 2);
        let mut state = BregmanState::zeros(&mesh);
        state.b = edge_logs(&mesh).unwrap();
        let before: Vec<f64> = state.b.iter().map(|b| b.norm()).collect();
        let mut same = state.clone();
        transport_state(&mesh, &mesh, &mut same).unwrap();
        for (a, b) in same.b.iter().zip(&state.b) {
            assert!((a - b).norm() < 1e-15);
        }
        transport_state(&mesh, &moved, &mut state).unwrap();
        for (b, n) in state.b.iter().zip(before) {
            assert!((b.norm() - n).abs() < 1e-14);
        }
        state.d = vec![Vec3::zeros(); mesh.edge_count()];
        assert!(state.tangency_error(&moved) < 1e-12);
    }

    #[test]
    fn zero_gradient_leaves_mesh_unchanged() {
        let mesh = generate::icosphere(1, 1.0);
        let mut loss = DenoiseLoss { problem: DenoiseProblem::new(mesh.vertices().to_vec(), 0.0).unwrap() };
        let cfg = config(0.0, 1.0);
        let mut state = BregmanState::zeros(&mesh);
        state.d = edge_logs(&mesh).unwrap();
        let mut m = mesh.clone();
        let report = shape_substep(&mut m, &mut state, &cfg, &mut loss).unwrap();
        assert_eq!(report.accepted_steps, 0);
        assert_eq!(m.vertices(), mesh.vertices());
    }

    #[test]
    fn descent_values_never_increase() {
        let clean = generate::icosphere(2, 1.0);
        let noisy = add_vertex_noise(&clean, 0.2, 1);
        let mut loss = DenoiseLoss { problem: DenoiseProblem::new(noisy.vertices().to_vec(), 0.0).unwrap() };
        let cfg = config(0.01, 0.1);
        let mut m = clean.clone();
        let report = shape_substep(&mut m, &mut BregmanState::zeros(&clean), &cfg, &mut loss).unwrap();
        assert!(report.accepted_steps > 0);
        for w in report.values.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn history_csv_layout() {
        let h = History {
            rows: vec![HistoryRow {
                k: 1,
                lagrangian: 0.5,
                loss: 0.25,
                dtv: 3.0,
                penalty_residual: 1e-3,
                grad_norm: 2.0,
                step_count: 10,
            }],
        };
        assert_eq!(h.to_csv(), "k,L,loss,dtv,penalty_residual,grad_norm,step_count\n1,5e-1,2.5e-1,3e0,1e-3,2e0,10\n");
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(config(-1.0, 1.0).validate().is_err());
        assert!(config(1.0, 0.0).validate().is_err());
        let mut c = config(1.0, 1.0);
        c.inner_steps = 0;
        assert!(c.validate().is_err());
    }
}
