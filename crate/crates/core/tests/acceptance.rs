//! Acceptance suite. Prints one `PASS`/`FAIL` line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset by passing criterion ids, e.g.
//! `cargo test --release -p ntv-core --test acceptance -- 1 4 6a`.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use ntv_core::bregman::{d_update, Armijo, BregmanConfig, BregmanState, LossModel};
use ntv_core::experiments::{
    denoise, eit, polyhedron_table, sphere_table, stationarity, DenoiseSettings, EitPrior, EitSettings,
};
use ntv_core::fem::{source_patches, synthesize_data, EitLoss, FemSystem};
use ntv_core::functionals::{flat_edge_fraction, sphere_reference_tv};
use ntv_core::mesh::{add_vertex_noise, generate};
use ntv_core::shapegrad::{penalty_gradient, penalty_value};
use ntv_core::{s2, Vec3, VertexField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
            StandardNormal.sample(rng),
        );
        if v.norm() > 1e-6 {
            return v.normalize();
        }
    }
}

/// Random vector of length up to `max` projected onto the plane normal to `n`.
fn tangent(rng: &mut ChaCha8Rng, n: &Vec3, max: f64) -> Vec3 {
    let v = unit_vector(rng) * rng.gen_range(0.0..max);
    v - n * n.dot(&v)
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> VertexField {
    VertexField((0..n).map(|_| unit_vector(rng)).collect())
}

fn polyhedra() -> Outcome {
    let rows = polyhedron_table();
    let cube = (rows[0].dtv - 6.0 * PI).abs();
    let tet = rows[1].rel_error();
    let ico = rows[2].rel_error();
    check(
        cube < 1e-12 && tet < 5e-4 && ico < 5e-4,
        format!("cube |err| {cube:.2e} (< 1e-12), tetrahedron rel {tet:.2e}, icosahedron rel {ico:.2e} (< 5e-4)"),
    )
}

fn spheres() -> Outcome {
    let rows = sphere_table(&[2, 3, 4, 5]);
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let finest = *ratios.last().unwrap();
    let all_in = ratios.iter().all(|r| (1.38..=1.43).contains(r));
    let list: Vec<String> = rows.iter().map(|r| format!("{}:{:.5}", r.faces, r.ratio)).collect();
    check(
        all_in && (1.405..=1.425).contains(&finest),
        format!("ratio by face count [{}] (all in [1.38, 1.43], finest in [1.405, 1.425])", list.join(", ")),
    )
}

fn stationary() -> Outcome {
    let r = stationarity(3).expect("stationarity");
    println!(
        "INFO 3   cube residual with mu = -pi*sqrt(2)/4: {:.4e}; homogeneity multiplier {:.6}",
        r.cube_residual_alt, r.cube_mu
    );
    check(
        r.icosahedron_residual < 1e-10 && r.cube_residual < 1e-10 && r.perturbed_residual > 1e-4,
        format!(
            "icosahedron {:.2e}, cube {:.2e} (< 1e-10), perturbed {:.2e} (> 1e-4)",
            r.icosahedron_residual, r.cube_residual, r.perturbed_residual
        ),
    )
}

/// Minimises `κ|d| + ½|d − v|²` over `d = s·v/|v|` by a 10⁴-point grid on
/// `s ∈ [−|v|, 2|v|]`, zoomed three times around the best point.
fn grid_minimizer(kappa: f64, v: &Vec3) -> Vec3 {
    let norm = v.norm();
    if norm == 0.0 {
        return Vec3::zeros();
    }
    let dir = v / norm;
    let f = |d: Vec3| kappa * d.norm() + 0.5 * (d - v).norm_squared();
    let (mut lo, mut hi) = (-norm, 2.0 * norm);
    let points = 10_000;
    let mut best = 0.0;
    for _ in 0..4 {
        let h = (hi - lo) / (points - 1) as f64;
        let mut best_val = f64::INFINITY;
        for i in 0..points {
            let s = lo + h * i as f64;
            let val = f(dir * s);
            if val < best_val {
                best_val = val;
                best = s;
            }
        }
        lo = best - h;
        hi = best + h;
    }
    dir * best
}

fn shrinkage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let mesh = add_vertex_noise(&generate::icosphere(2, 1.0), 0.1, 5);
    let normals = mesh.facet_normals();
    let mut worst = 0.0f64;
    let mut count = 0;
    while count < 1000 {
        let config = BregmanConfig {
            beta: 10f64.powf(rng.gen_range(-4.0..-1.0)),
            lambda: 10f64.powf(rng.gen_range(-2.0..0.0)),
            inner_steps: 1,
            step0: 1.0,
            grad_tol: 0.0,
            max_outer: 1,
            h1_scale: None,
            armijo: Armijo::default(),
        };
        let mut state = BregmanState::zeros(&mesh);
        for (e, edge) in mesh.edges().iter().enumerate() {
            state.b[e] = tangent(&mut rng, &normals[edge.facet_plus], 0.3);
        }
        d_update(&mesh, &mut state, &config).expect("d_update");
        let kappa = config.beta / config.lambda;
        for (e, edge) in mesh.edges().iter().enumerate() {
            let log = s2::log_vec(&normals[edge.facet_plus], &normals[edge.facet_minus]).unwrap();
            let oracle = grid_minimizer(kappa, &(log + state.b[e]));
            worst = worst.max((state.d[e] - oracle).norm());
            count += 1;
        }
    }
    check(worst < 1e-8, format!("{count} edges, max |d - grid minimiser| {worst:.2e} (< 1e-8)"))
}

/// Transport in the form `ξ − (ξ·v)/d²(v + log_m n)`, `v = log_n m`.
fn transport_oracle(n: &Vec3, m: &Vec3, xi: &Vec3) -> Vec3 {
    let v = s2::log_vec(n, m).unwrap();
    let d2 = v.norm_squared();
    if d2 == 0.0 {
        return *xi;
    }
    xi - (v + s2::log_vec(m, n).unwrap()) * (xi.dot(&v) / d2)
}

fn manifold_ops() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let samples = 100_000;
    let (mut round_trip, mut isometry, mut tangency, mut inverse, mut forms) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let n = unit_vector(&mut rng);
        let step = tangent(&mut rng, &n, 1.0).normalize() * rng.gen_range(0.0..0.95 * PI);
        let m = s2::exp_vec(&n, &step);
        round_trip = round_trip.max((s2::log_vec(&n, &m).unwrap() - step).norm());

        let xi = tangent(&mut rng, &n, 2.0);
        let t = s2::transport_vec(&n, &m, &xi).unwrap();
        isometry = isometry.max((t.norm() - xi.norm()).abs());
        tangency = tangency.max(t.dot(&m).abs());
        inverse = inverse.max((s2::transport_vec(&m, &n, &t).unwrap() - xi).norm());
        if step.norm() > 1e-6 {
            forms = forms.max((t - transport_oracle(&n, &m, &xi)).norm());
        }
    }
    let worst = round_trip.max(isometry).max(tangency).max(inverse).max(forms);
    check(
        worst < 1e-9,
        format!(
            "{samples} samples: round trip {round_trip:.1e}, isometry {isometry:.1e}, tangency {tangency:.1e}, inverse {inverse:.1e}, forms {forms:.1e} (< 1e-9)"
        ),
    )
}

fn penalty_fd() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for config in 0..20 {
        let base = if config % 2 == 0 { generate::icosphere(1, 1.0) } else { generate::cube_grid(2, 0.7) };
        let mesh = add_vertex_noise(&base, 0.1, 100 + config);
        let normals = mesh.facet_normals();
        let beta = rng.gen_range(0.0..1.0);
        let lambda = rng.gen_range(0.1..10.0);
        let (mut d, mut b) = (Vec::new(), Vec::new());
        for edge in mesh.edges() {
            let n = normals[edge.facet_plus];
            d.push(tangent(&mut rng, &n, 0.5));
            b.push(tangent(&mut rng, &n, 0.5));
        }
        let g = penalty_gradient(&mesh, &d, &b, beta, lambda).unwrap();
        let w = random_field(&mut rng, mesh.vertex_count());
        let h = 1e-6;
        let value = |s: f64| {
            let moved = mesh.with_vertices(w.displace(mesh.vertices(), s)).unwrap();
            penalty_value(&moved, &d, &b, beta, lambda).unwrap()
        };
        let fd = (value(h) - value(-h)) / (2.0 * h);
        let exact = g.dot(&w);
        worst = worst.max((fd - exact).abs() / exact.abs().max(1e-12));
    }
    check(worst < 1e-5, format!("20 configurations, max rel error {worst:.2e} (< 1e-5)"))
}

fn eit_fd() -> Outcome {
    let base = generate::cube_fitted_icosphere(3, 0.15);
    let layers = 6;
    let (alpha, r) = (1e-5, 48);
    let true_mesh = generate::shell_tet_mesh(&generate::project_to_cube(&base, 0.4), 2 * layers);
    let mesh = generate::shell_tet_mesh(&generate::project_to_sphere(&base, 0.5), layers);
    let vertices = mesh.vertex_count();
    let mut system = FemSystem::assemble(&mesh, alpha, source_patches(&mesh, r).unwrap(), r).unwrap();
    system.data = synthesize_data(&true_mesh, &mesh, alpha, r, 0.0, 1).unwrap();
    system.cg.rel_tol = 1e-14;
    let mut loss = EitLoss::new(mesh, system).unwrap();
    let surface = loss.interface_surface();
    let g = loss.gradient(&surface).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let w = random_field(&mut rng, surface.vertex_count());
        let mut value = |s: f64| loss.value(&surface.with_vertices(w.displace(surface.vertices(), s)).unwrap()).unwrap();
        let fd = (8.0 * (value(h) - value(-h)) - (value(2.0 * h) - value(-2.0 * h))) / (12.0 * h);
        let exact = g.dot(&w);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    check(
        vertices <= 5000 && worst < 1e-4,
        format!("{vertices} vertices, 5 directions, max rel error {worst:.2e} (< 1e-4)"),
    )
}

fn denoising() -> Outcome {
    let report = denoise(&DenoiseSettings::default()).expect("denoise");
    let dtv = report.best("dtv").unwrap();
    let area = report.best("area").unwrap();
    for run in &report.runs {
        println!("INFO 7   {} weight {:.0e}: rmse {:.5}", run.prior, run.weight, run.rmse);
    }
    check(
        dtv.rmse < report.noisy_rmse && dtv.rmse < area.rmse,
        format!(
            "best dtv rmse {:.5} (beta {:.0e}) < noisy {:.5} and < best area {:.5} (gamma {:.0e})",
            dtv.rmse, dtv.weight, report.noisy_rmse, area.rmse, area.weight
        ),
    )
}

fn eit_runs() -> Outcome {
    let settings = EitSettings::default();
    let dtv = eit(&settings, &mut |_, _| {}).expect("dtv run");
    let area_settings = EitSettings { prior: EitPrior::Area { gamma: 5e-5 }, ..EitSettings::default() };
    let area = eit(&area_settings, &mut |_, _| {}).expect("area run");
    println!(
        "INFO 8   {} vertices, data range {:.3}, discrete truth to cube {:.4}, dtv status {:?}, area status {:?}",
        dtv.vertex_count,
        dtv.data_range,
        dtv.truth_hausdorff,
        dtv.status(),
        area.status()
    );
    for tol in [0.005, 0.01, 0.02, 0.05] {
        println!(
            "INFO 8   edges with angle < {tol}: dtv {:.3}, area {:.3}, initial {:.3}",
            flat_edge_fraction(&dtv.result.mesh, tol),
            flat_edge_fraction(&area.result.mesh, tol),
            flat_edge_fraction(&dtv.initial, tol)
        );
    }
    println!("INFO 8   area run Hausdorff {:.4} -> {:.4}", area.initial_hausdorff, area.final_hausdorff);
    let reduction = dtv.initial_hausdorff / dtv.final_hausdorff;
    check(
        reduction >= 3.0 && dtv.final_flat >= 0.3 && area.final_flat < 0.05,
        format!(
            "Hausdorff {:.4} -> {:.4} ({reduction:.2}x, >= 3x); flat edges dtv {:.3} (>= 0.30), area {:.3} (< 0.05)",
            dtv.initial_hausdorff, dtv.final_hausdorff, dtv.final_flat, area.final_flat
        ),
    )
}

fn determinism() -> Outcome {
    let denoise_settings = DenoiseSettings {
        cells: [4, 5, 6],
        betas: vec![1e-3],
        gammas: vec![1e-2],
        max_outer: 20,
        ..DenoiseSettings::default()
    };
    let csvs = |s: &DenoiseSettings| -> Vec<String> {
        denoise(s).unwrap().runs.iter().map(|r| r.result.history.to_csv()).collect()
    };
    let eit_settings = EitSettings { level: 2, layers: 2, max_outer: 2, inner_steps: 2, r: 8, ..EitSettings::default() };
    let eit_csv = |s: &EitSettings| eit(s, &mut |_, _| {}).unwrap().history().to_csv();
    let same_denoise = csvs(&denoise_settings) == csvs(&denoise_settings);
    let same_eit = eit_csv(&eit_settings) == eit_csv(&eit_settings);
    check(same_denoise && same_eit, format!("denoise histories identical: {same_denoise}, EIT history identical: {same_eit}"))
}

type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("1", "polyhedron table", Duration::from_secs(1), polyhedra),
        ("2", "sphere refinement", Duration::from_secs(10), spheres),
        ("3", "stationarity", Duration::from_secs(1), stationary),
        ("4", "shrinkage oracle", Duration::from_secs(5), shrinkage),
        ("5", "manifold operations", Duration::from_secs(10), manifold_ops),
        ("6a", "penalty gradient", Duration::from_secs(120), penalty_fd),
        ("6b", "EIT shape derivative", Duration::from_secs(120), eit_fd),
        ("7", "denoising", Duration::from_secs(600), denoising),
        ("8", "EIT inclusion", Duration::from_secs(1800), eit_runs),
        ("9", "determinism", Duration::from_secs(600), determinism),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    println!("reference sphere value {:.4}", sphere_reference_tv());
    let mut failures = 0;
    for (id, name, budget, run) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let pass = outcome.pass && elapsed <= budget;
        if !pass {
            failures += 1;
        }
        println!(
            "{} {id:<3} {name}: {} [{:.2} s, budget {} s]",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} criteria failed");
        std::process::exit(1);
    }
}
