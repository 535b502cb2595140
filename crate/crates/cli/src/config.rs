//! JSON experiment configuration.

use ntv_core::experiments::{DenoiseSettings, EitPrior, EitSettings};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub sphere_levels: Vec<u32>,
    pub denoise: DenoiseConfig,
    pub eit: EitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self { seed: 7, sphere_levels: vec![2, 3, 4, 5], denoise: DenoiseConfig::default(), eit: EitConfig::default() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DenoiseConfig {
    pub cells: [usize; 3],
    pub sigma: f64,
    pub betas: Vec<f64>,
    pub lambda_ratio: f64,
    pub gammas: Vec<f64>,
    pub inner_steps: usize,
    pub step0: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub h1_scale: Option<f64>,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        let d = DenoiseSettings::default();
        Self {
            cells: d.cells,
            sigma: d.sigma,
            betas: d.betas,
            lambda_ratio: d.lambda_ratio,
            gammas: d.gammas,
            inner_steps: d.inner_steps,
            step0: d.step0,
            grad_tol: d.grad_tol,
            max_outer: d.max_outer,
            h1_scale: d.h1_scale,
        }
    }
}

impl DenoiseConfig {
    pub fn settings(&self, seed: u64) -> DenoiseSettings {
        DenoiseSettings {
            cells: self.cells,
            sigma: self.sigma,
            seed,
            betas: self.betas.clone(),
            lambda_ratio: self.lambda_ratio,
            gammas: self.gammas.clone(),
            inner_steps: self.inner_steps,
            step0: self.step0,
            grad_tol: self.grad_tol,
            max_outer: self.max_outer,
            h1_scale: self.h1_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Prior {
    Dtv,
    Area,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EitConfig {
    pub level: u32,
    pub snap: f64,
    pub layers: usize,
    pub initial_radius: f64,
    pub cube_half: f64,
    pub r: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub prior: Prior,
    pub beta: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub inner_steps: usize,
    pub step0: f64,
    pub step_growth: f64,
    pub grad_tol: f64,
    pub max_outer: usize,
    pub h1_scale: Option<f64>,
    pub hausdorff_samples: usize,
    /// Write Γ₁ every this many outer iterations; 0 disables iterates.
    pub save_every: usize,
}

impl Default for EitConfig {
    fn default() -> Self {
        let e = EitSettings::default();
        let (beta, lambda) = match e.prior {
            EitPrior::Dtv { beta, lambda } => (beta, lambda),
            EitPrior::Area { .. } => (1e-6, 1e-5),
        };
        Self {
            level: e.level,
            snap: e.snap,
            layers: e.layers,
            initial_radius: e.initial_radius,
            cube_half: e.cube_half,
            r: e.r,
            alpha: e.alpha,
            sigma: e.sigma,
            prior: Prior::Dtv,
            beta,
            lambda,
            gamma: 5e-5,
            inner_steps: e.inner_steps,
            step0: e.step0,
            step_growth: e.step_growth,
            grad_tol: e.grad_tol,
            max_outer: e.max_outer,
            h1_scale: e.h1_scale,
            hausdorff_samples: e.hausdorff_samples,
            save_every: 5,
        }
    }
}

impl EitConfig {
    pub fn settings(&self, seed: u64) -> EitSettings {
        EitSettings {
            level: self.level,
            snap: self.snap,
            layers: self.layers,
            initial_radius: self.initial_radius,
            cube_half: self.cube_half,
            r: self.r,
            alpha: self.alpha,
            sigma: self.sigma,
            seed,
            prior: match self.prior {
                Prior::Dtv => EitPrior::Dtv { beta: self.beta, lambda: self.lambda },
                Prior::Area => EitPrior::Area { gamma: self.gamma },
            },
            inner_steps: self.inner_steps,
            step0: self.step0,
            step_growth: self.step_growth,
            grad_tol: self.grad_tol,
            max_outer: self.max_outer,
            h1_scale: self.h1_scale,
            hausdorff_samples: self.hausdorff_samples,
        }
    }
}
