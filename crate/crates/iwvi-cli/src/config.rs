//! Experiment configuration: JSON file with strict key checking, CLI flag
//! overrides, and per-experiment defaults resolved before any computation.

use anyhow::{bail, Context, Result};
use iwvi_core::elliptical::{Family, ParamLayout, NU_INIT};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Experiment {
    OneD,
    Dirichlet,
    Clutter,
    Logreg,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::OneD => "oneD",
            Experiment::Dirichlet => "dirichlet",
            Experiment::Clutter => "clutter",
            Experiment::Logreg => "logreg",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    /// "gaussian", "student_t", or absent for both.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(rename = "M_set", default, skip_serializing_if = "Option::is_none")]
    pub m_set: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    #[serde(default)]
    pub seed: u64,

    /// Dirichlet: number of simplex components.
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Clutter: number of observations per instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_obs: Option<usize>,
    /// Clutter: latent dimension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,

    /// Logreg: LIBSVM file; absent selects the built-in synthetic problem.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_grid: Option<Vec<f64>>,
    /// Logreg: one SGD run per seed in the sweep; defaults to [seed].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_seeds: Option<Vec<u64>>,
    #[serde(default = "default_true")]
    pub standardize: bool,
    #[serde(default = "default_true")]
    pub add_bias: bool,
    #[serde(default = "default_sgd_iters")]
    pub sgd_iters: usize,
    #[serde(default = "default_snapshots")]
    pub snapshot_at: Vec<usize>,

    /// Student-T: optimize ν (default) or hold it at `fixed_nu`.
    #[serde(default = "default_true")]
    pub optimize_nu: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fixed_nu: Option<f64>,
    /// Initial scale A = scale0·I.
    #[serde(default = "default_scale0")]
    pub scale0: f64,

    /// Frozen noise tuples for batch optimization.
    #[serde(default = "default_n_noise")]
    pub n_noise: usize,
    /// Fresh Monte Carlo batches for evaluation (IW-ELBO, SNIS, snapshots).
    #[serde(default = "default_n_eval")]
    pub n_eval_batches: usize,
    /// Alg.-1 draws for pushforward moment estimates.
    #[serde(default = "default_n_qm")]
    pub n_qm_samples: usize,
    /// 1-D experiment: grid resolution for emitted density curves.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// 1-D experiment: inner replicates per q_M marginal density point.
    #[serde(default = "default_n_inner")]
    pub n_inner: usize,
}

fn default_true() -> bool {
    true
}
fn default_sgd_iters() -> usize {
    10_000
}
fn default_snapshots() -> Vec<usize> {
    vec![2_000, 10_000]
}
fn default_scale0() -> f64 {
    1.0
}
fn default_n_noise() -> usize {
    10_000
}
fn default_n_eval() -> usize {
    10_000
}
fn default_n_qm() -> usize {
    10_000
}
fn default_grid_points() -> usize {
    201
}
fn default_n_inner() -> usize {
    200
}

/// CLI flag values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub m_set: Option<Vec<usize>>,
    pub family: Option<String>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        serde_json::from_value(serde_json::json!({ "experiment": experiment.name() }))
            .expect("minimal config is valid")
    }

    pub fn from_path(path: &Path, experiment: Experiment) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.experiment != experiment {
            bail!(
                "config is for experiment '{}' but '{}' was requested",
                cfg.experiment.name(),
                experiment.name()
            );
        }
        Ok(cfg)
    }

    pub fn apply(&mut self, ov: &Overrides) {
        if let Some(m) = &ov.m_set {
            self.m_set = Some(m.clone());
        }
        if let Some(f) = &ov.family {
            self.family = Some(f.clone());
        }
        if let Some(s) = ov.seed {
            self.seed = s;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(f) = &self.family {
            if f != "gaussian" && f != "student_t" {
                bail!("family must be \"gaussian\" or \"student_t\", got \"{f}\"");
            }
        }
        if let Some(ms) = &self.m_set {
            if ms.is_empty() || ms.contains(&0) {
                bail!("M_set must be a non-empty list of positive integers");
            }
        }
        if self.repetitions == Some(0) {
            bail!("repetitions must be positive");
        }
        if let Some(k) = self.k {
            if k < 2 {
                bail!("K must be at least 2");
            }
        }
        if self.d == Some(0) {
            bail!("d must be positive");
        }
        if !(self.scale0 > 0.0) {
            bail!("scale0 must be positive");
        }
        if let Some(nu) = self.fixed_nu {
            if !(nu > 2.0) {
                bail!("fixed_nu must exceed 2 (finite covariance)");
            }
        }
        if let Some(steps) = &self.step_grid {
            if steps.iter().any(|s| !(*s > 0.0)) {
                bail!("step_grid entries must be positive");
            }
        }
        if self.n_noise == 0 || self.n_eval_batches == 0 || self.n_qm_samples == 0 {
            bail!("n_noise, n_eval_batches, and n_qm_samples must be positive");
        }
        if self.grid_points < 3 {
            bail!("grid_points must be at least 3");
        }
        if self.n_inner == 0 || self.sgd_iters == 0 {
            bail!("n_inner and sgd_iters must be positive");
        }
        if self.snapshot_at.is_empty() || self.snapshot_at.iter().any(|&s| s == 0) {
            bail!("snapshot_at must list positive iterations");
        }
        Ok(())
    }

    pub fn families(&self) -> Vec<Family> {
        match self.family.as_deref() {
            Some("gaussian") => vec![Family::Gaussian],
            Some("student_t") => vec![Family::StudentT],
            _ => vec![Family::Gaussian, Family::StudentT],
        }
    }

    pub fn layout(&self, family: Family, dim: usize) -> ParamLayout {
        match family {
            Family::Gaussian => ParamLayout::gaussian(dim),
            Family::StudentT => {
                if self.optimize_nu {
                    ParamLayout::student_t(dim)
                } else {
                    ParamLayout::student_t_fixed(dim, self.fixed_nu.unwrap_or(NU_INIT))
                }
            }
        }
    }

    pub fn m_set_resolved(&self) -> Vec<usize> {
        self.m_set.clone().unwrap_or_else(|| match self.experiment {
            Experiment::OneD => vec![1, 5, 20, 100],
            Experiment::Dirichlet => vec![1, 16, 128],
            Experiment::Clutter => vec![1, 4, 16, 64],
            Experiment::Logreg => vec![1, 5, 20, 100],
        })
    }

    pub fn repetitions_resolved(&self) -> usize {
        self.repetitions.unwrap_or(match self.experiment {
            Experiment::OneD => 1,
            Experiment::Dirichlet => 20,
            Experiment::Clutter => 50,
            Experiment::Logreg => 1,
        })
    }

    pub fn step_grid_resolved(&self) -> Vec<f64> {
        self.step_grid.clone().unwrap_or_else(|| {
            // Geometric grid 10^-4 … 10^0, 9 points.
            (0..9).map(|i| 10f64.powf(-4.0 + 0.5 * i as f64)).collect()
        })
    }

    pub fn sweep_seeds_resolved(&self) -> Vec<u64> {
        self.sweep_seeds
            .clone()
            .unwrap_or_else(|| vec![self.seed])
    }
}

pub fn family_name(family: Family) -> &'static str {
    match family {
        Family::Gaussian => "gaussian",
        Family::StudentT => "student_t",
    }
}
