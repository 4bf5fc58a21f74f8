//! Run configuration: defaults, then a flat TOML file, then flags.
//! The seed additionally falls back to `TRAJ_UNCERT_SEED` when neither the
//! file nor a flag sets it.

use std::path::Path;

use serde::{Deserialize, Serialize};
use traj_uncert::synth::{SceneKind, SceneTemplate, SyntheticPredictor};

use crate::error::{CliError, CliResult};

pub const SEED_ENV: &str = "TRAJ_UNCERT_SEED";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n_per_model: usize,
    /// m², isotropic kernel variance per mode.
    pub bandwidth: f64,
    pub seed: u64,
    pub k_values: Vec<usize>,
    pub parallelism: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n_per_model: 1000,
            bandwidth: 1.0,
            seed: 0,
            k_values: vec![1, 5, 10],
            parallelism: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.n_per_model == 0 {
            return Err(CliError::input("n_per_model must be at least 1"));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(CliError::input("bandwidth must be positive"));
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(CliError::input("k_values must be a nonempty list of positive counts"));
        }
        if !self.k_values.windows(2).all(|w| w[0] < w[1]) {
            return Err(CliError::input("k_values must be sorted ascending without repeats"));
        }
        if self.parallelism == 0 {
            return Err(CliError::input("parallelism must be at least 1"));
        }
        Ok(())
    }
}

/// Synthetic data knobs used by `synth` and `experiment`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub kind: SceneKind,
    pub n_scenes: usize,
    pub n_agents: usize,
    pub n_lanes: usize,
    pub noise_sigma: f64,
    pub members: usize,
    pub skill_sigma: f64,
    pub context_sensitivity: f64,
    pub mode_count: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            kind: SceneKind::TJunction,
            n_scenes: 500,
            n_agents: 3,
            n_lanes: 6,
            noise_sigma: 0.5,
            members: 3,
            skill_sigma: 1.0,
            context_sensitivity: 1.0,
            mode_count: 10,
        }
    }
}

impl SynthConfig {
    pub fn template(&self) -> SceneTemplate {
        SceneTemplate {
            kind: self.kind,
            n_agents: self.n_agents,
            n_lanes: self.n_lanes,
            noise_sigma: self.noise_sigma,
        }
    }

    pub fn predictors(&self, seed: u64) -> Vec<SyntheticPredictor> {
        SyntheticPredictor::ensemble(
            self.members,
            self.skill_sigma,
            self.context_sensitivity,
            self.mode_count,
            seed,
        )
    }
}

/// Every key the config file may hold; all optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub n_per_model: Option<usize>,
    pub bandwidth: Option<f64>,
    pub seed: Option<u64>,
    pub k_values: Option<Vec<usize>>,
    pub parallelism: Option<usize>,
    pub kind: Option<SceneKind>,
    pub n_scenes: Option<usize>,
    pub n_agents: Option<usize>,
    pub n_lanes: Option<usize>,
    pub noise_sigma: Option<f64>,
    pub members: Option<usize>,
    pub skill_sigma: Option<f64>,
    pub context_sensitivity: Option<f64>,
    pub mode_count: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::input(format!("config {}: {e}", path.display())))
    }

    /// Keys set in `other` win.
    pub fn overlay(self, other: FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(
            n_per_model,
            bandwidth,
            seed,
            k_values,
            parallelism,
            kind,
            n_scenes,
            n_agents,
            n_lanes,
            noise_sigma,
            members,
            skill_sigma,
            context_sensitivity,
            mode_count
        )
    }

    /// Resolves against defaults; `env_seed` is consulted only when no seed
    /// is set.
    pub fn resolve(self, env_seed: Option<&str>) -> CliResult<(RunConfig, SynthConfig)> {
        let seed = match (self.seed, env_seed) {
            (Some(s), _) => s,
            (None, Some(v)) => v
                .trim()
                .parse()
                .map_err(|_| CliError::input(format!("{SEED_ENV}={v:?} is not an unsigned 64-bit integer")))?,
            (None, None) => 0,
        };
        let d = RunConfig::default();
        let run = RunConfig {
            n_per_model: self.n_per_model.unwrap_or(d.n_per_model),
            bandwidth: self.bandwidth.unwrap_or(d.bandwidth),
            seed,
            k_values: self.k_values.unwrap_or(d.k_values),
            parallelism: self.parallelism.unwrap_or(d.parallelism),
        };
        run.validate()?;
        let s = SynthConfig::default();
        let synth = SynthConfig {
            kind: self.kind.unwrap_or(s.kind),
            n_scenes: self.n_scenes.unwrap_or(s.n_scenes),
            n_agents: self.n_agents.unwrap_or(s.n_agents),
            n_lanes: self.n_lanes.unwrap_or(s.n_lanes),
            noise_sigma: self.noise_sigma.unwrap_or(s.noise_sigma),
            members: self.members.unwrap_or(s.members),
            skill_sigma: self.skill_sigma.unwrap_or(s.skill_sigma),
            context_sensitivity: self.context_sensitivity.unwrap_or(s.context_sensitivity),
            mode_count: self.mode_count.unwrap_or(s.mode_count),
        };
        synth.template().validate().map_err(CliError::from_input)?;
        if synth.members == 0 {
            return Err(CliError::input("members must be at least 1"));
        }
        for p in synth.predictors(0) {
            p.validate().map_err(CliError::from_input)?;
        }
        Ok((run, synth))
    }
}
