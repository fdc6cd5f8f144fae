use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use forcebal::bandit::{ArmModel, BanditInstance, Family};
use forcebal::harness::CheckpointSpec;
use forcebal::{PolicyKind, PolicyOptions, TradeoffParams};

/// One experiment, fully described by a single TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "defaults::name")]
    pub name: String,
    #[serde(default = "defaults::w")]
    pub w: Weights,
    #[serde(default = "defaults::eta")]
    pub eta: f64,
    #[serde(default)]
    pub lambda_min: f64,
    #[serde(default = "defaults::delta")]
    pub delta: f64,
    #[serde(default = "defaults::horizon")]
    pub horizon: u64,
    #[serde(default = "defaults::runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "defaults::policies")]
    pub policies: Vec<PolicyKind>,
    #[serde(default = "defaults::output_dir")]
    pub output_dir: PathBuf,
    pub arms: Vec<ArmConfig>,
    #[serde(default)]
    pub checkpoints: CheckpointSpec,
    #[serde(default)]
    pub options: PolicyOptions,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmConfig {
    pub mean: f64,
    pub variance: f64,
    #[serde(default)]
    pub family: Family,
}

/// A single tradeoff weight or a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Weights {
    Single(f64),
    Sweep(Vec<f64>),
}

impl Weights {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Weights::Single(w) => vec![*w],
            Weights::Sweep(ws) => ws.clone(),
        }
    }
}

mod defaults {
    use super::*;

    pub fn name() -> String {
        "experiment".into()
    }
    pub fn w() -> Weights {
        Weights::Single(0.5)
    }
    pub fn eta() -> f64 {
        1.0
    }
    pub fn delta() -> f64 {
        0.05
    }
    pub fn horizon() -> u64 {
        10_000
    }
    pub fn runs() -> usize {
        200
    }
    pub fn policies() -> Vec<PolicyKind> {
        vec![PolicyKind::ForcingBalance]
    }
    pub fn output_dir() -> PathBuf {
        "results".into()
    }
}

impl Default for ExperimentConfig {
    /// The five-arm reference problem with every other key at its default.
    fn default() -> Self {
        let arms = [(1.0, 0.05), (1.5, 0.1), (2.0, 0.2), (4.0, 4.0), (5.0, 0.5)]
            .into_iter()
            .map(|(mean, variance)| ArmConfig {
                mean,
                variance,
                family: Family::Gaussian,
            })
            .collect();
        ExperimentConfig {
            name: defaults::name(),
            w: defaults::w(),
            eta: defaults::eta(),
            lambda_min: 0.0,
            delta: defaults::delta(),
            horizon: defaults::horizon(),
            runs: defaults::runs(),
            seed: 0,
            policies: defaults::policies(),
            output_dir: defaults::output_dir(),
            arms,
            checkpoints: CheckpointSpec::default(),
            options: PolicyOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| anyhow::anyhow!("{}", e.message()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) || self.name == "." || self.name == ".." {
            bail!("name: must be a plain, non-empty directory name");
        }
        if self.horizon == 0 {
            bail!("horizon: must be at least 1");
        }
        if self.runs == 0 {
            bail!("runs: must be at least 1");
        }
        if self.policies.is_empty() {
            bail!("policies: at least one policy is required");
        }
        if self.w.values().is_empty() {
            bail!("w: the sweep is empty");
        }
        let inst = self.instance()?;
        for w in self.w.values() {
            TradeoffParams::new(w, self.lambda_min, self.eta, self.delta)
                .and_then(|p| p.validate_for(inst.num_arms()))
                .context("w/eta/lambda_min/delta")?;
        }
        self.options.validate().context("options")?;
        Ok(())
    }

    pub fn instance(&self) -> Result<BanditInstance> {
        let arms = self
            .arms
            .iter()
            .enumerate()
            .map(|(i, a)| ArmModel::new(a.mean, a.variance, a.family).with_context(|| format!("arms[{i}]")))
            .collect::<Result<Vec<_>>>()?;
        BanditInstance::new(arms).context("arms")
    }

    pub fn params_for(&self, w: f64) -> Result<TradeoffParams> {
        Ok(TradeoffParams::new(w, self.lambda_min, self.eta, self.delta)?)
    }

    /// Parameters of a single-weight experiment.
    pub fn single_params(&self) -> Result<TradeoffParams> {
        match self.w {
            Weights::Single(w) => self.params_for(w),
            Weights::Sweep(_) => bail!("w: this command needs a single weight, not a sweep"),
        }
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }
}
