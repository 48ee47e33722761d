//! Declarative experiment files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::{Ocmas, Rcmp};
use crate::runner::{EnvKind, RunSpec};
use crate::transfer::TransferConfig;
use crate::uncertainty::EstimatorConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    NoTransfer,
    Ocmas,
    Rcmp,
    Efontl,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::NoTransfer => "no_transfer",
            Method::Ocmas => "ocmas",
            Method::Rcmp => "rcmp",
            Method::Efontl => "efontl",
        }
    }
}

/// Learner hyper-parameters that override the environment's preset.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentOverrides {
    pub learning_rate: Option<f64>,
    pub gamma: Option<f64>,
    pub batch_size: Option<usize>,
    pub update_step_period: Option<u64>,
    pub replay_capacity: Option<usize>,
    pub eps_start: Option<f64>,
    pub eps_end: Option<f64>,
    /// Episodes over which ε decays; defaults to the training episodes.
    pub eps_episodes: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdvisingConfig {
    /// Head-disagreement level above which an RCMP student asks.
    pub threshold: Option<f64>,
    /// Advised actions per agent.
    pub budget: usize,
    /// Expert checkpoints; relative paths resolve against the config file.
    /// When empty, the jury is trained by a no-transfer run of `jury_seed`.
    #[serde(default)]
    pub jury_checkpoints: Vec<PathBuf>,
    #[serde(default = "default_jury_seed")]
    pub jury_seed: u64,
}

fn default_jury_seed() -> u64 {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub environment: EnvKind,
    pub method: Method,
    pub seeds: Vec<u64>,
    /// Episodes in total, greedy test episodes included.
    pub episodes: usize,
    #[serde(default)]
    pub test_episodes: usize,
    pub max_steps: Option<usize>,
    /// Cart-Pole only.
    pub n_agents: Option<usize>,
    #[serde(default)]
    pub agent: AgentOverrides,
    pub estimator: Option<EstimatorConfig>,
    pub transfer: Option<TransferConfig>,
    pub advising: Option<AdvisingConfig>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads and validates `path`; relative jury paths become absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if cfg.name.is_empty() {
            cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        }
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(adv) = cfg.advising.as_mut() {
            for p in &mut adv.jury_checkpoints {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return bad("seeds must be distinct".into());
        }
        if self.test_episodes >= self.episodes {
            return bad(format!("test_episodes {} leaves no training episodes", self.test_episodes));
        }
        if self.environment == EnvKind::Mtpp && self.n_agents.is_some_and(|n| n != 8) {
            return bad("the predator-prey world has exactly 8 predators".into());
        }
        match (self.method, &self.transfer) {
            (Method::Efontl, None) => return bad("efontl needs a [transfer] block".into()),
            (Method::Efontl, Some(_)) | (_, None) => {}
            (m, Some(_)) => return bad(format!("[transfer] is only valid for efontl, not {}", m.name())),
        }
        match (self.method, &self.advising) {
            (Method::Ocmas | Method::Rcmp, None) => {
                return bad(format!("{} needs an [advising] block", self.method.name()))
            }
            (Method::Rcmp, Some(a)) if a.threshold.is_none() => return bad("rcmp needs advising.threshold".into()),
            (Method::Ocmas | Method::Rcmp, Some(_)) | (_, None) => {}
            (m, Some(_)) => return bad(format!("[advising] is only valid for ocmas and rcmp, not {}", m.name())),
        }
        let spec = self.run_spec()?;
        spec.validate()?;
        if let Some(t) = &self.transfer {
            t.validate()?;
            if t.n_agents != spec.members().len() {
                return bad(format!(
                    "transfer.n_agents is {} but {} agents take part",
                    t.n_agents,
                    spec.members().len()
                ));
            }
        }
        Ok(())
    }

    /// Environment preset with this file's overrides applied.
    pub fn run_spec(&self) -> Result<RunSpec> {
        let train = self.episodes - self.test_episodes.min(self.episodes);
        let mut spec = match self.environment {
            EnvKind::Cartpole => {
                let mut s = RunSpec::cartpole(train);
                s.test_episodes = self.test_episodes;
                if let Some(n) = self.n_agents {
                    s.n_agents = n;
                }
                s
            }
            EnvKind::Mtpp => RunSpec::predator_prey(self.episodes, self.test_episodes),
        };
        if let Some(m) = self.max_steps {
            spec.max_steps = m;
        }
        if let Some(e) = self.estimator {
            spec.estimator = e;
        }
        let o = &self.agent;
        let q = &mut spec.dqn.qnet;
        o.learning_rate.inspect(|&v| q.learning_rate = v);
        o.gamma.inspect(|&v| q.gamma = v);
        o.batch_size.inspect(|&v| q.batch_size = v);
        o.update_step_period.inspect(|&v| q.update_step_period = v);
        let d = &mut spec.dqn;
        o.replay_capacity.inspect(|&v| d.replay_capacity = v);
        o.eps_start.inspect(|&v| d.eps_start = v);
        o.eps_end.inspect(|&v| d.eps_end = v);
        o.eps_episodes.inspect(|&v| d.eps_episodes = v);
        if spec.dqn.qnet.batch_size == 0 || spec.dqn.eps_episodes == 0 {
            return Err(Error::Config("batch_size and eps_episodes must be positive".into()));
        }
        Ok(spec)
    }

    pub fn advice_budget(&self) -> usize {
        self.advising.as_ref().map_or(Ocmas::DEFAULT_BUDGET, |a| a.budget)
    }

    pub fn threshold(&self) -> f64 {
        self.advising
            .as_ref()
            .and_then(|a| a.threshold)
            .unwrap_or(Rcmp::DEFAULT_THRESHOLD)
    }
}
