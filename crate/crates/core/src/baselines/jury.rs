use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::agent::{majority_vote, DqnAgent, DuelingQNet, QNetConfig};
use crate::nn::checkpoint;
use crate::rng::{self, Stream};
use crate::{Error, Result};

/// Frozen trained policies that advise by majority vote.
///
/// Only shared references to the experts are ever handed out, so advising
/// cannot change them.
#[derive(Debug, Clone)]
pub struct ExpertJury {
    experts: Vec<DuelingQNet>,
}

impl ExpertJury {
    pub fn new(experts: Vec<DuelingQNet>) -> Result<Self> {
        let Some(first) = experts.first() else {
            return Err(Error::Config("a jury needs at least one expert".into()));
        };
        let n = first.n_actions();
        if experts.iter().any(|e| e.n_actions() != n) {
            return Err(Error::Config("jury experts disagree on the action space".into()));
        }
        Ok(Self { experts })
    }

    pub fn from_agents<'a>(agents: impl IntoIterator<Item = &'a DqnAgent>) -> Result<Self> {
        Self::new(agents.into_iter().map(|a| a.net().clone()).collect())
    }

    /// Experts restored from checkpoint files written by [`ExpertJury::save`]
    /// or [`DqnAgent::save`].
    pub fn load(cfg: &QNetConfig, paths: &[PathBuf]) -> Result<Self> {
        let mut experts = Vec::with_capacity(paths.len());
        for path in paths {
            let net = checkpoint::read_network(&mut BufReader::new(File::open(path)?))?;
            // Initial weights are overwritten; the stream choice is immaterial.
            let mut q = DuelingQNet::new(cfg, 1, &mut rng::stream(0, Stream::Jury, 0))?;
            q.load_parameters(&net)?;
            experts.push(q);
        }
        Self::new(experts)
    }

    /// One checkpoint per expert, `expert_<i>.bin` under `dir`.
    pub fn save(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir)?;
        self.experts
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let path = dir.join(format!("expert_{i}.bin"));
                let mut w = BufWriter::new(File::create(&path)?);
                checkpoint::write_network(&mut w, e.online())?;
                w.flush()?;
                Ok(path)
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    pub fn experts(&self) -> &[DuelingQNet] {
        &self.experts
    }

    pub fn n_actions(&self) -> usize {
        self.experts[0].n_actions()
    }

    /// Greedy action of every expert on `s`.
    pub fn votes(&self, s: &[f64]) -> Result<Vec<usize>> {
        self.experts.iter().map(|e| Ok(crate::agent::argmax(&e.q_values(s)?))).collect()
    }

    /// The most proposed action; ties go to the lowest index.
    pub fn advise(&self, s: &[f64]) -> Result<usize> {
        Ok(majority_vote(&self.votes(s)?, self.n_actions()))
    }

    /// Flattened parameters of every expert, for integrity checks.
    pub fn fingerprint(&self) -> Vec<Vec<f64>> {
        self.experts.iter().map(|e| e.online().params_flat()).collect()
    }
}
