//! Multi-seed campaigns with resumable per-seed artifacts.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::artifacts::{
    budget_table, episodes_table, transfers_table, BUDGET_FILE, EPISODES_FILE, TRANSFERS_FILE,
};
use super::config::{ExperimentConfig, Method};
use super::csv::{write_atomic, CsvTable};
use crate::baselines::{run_no_transfer, ExpertJury, Ocmas, Rcmp};
use crate::runner::{self, Coordinator, NoTransfer, RunOutput, RunSpec};
use crate::transfer::Efontl;
use crate::{Error, Result};

/// Environment variable capping the number of seeds run at once.
pub const WORKERS_ENV: &str = "EFONTL_WORKERS";
pub const METADATA_FILE: &str = "metadata.toml";
pub const CONFIG_FILE: &str = "config.toml";
const DONE: &str = "DONE";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignMetadata {
    pub name: String,
    pub environment: String,
    pub method: String,
    pub episodes: usize,
    pub train_episodes: usize,
    pub test_episodes: usize,
    pub max_steps: usize,
    /// Agents the method controls; the rest are independent learners.
    pub members: Vec<usize>,
    pub seeds: Vec<u64>,
    pub version: String,
}

impl CampaignMetadata {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(METADATA_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CampaignReport {
    pub out_dir: PathBuf,
    pub ran: Vec<u64>,
    /// Seeds whose artifacts were already complete.
    pub resumed: Vec<u64>,
}

/// Worker slots: `EFONTL_WORKERS` if set, else the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn seed_dir(out: &Path, seed: u64) -> PathBuf {
    out.join("seeds").join(format!("seed_{seed}"))
}

/// The method's coordinator for one seed.
pub fn coordinator(
    cfg: &ExperimentConfig,
    spec: &RunSpec,
    seed: u64,
    jury: Option<&ExpertJury>,
) -> Result<Box<dyn Coordinator>> {
    let members = spec.members();
    Ok(match cfg.method {
        Method::NoTransfer => Box::new(NoTransfer),
        Method::Efontl => {
            let t = cfg.transfer.clone().ok_or_else(|| Error::Config("missing [transfer]".into()))?;
            Box::new(Efontl::new(t, members, spec.obs_dim(), spec.n_actions(), &spec.estimator, seed)?)
        }
        Method::Ocmas => Box::new(Ocmas::new(
            members,
            spec.obs_dim(),
            spec.n_actions(),
            &spec.estimator,
            cfg.advice_budget(),
            seed,
        )?),
        Method::Rcmp => {
            let jury = jury.ok_or_else(|| Error::Config("rcmp needs a jury".into()))?.clone();
            Box::new(Rcmp::new(spec, members, jury, cfg.threshold(), cfg.advice_budget(), seed)?)
        }
    })
}

pub fn run_seed(cfg: &ExperimentConfig, seed: u64, jury: Option<&ExpertJury>) -> Result<RunOutput> {
    let spec = cfg.run_spec()?;
    let mut coord = coordinator(cfg, &spec, seed, jury)?;
    runner::run(&spec, coord.as_mut(), seed)
}

/// Loads the configured expert checkpoints, or trains the jury once with a
/// no-transfer run and caches its checkpoints under `out/jury`.
pub fn prepare_jury(cfg: &ExperimentConfig, out: &Path) -> Result<Option<ExpertJury>> {
    if cfg.method != Method::Rcmp {
        return Ok(None);
    }
    let spec = cfg.run_spec()?;
    let adv = cfg.advising.as_ref().ok_or_else(|| Error::Config("missing [advising]".into()))?;
    if !adv.jury_checkpoints.is_empty() {
        return ExpertJury::load(&spec.dqn.qnet, &adv.jury_checkpoints).map(Some);
    }
    let dir = out.join("jury");
    let n = spec.members().len();
    let cached: Vec<PathBuf> = (0..n).map(|i| dir.join(format!("expert_{i}.bin"))).collect();
    if dir.join(DONE).exists() {
        return ExpertJury::load(&spec.dqn.qnet, &cached).map(Some);
    }
    let mut teacher_spec = spec.clone();
    teacher_spec.test_episodes = 0;
    let trained = run_no_transfer(&teacher_spec, adv.jury_seed)?;
    let jury = ExpertJury::from_agents(spec.members().iter().map(|&m| &trained.agents[m]))?;
    jury.save(&dir)?;
    write_atomic(&dir.join(DONE), b"")?;
    Ok(Some(jury))
}

fn write_seed(dir: &Path, seed: u64, out: &RunOutput) -> Result<()> {
    episodes_table(seed, &out.method, &out.episodes).write(&dir.join(EPISODES_FILE))?;
    transfers_table(seed, &out.transfers).write(&dir.join(TRANSFERS_FILE))?;
    budget_table(seed, &out.budget).write(&dir.join(BUDGET_FILE))?;
    write_atomic(&dir.join(DONE), b"")
}

fn merge(out: &Path, seeds: &[u64]) -> Result<()> {
    for file in [EPISODES_FILE, TRANSFERS_FILE, BUDGET_FILE] {
        let mut merged: Option<CsvTable> = None;
        for &s in seeds {
            let t = CsvTable::read(&seed_dir(out, s).join(file))?;
            match merged.as_mut() {
                None => merged = Some(t),
                Some(m) => m.rows.extend(t.rows),
            }
        }
        if let Some(m) = merged {
            m.write(&out.join(file))?;
        }
    }
    Ok(())
}

/// Runs every seed of `cfg` (those already complete under `out` are kept),
/// at most `workers` at a time, then merges the per-seed tables.
pub fn run_campaign(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<CampaignReport> {
    cfg.validate()?;
    let spec = cfg.run_spec()?;
    std::fs::create_dir_all(out)?;
    let meta = CampaignMetadata {
        name: cfg.name.clone(),
        environment: cfg.environment.name().to_string(),
        method: cfg.method.name().to_string(),
        episodes: spec.total_episodes(),
        train_episodes: spec.train_episodes,
        test_episodes: spec.test_episodes,
        max_steps: spec.max_steps,
        members: spec.members(),
        seeds: cfg.seeds.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    write_atomic(&out.join(CONFIG_FILE), cfg.to_toml().as_bytes())?;
    write_atomic(
        &out.join(METADATA_FILE),
        toml::to_string(&meta).expect("metadata serialises").as_bytes(),
    )?;
    let jury = prepare_jury(cfg, out)?;

    let (resumed, todo): (Vec<u64>, Vec<u64>) =
        cfg.seeds.iter().partition(|&&s| seed_dir(out, s).join(DONE).exists());
    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    std::thread::scope(|scope| {
        for _ in 0..workers.clamp(1, todo.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&seed) = todo.get(i) else { break };
                let res = run_seed(cfg, seed, jury.as_ref()).and_then(|o| write_seed(&seed_dir(out, seed), seed, &o));
                if let Err(e) = res {
                    failures.lock().expect("no poisoned workers").push((seed, e));
                }
            });
        }
    });
    let mut failures = failures.into_inner().expect("no poisoned workers");
    if !failures.is_empty() {
        failures.sort_by_key(|(s, _)| *s);
        let (seed, e) = failures.swap_remove(0);
        return Err(Error::Config(format!("seed {seed} failed: {e}")));
    }
    merge(out, &cfg.seeds)?;
    Ok(CampaignReport {
        out_dir: out.to_path_buf(),
        ran: todo,
        resumed,
    })
}
