//! Scripted action-change study: a predator holds still, then rotates, then
//! holds again, while an estimator watches every interaction.

use crate::agent::Transition;
use crate::envs::{Entity, EntityKind, GridConfig, GridWorld, Orientation, PredatorAction, Team};
use crate::harness::{fmt_float, CsvTable};
use crate::rng::{self, Stream};
use crate::Result;

use super::rnd::{EstimatorConfig, EstimatorKind, RndEstimator};

/// Hold ×250, rotate-left ×25, hold ×25.
pub const SPIKE_SCRIPT: [(PredatorAction, usize); 3] = [
    (PredatorAction::Hold, 250),
    (PredatorAction::RotateLeft, 25),
    (PredatorAction::Hold, 25),
];

pub const FIRST_CHANGE: usize = 250;
pub const SECOND_CHANGE: usize = 275;

pub const SPIKE_HEADER: [&str; 5] = ["seed", "step", "estimator_kind", "state_id", "uncertainty"];

pub fn spike_script() -> Vec<PredatorAction> {
    SPIKE_SCRIPT.iter().flat_map(|&(a, n)| std::iter::repeat_n(a, n)).collect()
}

fn entity(kind: EntityKind, team: Team, position: (i32, i32), orientation: Orientation) -> Entity {
    Entity {
        kind,
        team,
        position,
        orientation,
        alive: true,
    }
}

/// The two fixed states, with frozen prey and no step limit in reach. In both,
/// the predator sees only empty cells whichever way it faces, so the scripted
/// rotations never change its observation.
///
/// State 1: single-team 9×9 grid, a red predator alone at the centre.
/// State 2: the 12×12 two-team grid, a green predator in an empty region.
pub fn spike_fixture(state_id: usize) -> GridWorld {
    use EntityKind::{Predator, Prey};
    let (base, ents) = match state_id {
        1 => (
            GridConfig::single_team(),
            vec![
                entity(Predator, Team::Red, (4, 4), Orientation::Up),
                entity(Prey, Team::Red, (0, 0), Orientation::Down),
                entity(Prey, Team::Red, (8, 8), Orientation::Up),
            ],
        ),
        2 => (
            GridConfig::multi_team(),
            vec![
                entity(Predator, Team::Green, (7, 3), Orientation::Right),
                entity(Prey, Team::Red, (0, 11), Orientation::Left),
                entity(Prey, Team::Red, (11, 11), Orientation::Left),
                entity(Prey, Team::Green, (0, 0), Orientation::Up),
                entity(Prey, Team::Green, (11, 0), Orientation::Down),
            ],
        ),
        _ => panic!("spike fixtures are numbered 1 and 2"),
    };
    let cfg = GridConfig {
        max_steps: 10_000,
        prey_move: false,
        ..base
    };
    GridWorld::from_entities(cfg, ents, vec![0]).expect("fixture is valid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpikeTrace {
    pub seed: u64,
    pub kind: EstimatorKind,
    pub state_id: usize,
    /// `u[t]` is the estimate of step `t`'s interaction before the estimator
    /// trains on it.
    pub u: Vec<f64>,
}

/// Runs the script on one fixture with a fresh estimator.
pub fn spike_trace(kind: EstimatorKind, state_id: usize, seed: u64, cfg: &EstimatorConfig) -> Result<SpikeTrace> {
    let mut world = spike_fixture(state_id);
    let n_actions = PredatorAction::ALL.len();
    let obs_dim = crate::envs::gridworld::OBS_LEN;
    let mut t_rng = rng::stream(seed, Stream::EstimatorTarget, state_id as u64);
    let mut p_rng = rng::stream(seed, Stream::EstimatorPredictor, state_id as u64);
    let mut est = RndEstimator::new(kind, obs_dim, n_actions, cfg, &mut t_rng, &mut p_rng)?;
    // Prey are frozen, so the world never draws from this stream.
    let mut env_rng = rng::stream(seed, Stream::Fixture, 0);
    let mut u = Vec::new();
    for a in spike_script() {
        let s = world.observe(0)?;
        let res = world.step(&[a], &mut env_rng)?.remove(0);
        let t = Transition {
            s,
            a: a.index(),
            r: res.reward,
            s_next: res.next_observation,
            done: res.terminal,
        };
        u.push(est.update(&est.encode(&t)?)?);
    }
    Ok(SpikeTrace {
        seed,
        kind,
        state_id,
        u,
    })
}

/// Both estimator kinds on both fixtures.
pub fn spike_experiment(seed: u64, cfg: &EstimatorConfig) -> Result<Vec<SpikeTrace>> {
    let mut out = Vec::new();
    for kind in [EstimatorKind::Transition, EstimatorKind::State] {
        for state_id in [1, 2] {
            out.push(spike_trace(kind, state_id, seed, cfg)?);
        }
    }
    Ok(out)
}

/// Outcome of the three spike clauses for one trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpikeCheck {
    /// sars-RND: `u[250]` exceeds the maximum of `u[240..250]`.
    pub first_spike: bool,
    /// sars-RND: `u[275] < u[250]`.
    pub second_smaller: bool,
    /// RND: `|u[250] - u[249]| / u[249] < 0.1`.
    pub flat: bool,
}

impl SpikeTrace {
    pub fn first_spike(&self) -> bool {
        let before = self.u[FIRST_CHANGE - 10..FIRST_CHANGE].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.u[FIRST_CHANGE] > before
    }

    pub fn second_smaller(&self) -> bool {
        self.u[SECOND_CHANGE] < self.u[FIRST_CHANGE]
    }

    pub fn relative_change(&self) -> f64 {
        let prev = self.u[FIRST_CHANGE - 1];
        (self.u[FIRST_CHANGE] - prev).abs() / prev
    }
}

/// Clauses for one seed: both sars-RND traces must spike, both RND traces must
/// stay flat.
pub fn check_spike(traces: &[SpikeTrace]) -> SpikeCheck {
    let sars: Vec<_> = traces.iter().filter(|t| t.kind == EstimatorKind::Transition).collect();
    let rnd: Vec<_> = traces.iter().filter(|t| t.kind == EstimatorKind::State).collect();
    SpikeCheck {
        first_spike: !sars.is_empty() && sars.iter().all(|t| t.first_spike()),
        second_smaller: !sars.is_empty() && sars.iter().all(|t| t.second_smaller()),
        flat: !rnd.is_empty() && rnd.iter().all(|t| t.relative_change() < 0.1),
    }
}

pub fn spike_table(traces: &[SpikeTrace]) -> CsvTable {
    let mut table = CsvTable::new(&SPIKE_HEADER);
    for tr in traces {
        for (step, u) in tr.u.iter().enumerate() {
            table.push(vec![
                tr.seed.to_string(),
                step.to_string(),
                tr.kind.name().to_string(),
                tr.state_id.to_string(),
                fmt_float(*u),
            ]);
        }
    }
    table
}
