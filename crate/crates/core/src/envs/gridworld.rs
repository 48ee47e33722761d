//! Predator-prey grid world: single-team (9×9, one predator) and multi-team
//! (12×12, two teams of four predators and two prey each) variants.
//!
//! Coordinates are `(row, col)` with `(0, 0)` the top-left accessible cell; every
//! position outside `0..size` is wall. Agent ids are predator indices, team by
//! team (red first). Prey follow a fixed random policy.

use rand::seq::{index, SliceRandom};
use rand::Rng;

use super::{StepInfo, StepResult};
use crate::{Error, Result};

pub const REWARD_CATCH_OWN: f64 = 1.0;
pub const REWARD_CATCH_OPPONENT: f64 = -1.0;
pub const REWARD_FAILED_CATCH: f64 = -0.5;
pub const REWARD_HOLD: f64 = -0.25;
pub const REWARD_OTHER: f64 = -0.01;

/// Observation cells (3×3 window) times channels (type, team, orientation).
pub const OBS_CELLS: usize = 9;
pub const OBS_CHANNELS: usize = 3;
pub const OBS_LEN: usize = OBS_CELLS * OBS_CHANNELS;

pub const PREY_PROBS: [(PredatorAction, f64); 4] = [
    (PredatorAction::Hold, 0.10),
    (PredatorAction::RotateLeft, 0.25),
    (PredatorAction::RotateRight, 0.25),
    (PredatorAction::Forward, 0.40),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Team {
    Red = 1,
    Green = 2,
}

impl Team {
    pub fn code(self) -> f64 {
        self as u8 as f64
    }

    pub fn index(self) -> usize {
        self as usize - 1
    }

    pub fn name(self) -> &'static str {
        match self {
            Team::Red => "red",
            Team::Green => "green",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    Up = 1,
    Right = 2,
    Down = 3,
    Left = 4,
}

impl Orientation {
    pub const ALL: [Orientation; 4] = [Orientation::Up, Orientation::Right, Orientation::Down, Orientation::Left];

    pub fn code(self) -> f64 {
        self as u8 as f64
    }

    /// Unit step `(d_row, d_col)` in this direction.
    pub fn delta(self) -> (i32, i32) {
        match self {
            Orientation::Up => (-1, 0),
            Orientation::Right => (0, 1),
            Orientation::Down => (1, 0),
            Orientation::Left => (0, -1),
        }
    }

    pub fn rotate_left(self) -> Self {
        match self {
            Orientation::Up => Orientation::Left,
            Orientation::Left => Orientation::Down,
            Orientation::Down => Orientation::Right,
            Orientation::Right => Orientation::Up,
        }
    }

    pub fn rotate_right(self) -> Self {
        match self {
            Orientation::Up => Orientation::Right,
            Orientation::Right => Orientation::Down,
            Orientation::Down => Orientation::Left,
            Orientation::Left => Orientation::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntityKind {
    Predator,
    Prey,
}

/// Object-type channel codes.
pub const CODE_VOID: f64 = 0.0;
pub const CODE_WALL: f64 = 1.0;
pub const CODE_PREDATOR: f64 = 2.0;
pub const CODE_PREY: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entity {
    pub kind: EntityKind,
    pub team: Team,
    pub position: (i32, i32),
    pub orientation: Orientation,
    pub alive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PredatorAction {
    Hold = 0,
    Forward = 1,
    RotateLeft = 2,
    RotateRight = 3,
    Catch = 4,
}

impl PredatorAction {
    pub const ALL: [PredatorAction; 5] = [
        PredatorAction::Hold,
        PredatorAction::Forward,
        PredatorAction::RotateLeft,
        PredatorAction::RotateRight,
        PredatorAction::Catch,
    ];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<usize> for PredatorAction {
    type Error = Error;

    fn try_from(a: usize) -> Result<Self> {
        PredatorAction::ALL
            .get(a)
            .copied()
            .ok_or(Error::DimensionMismatch { expected: 5, got: a + 1 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CatchOutcome {
    OwnPrey,
    OpponentPrey,
    Failed,
}

/// How an episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatchOutcome {
    /// This team's prey were exhausted first.
    Win(Team),
    /// Both teams' prey were exhausted on the same step.
    Draw,
    /// Step limit reached with prey left on both sides.
    Timeout,
}

/// One prey action drawn from hold 0.10 / rotate-left 0.25 / rotate-right 0.25 / forward 0.40.
pub fn prey_policy<R: Rng + ?Sized>(rng: &mut R) -> PredatorAction {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (a, p) in PREY_PROBS {
        acc += p;
        if u < acc {
            return a;
        }
    }
    PredatorAction::Forward
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    /// Accessible cells per side.
    pub size: usize,
    pub teams: Vec<Team>,
    pub predators_per_team: usize,
    pub prey_per_team: usize,
    pub max_steps: usize,
    /// Prey act each step; frozen prey are used by scripted fixtures.
    pub prey_move: bool,
}

impl GridConfig {
    pub fn multi_team() -> Self {
        Self {
            size: 12,
            teams: vec![Team::Red, Team::Green],
            predators_per_team: 4,
            prey_per_team: 2,
            max_steps: 200,
            prey_move: true,
        }
    }

    pub fn single_team() -> Self {
        Self {
            size: 9,
            teams: vec![Team::Red],
            predators_per_team: 1,
            prey_per_team: 2,
            max_steps: 200,
            prey_move: true,
        }
    }

    pub fn n_predators(&self) -> usize {
        self.teams.len() * self.predators_per_team
    }

    pub fn n_prey(&self) -> usize {
        self.teams.len() * self.prey_per_team
    }
}

#[derive(Debug, Clone)]
pub struct GridWorld {
    cfg: GridConfig,
    /// Predators `0..n_predators`, then prey.
    entities: Vec<Entity>,
    occupancy: Vec<Option<usize>>,
    priority: Vec<usize>,
    step_count: usize,
    outcome: Option<MatchOutcome>,
}

impl GridWorld {
    /// An empty world; call [`GridWorld::reset`] before stepping.
    pub fn new(cfg: GridConfig) -> Self {
        let cells = cfg.size * cfg.size;
        Self {
            cfg,
            entities: Vec::new(),
            occupancy: vec![None; cells],
            priority: Vec::new(),
            step_count: 0,
            outcome: Some(MatchOutcome::Timeout),
        }
    }

    /// Builds a world from explicit entities (predators first, then prey) and a
    /// predator priority order.
    pub fn from_entities(cfg: GridConfig, entities: Vec<Entity>, priority: Vec<usize>) -> Result<Self> {
        let n_pred = entities.iter().take_while(|e| e.kind == EntityKind::Predator).count();
        if entities[n_pred..].iter().any(|e| e.kind == EntityKind::Predator) {
            return Err(Error::Config("predators must precede prey".into()));
        }
        let mut sorted = priority.clone();
        sorted.sort_unstable();
        if sorted != (0..n_pred).collect::<Vec<_>>() {
            return Err(Error::Config("priority must be a permutation of predator ids".into()));
        }
        let mut w = Self::new(cfg);
        w.entities = entities;
        w.priority = priority;
        w.outcome = None;
        w.rebuild_occupancy()?;
        Ok(w)
    }

    fn rebuild_occupancy(&mut self) -> Result<()> {
        self.occupancy.iter_mut().for_each(|c| *c = None);
        for (id, e) in self.entities.iter().enumerate() {
            if !e.alive {
                continue;
            }
            let c = self
                .cell_index(e.position)
                .ok_or_else(|| Error::Config(format!("entity {id} at {:?} is outside the grid", e.position)))?;
            if self.occupancy[c].is_some() {
                return Err(Error::Config(format!("two entities share cell {:?}", e.position)));
            }
            self.occupancy[c] = Some(id);
        }
        Ok(())
    }

    pub fn config(&self) -> &GridConfig {
        &self.cfg
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn priority(&self) -> &[usize] {
        &self.priority
    }

    pub fn step_count(&self) -> usize {
        self.step_count
    }

    pub fn n_predators(&self) -> usize {
        self.entities.iter().filter(|e| e.kind == EntityKind::Predator).count()
    }

    pub fn is_done(&self) -> bool {
        self.outcome.is_some()
    }

    pub fn outcome(&self) -> Option<MatchOutcome> {
        self.outcome
    }

    pub fn prey_remaining(&self, team: Team) -> usize {
        self.entities
            .iter()
            .filter(|e| e.kind == EntityKind::Prey && e.alive && e.team == team)
            .count()
    }

    fn cell_index(&self, (r, c): (i32, i32)) -> Option<usize> {
        let n = self.cfg.size as i32;
        (r >= 0 && c >= 0 && r < n && c < n).then(|| (r * n + c) as usize)
    }

    pub fn occupant(&self, pos: (i32, i32)) -> Option<usize> {
        self.cell_index(pos).and_then(|c| self.occupancy[c])
    }

    /// Places every entity on a distinct uniformly drawn cell with a random
    /// orientation and draws a fresh predator priority order.
    pub fn reset<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let n = self.cfg.size;
        let total = self.cfg.n_predators() + self.cfg.n_prey();
        let cells = index::sample(rng, n * n, total);
        let mut entities = Vec::with_capacity(total);
        let mut cell_iter = cells.iter();
        let mut spawn = |kind, team, rng: &mut R| {
            let c = cell_iter.next().unwrap();
            Entity {
                kind,
                team,
                position: ((c / n) as i32, (c % n) as i32),
                orientation: Orientation::ALL[rng.random_range(0..4)],
                alive: true,
            }
        };
        for &team in &self.cfg.teams {
            for _ in 0..self.cfg.predators_per_team {
                entities.push(spawn(EntityKind::Predator, team, rng));
            }
        }
        for &team in &self.cfg.teams {
            for _ in 0..self.cfg.prey_per_team {
                entities.push(spawn(EntityKind::Prey, team, rng));
            }
        }
        let mut priority: Vec<usize> = (0..self.cfg.n_predators()).collect();
        priority.shuffle(rng);
        self.entities = entities;
        self.priority = priority;
        self.step_count = 0;
        self.outcome = None;
        self.rebuild_occupancy().expect("sampled cells are distinct and inside the grid");
    }

    fn ahead(e: &Entity) -> (i32, i32) {
        let (dr, dc) = e.orientation.delta();
        (e.position.0 + dr, e.position.1 + dc)
    }

    fn move_entity(&mut self, id: usize, to: (i32, i32)) -> bool {
        let Some(c) = self.cell_index(to) else {
            return false;
        };
        if self.occupancy[c].is_some() {
            return false;
        }
        let from = self.cell_index(self.entities[id].position).unwrap();
        self.occupancy[from] = None;
        self.occupancy[c] = Some(id);
        self.entities[id].position = to;
        true
    }

    fn apply_move(&mut self, id: usize, action: PredatorAction) {
        match action {
            PredatorAction::Hold | PredatorAction::Catch => {}
            PredatorAction::Forward => {
                let to = Self::ahead(&self.entities[id]);
                self.move_entity(id, to);
            }
            PredatorAction::RotateLeft => {
                self.entities[id].orientation = self.entities[id].orientation.rotate_left()
            }
            PredatorAction::RotateRight => {
                self.entities[id].orientation = self.entities[id].orientation.rotate_right()
            }
        }
    }

    /// Resolves one joint step: predators act in priority order, captured prey
    /// are removed, then surviving prey act in id order.
    pub fn step<R: Rng + ?Sized>(&mut self, actions: &[PredatorAction], rng: &mut R) -> Result<Vec<StepResult>> {
        if self.is_done() {
            return Err(Error::EpisodeDone);
        }
        let n_pred = self.n_predators();
        if actions.len() != n_pred {
            return Err(Error::MissingAction(actions.len().min(n_pred)));
        }
        let mut rewards = vec![0.0; n_pred];
        let mut catches = vec![None; n_pred];
        for k in 0..n_pred {
            let id = self.priority[k];
            let action = actions[id];
            rewards[id] = match action {
                PredatorAction::Hold => REWARD_HOLD,
                PredatorAction::Catch => {
                    let target = self.occupant(Self::ahead(&self.entities[id]));
                    let outcome = match target {
                        Some(t) if self.entities[t].kind == EntityKind::Prey => {
                            self.entities[t].alive = false;
                            let c = self.cell_index(self.entities[t].position).unwrap();
                            self.occupancy[c] = None;
                            if self.entities[t].team == self.entities[id].team {
                                CatchOutcome::OwnPrey
                            } else {
                                CatchOutcome::OpponentPrey
                            }
                        }
                        _ => CatchOutcome::Failed,
                    };
                    catches[id] = Some(outcome);
                    match outcome {
                        CatchOutcome::OwnPrey => REWARD_CATCH_OWN,
                        CatchOutcome::OpponentPrey => REWARD_CATCH_OPPONENT,
                        CatchOutcome::Failed => REWARD_FAILED_CATCH,
                    }
                }
                _ => REWARD_OTHER,
            };
            self.apply_move(id, action);
        }
        if self.cfg.prey_move {
            for id in n_pred..self.entities.len() {
                if self.entities[id].alive {
                    let a = prey_policy(rng);
                    self.apply_move(id, a);
                }
            }
        }
        self.step_count += 1;
        debug_assert!(self.invariants_hold());

        let exhausted: Vec<Team> = self
            .cfg
            .teams
            .iter()
            .copied()
            .filter(|&t| self.prey_remaining(t) == 0)
            .collect();
        self.outcome = match exhausted.len() {
            0 if self.step_count >= self.cfg.max_steps => Some(MatchOutcome::Timeout),
            0 => None,
            1 => Some(MatchOutcome::Win(exhausted[0])),
            _ => Some(MatchOutcome::Draw),
        };
        let done = self.is_done();
        let terminal = done && self.outcome != Some(MatchOutcome::Timeout);
        (0..n_pred)
            .map(|id| {
                Ok(StepResult {
                    next_observation: self.observe(id)?,
                    reward: rewards[id],
                    terminal,
                    done,
                    info: StepInfo { catch: catches[id] },
                })
            })
            .collect()
    }

    /// Map-style step: every predator id must appear exactly once.
    pub fn step_map<R: Rng + ?Sized>(
        &mut self,
        actions: &std::collections::BTreeMap<usize, PredatorAction>,
        rng: &mut R,
    ) -> Result<Vec<StepResult>> {
        let n_pred = self.n_predators();
        if let Some(&bad) = actions.keys().find(|&&id| id >= n_pred) {
            return Err(Error::UnknownAgent(bad));
        }
        let ordered = (0..n_pred)
            .map(|id| actions.get(&id).copied().ok_or(Error::MissingAction(id)))
            .collect::<Result<Vec<_>>>()?;
        self.step(&ordered, rng)
    }

    /// 3×3 window centred on the cell directly ahead of predator `agent`, laid
    /// out in the predator's frame: row 0 is farthest ahead, column 0 is to its
    /// left. Cell `k` occupies values `3k..3k+3` = (object type, team, orientation).
    ///
    /// The predator's own cell (back row, centre) reports no orientation: its
    /// heading is already implied by the frame, so turning on the spot in an
    /// empty area leaves the observation unchanged.
    pub fn observe(&self, agent: usize) -> Result<Vec<f64>> {
        let e = self.entities.get(agent).ok_or(Error::UnknownAgent(agent))?;
        if e.kind != EntityKind::Predator {
            return Err(Error::UnknownAgent(agent));
        }
        if !e.alive {
            return Err(Error::DeadAgent(agent));
        }
        let (fr, fc) = e.orientation.delta();
        let (rr, rc) = e.orientation.rotate_right().delta();
        let mut obs = Vec::with_capacity(OBS_LEN);
        for i in 0..3i32 {
            for j in 0..3i32 {
                let ahead = 2 - i;
                let side = j - 1;
                let pos = (e.position.0 + fr * ahead + rr * side, e.position.1 + fc * ahead + rc * side);
                let mut cell = self.encode_cell(pos);
                if pos == e.position {
                    cell[2] = 0.0;
                }
                obs.extend_from_slice(&cell);
            }
        }
        Ok(obs)
    }

    fn encode_cell(&self, pos: (i32, i32)) -> [f64; 3] {
        if self.cell_index(pos).is_none() {
            return [CODE_WALL, 0.0, 0.0];
        }
        match self.occupant(pos) {
            None => [CODE_VOID, 0.0, 0.0],
            Some(id) => {
                let e = &self.entities[id];
                let kind = match e.kind {
                    EntityKind::Predator => CODE_PREDATOR,
                    EntityKind::Prey => CODE_PREY,
                };
                [kind, e.team.code(), e.orientation.code()]
            }
        }
    }

    /// Entity-per-cell exclusivity and in-bounds positions for every living entity.
    pub fn invariants_hold(&self) -> bool {
        let mut seen = std::collections::HashSet::new();
        self.entities.iter().enumerate().filter(|(_, e)| e.alive).all(|(id, e)| {
            self.cell_index(e.position)
                .is_some_and(|c| self.occupancy[c] == Some(id) && seen.insert(c))
        }) && self.occupancy.iter().flatten().count() == seen.len()
    }
}
