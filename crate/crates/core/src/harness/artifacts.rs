//! CSV schemas of the run artifacts.

use super::csv::{fmt_float, CsvTable};
use crate::runner::{BudgetRow, EpisodeRow};
use crate::transfer::TransferRecord;

pub const EPISODES_HEADER: [&str; 12] = [
    "seed",
    "agent",
    "team",
    "episode",
    "return",
    "length",
    "own_catches",
    "opp_catches",
    "failed_catches",
    "outcome",
    "phase",
    "method",
];

pub const TRANSFERS_HEADER: [&str; 7] =
    ["seed", "episode", "source_id", "target_id", "batch_size", "mean_delta_conf", "mean_abs_td"];

pub const BUDGET_HEADER: [&str; 4] = ["seed", "episode", "agent_id", "budget_used"];

pub const EPISODES_FILE: &str = "episodes.csv";
pub const TRANSFERS_FILE: &str = "transfers.csv";
pub const BUDGET_FILE: &str = "budget.csv";

pub fn episodes_table(seed: u64, method: &str, rows: &[EpisodeRow]) -> CsvTable {
    let mut t = CsvTable::new(&EPISODES_HEADER);
    for r in rows {
        t.push(vec![
            seed.to_string(),
            r.agent.to_string(),
            r.team.map_or("none", |t| t.name()).to_string(),
            r.episode.to_string(),
            fmt_float(r.ret),
            r.length.to_string(),
            r.own_catches.to_string(),
            r.opp_catches.to_string(),
            r.failed_catches.to_string(),
            r.outcome.name().to_string(),
            r.phase.name().to_string(),
            method.to_string(),
        ]);
    }
    t
}

pub fn transfers_table(seed: u64, records: &[TransferRecord]) -> CsvTable {
    let mut t = CsvTable::new(&TRANSFERS_HEADER);
    for rec in records {
        for g in &rec.targets {
            t.push(vec![
                seed.to_string(),
                rec.episode.to_string(),
                rec.source_id.to_string(),
                g.target_id.to_string(),
                g.batch_size.to_string(),
                fmt_float(g.mean_delta_conf),
                fmt_float(g.mean_abs_td),
            ]);
        }
    }
    t
}

pub fn budget_table(seed: u64, rows: &[BudgetRow]) -> CsvTable {
    let mut t = CsvTable::new(&BUDGET_HEADER);
    for r in rows {
        t.push(vec![seed.to_string(), r.episode.to_string(), r.agent.to_string(), r.used.to_string()]);
    }
    t
}
