//! Cross-seed aggregation and method comparison over run artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::artifacts::EPISODES_FILE;
use super::campaign::CampaignMetadata;
use super::csv::{fmt_float, CsvTable};
use crate::runner::EpisodeOutcome;
use crate::{Error, Result};

/// Sample mean and the half width of its two-sided 95% Student-t interval.
/// A single value has zero width.
pub fn mean_ci(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("df > 0").inverse_cdf(0.975);
    (mean, t * (var / n as f64).sqrt())
}

/// Final-window metrics of one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedMetrics {
    pub seed: u64,
    /// Mean return per episode over the method's agents.
    pub curve: Vec<f64>,
    /// Metric name to its final-window value.
    pub summary: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub episode: usize,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub metric: String,
    pub n: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub curve: Vec<CurvePoint>,
    pub summary: Vec<MetricSummary>,
    pub seeds: Vec<SeedMetrics>,
}

impl Aggregate {
    pub fn curve_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["episode", "n", "mean", "ci_low", "ci_high"]);
        for p in &self.curve {
            t.push(vec![
                p.episode.to_string(),
                p.n.to_string(),
                fmt_float(p.mean),
                fmt_float(p.ci_low),
                fmt_float(p.ci_high),
            ]);
        }
        t
    }

    pub fn summary_table(&self) -> CsvTable {
        let mut t = CsvTable::new(&["metric", "n", "mean", "ci_low", "ci_high"]);
        for m in &self.summary {
            t.push(vec![
                m.metric.clone(),
                m.n.to_string(),
                fmt_float(m.mean),
                fmt_float(m.ci_low),
                fmt_float(m.ci_high),
            ]);
        }
        t
    }

    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.summary.iter().find(|m| m.metric == name)
    }
}

/// Trailing moving average; the first points average what is available.
fn smooth(v: &[f64], window: usize) -> Vec<f64> {
    let w = window.max(1);
    let mut out = Vec::with_capacity(v.len());
    let mut acc = 0.0;
    for i in 0..v.len() {
        acc += v[i];
        if i >= w {
            acc -= v[i - w];
        }
        out.push(acc / (i + 1).min(w) as f64);
    }
    out
}

struct Row {
    seed: u64,
    agent: usize,
    episode: usize,
    ret: f64,
    length: f64,
    own: f64,
    opp: f64,
    failed: f64,
    outcome: EpisodeOutcome,
}

fn parse_rows(t: &CsvTable, path: &Path) -> Result<Vec<Row>> {
    let col = |name: &str| {
        t.column(name).ok_or_else(|| Error::Csv {
            path: path.to_path_buf(),
            reason: format!("missing column {name}"),
        })
    };
    let c = [
        col("seed")?,
        col("agent")?,
        col("episode")?,
        col("return")?,
        col("length")?,
        col("own_catches")?,
        col("opp_catches")?,
        col("failed_catches")?,
        col("outcome")?,
    ];
    let bad = |what: &str, v: &str| Error::Csv {
        path: path.to_path_buf(),
        reason: format!("bad {what} {v:?}"),
    };
    t.rows
        .iter()
        .map(|r| {
            let int = |i: usize, what: &str| r[c[i]].parse::<u64>().map_err(|_| bad(what, &r[c[i]]));
            let float = |i: usize, what: &str| r[c[i]].parse::<f64>().map_err(|_| bad(what, &r[c[i]]));
            Ok(Row {
                seed: int(0, "seed")?,
                agent: int(1, "agent")? as usize,
                episode: int(2, "episode")? as usize,
                ret: float(3, "return")?,
                length: float(4, "length")?,
                own: float(5, "own_catches")?,
                opp: float(6, "opp_catches")?,
                failed: float(7, "failed_catches")?,
                outcome: EpisodeOutcome::from_name(&r[c[8]]).ok_or_else(|| bad("outcome", &r[c[8]]))?,
            })
        })
        .collect()
}

/// Episodes the final-window metrics cover: the greedy test phase when there
/// is one, else the last 200 training episodes.
pub fn final_window(meta: &CampaignMetadata) -> std::ops::Range<usize> {
    if meta.test_episodes > 0 {
        meta.train_episodes..meta.episodes
    } else {
        meta.episodes.saturating_sub(200)..meta.episodes
    }
}

/// Per-episode curve and final-window summaries of an episodes table.
///
/// Only the method's agents (`meta.members`) count. Each seed contributes one
/// value per point: the member mean, smoothed over `window` episodes for the
/// curve. Catch metrics are team totals per episode.
pub fn aggregate(episodes: &CsvTable, meta: &CampaignMetadata, window: usize, path: &Path) -> Result<Aggregate> {
    let rows = parse_rows(episodes, path)?;
    let members = &meta.members;
    let n_ep = meta.episodes;
    let fin = final_window(meta);
    let predator_prey = meta.environment == "mtpp";

    let mut per_seed: BTreeMap<u64, Vec<&Row>> = BTreeMap::new();
    for r in rows.iter().filter(|r| members.contains(&r.agent)) {
        per_seed.entry(r.seed).or_default().push(r);
    }
    // Keep the campaign's seed order.
    let order: Vec<u64> = meta.seeds.iter().copied().filter(|s| per_seed.contains_key(s)).collect();
    let mut seeds = Vec::with_capacity(order.len());
    for s in order {
        let rs = &per_seed[&s];
        let mut sum = vec![0.0; n_ep];
        let mut count = vec![0usize; n_ep];
        for r in rs {
            if r.episode < n_ep {
                sum[r.episode] += r.ret;
                count[r.episode] += 1;
            }
        }
        let curve: Vec<f64> = sum.iter().zip(&count).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();

        let in_win: Vec<&Row> = rs.iter().copied().filter(|r| fin.contains(&r.episode)).collect();
        let n_rows = in_win.len() as f64;
        let n_eps = fin.len() as f64;
        let mut summary = BTreeMap::new();
        summary.insert("return".into(), in_win.iter().map(|r| r.ret).sum::<f64>() / n_rows);
        summary.insert("length".into(), in_win.iter().map(|r| r.length).sum::<f64>() / n_rows);
        if predator_prey {
            summary.insert("avg_catch".into(), in_win.iter().map(|r| r.own).sum::<f64>() / n_eps);
            summary.insert("opp_catches".into(), in_win.iter().map(|r| r.opp).sum::<f64>() / n_eps);
            summary.insert("failed_catches".into(), in_win.iter().map(|r| r.failed).sum::<f64>() / n_eps);
            summary.insert(
                "win_probability".into(),
                in_win.iter().map(|r| r.outcome.win_credit()).sum::<f64>() / n_rows,
            );
        }
        seeds.push(SeedMetrics {
            seed: s,
            curve: smooth(&curve, window),
            summary,
        });
    }

    let curve = (0..n_ep)
        .map(|e| {
            let vals: Vec<f64> = seeds.iter().map(|s| s.curve[e]).filter(|v| !v.is_nan()).collect();
            let (mean, hw) = mean_ci(&vals);
            CurvePoint {
                episode: e,
                n: vals.len(),
                mean,
                ci_low: mean - hw,
                ci_high: mean + hw,
            }
        })
        .collect();
    let names: Vec<String> = seeds.first().map(|s| s.summary.keys().cloned().collect()).unwrap_or_default();
    let summary = names
        .into_iter()
        .map(|metric| {
            let vals: Vec<f64> = seeds.iter().map(|s| s.summary[&metric]).collect();
            let (mean, hw) = mean_ci(&vals);
            MetricSummary {
                metric,
                n: vals.len(),
                mean,
                ci_low: mean - hw,
                ci_high: mean + hw,
            }
        })
        .collect();
    Ok(Aggregate { curve, summary, seeds })
}

/// [`aggregate`] over a campaign directory.
pub fn aggregate_dir(dir: &Path, window: usize) -> Result<Aggregate> {
    let meta = CampaignMetadata::read(dir)?;
    let path = dir.join(EPISODES_FILE);
    aggregate(&CsvTable::read(&path)?, &meta, window, &path)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Welch {
    pub diff: f64,
    pub t: f64,
    pub df: f64,
    /// Two-sided.
    pub p: f64,
}

/// Welch's unequal-variance t-test of `mean(a) - mean(b)`.
pub fn welch(a: &[f64], b: &[f64]) -> Welch {
    let stats = |v: &[f64]| {
        let n = v.len() as f64;
        let m = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            f64::NAN
        };
        (n, m, var)
    };
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let diff = ma - mb;
    if a.len() < 2 || b.len() < 2 {
        return Welch { diff, t: f64::NAN, df: f64::NAN, p: f64::NAN };
    }
    let (sa, sb) = (va / na, vb / nb);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let (t, p) = if diff == 0.0 { (0.0, 1.0) } else { (diff.signum() * f64::INFINITY, 0.0) };
        return Welch { diff, t, df: na + nb - 2.0, p };
    }
    let t = diff / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = 2.0 * StudentsT::new(0.0, 1.0, df).expect("df > 0").cdf(-t.abs());
    Welch { diff, t, df, p }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// The first method is significantly higher.
    A,
    B,
    None,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::A => "a",
            Verdict::B => "b",
            Verdict::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub metric: String,
    pub mean_a: f64,
    pub mean_b: f64,
    pub welch: Welch,
    pub verdict: Verdict,
}

pub const SIGNIFICANCE: f64 = 0.05;

/// Final-window comparison of two aggregates, metric by metric.
pub fn compare(a: &Aggregate, b: &Aggregate) -> Vec<Comparison> {
    let Some(first) = a.seeds.first() else {
        return Vec::new();
    };
    first
        .summary
        .keys()
        .filter(|m| b.seeds.first().is_some_and(|s| s.summary.contains_key(*m)))
        .map(|m| {
            let va: Vec<f64> = a.seeds.iter().map(|s| s.summary[m]).collect();
            let vb: Vec<f64> = b.seeds.iter().map(|s| s.summary[m]).collect();
            let w = welch(&va, &vb);
            let verdict = if w.p < SIGNIFICANCE {
                if w.diff > 0.0 {
                    Verdict::A
                } else {
                    Verdict::B
                }
            } else {
                Verdict::None
            };
            Comparison {
                metric: m.clone(),
                mean_a: va.iter().sum::<f64>() / va.len() as f64,
                mean_b: vb.iter().sum::<f64>() / vb.len() as f64,
                welch: w,
                verdict,
            }
        })
        .collect()
}

pub fn comparison_table(rows: &[Comparison]) -> CsvTable {
    let mut t = CsvTable::new(&["metric", "mean_a", "mean_b", "diff", "t", "df", "p", "verdict"]);
    for c in rows {
        t.push(vec![
            c.metric.clone(),
            fmt_float(c.mean_a),
            fmt_float(c.mean_b),
            fmt_float(c.welch.diff),
            fmt_float(c.welch.t),
            fmt_float(c.welch.df),
            fmt_float(c.welch.p),
            c.verdict.name().to_string(),
        ]);
    }
    t
}

/// Compares two campaign directories; they must cover the same environment
/// and episode schedule.
pub fn compare_dirs(a: &Path, b: &Path) -> Result<Vec<Comparison>> {
    let ma = CampaignMetadata::read(a)?;
    let mb = CampaignMetadata::read(b)?;
    if ma.environment != mb.environment {
        return Err(Error::Mismatch(format!("environments {} and {}", ma.environment, mb.environment)));
    }
    if (ma.episodes, ma.test_episodes) != (mb.episodes, mb.test_episodes) {
        return Err(Error::Mismatch(format!(
            "episode schedules {}/{} and {}/{}",
            ma.episodes, ma.test_episodes, mb.episodes, mb.test_episodes
        )));
    }
    Ok(compare(&aggregate_dir(a, 1)?, &aggregate_dir(b, 1)?))
}
