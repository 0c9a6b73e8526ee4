//! Last-100 aggregation and baseline comparison tables.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::run::EpisodeRecord;
use crate::error::{Error, Result};

pub const LAST_EPISODES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation across seeds; 0 for a single seed.
    pub std: f64,
}

/// Mean extrinsic return of the final `min(100, n)` episodes of each seed,
/// then the cross-seed mean and sample standard deviation.
pub fn aggregate_last100(per_seed: &[Vec<EpisodeRecord>]) -> Result<Aggregate> {
    aggregate_last(per_seed, LAST_EPISODES)
}

pub fn aggregate_last(per_seed: &[Vec<EpisodeRecord>], window: usize) -> Result<Aggregate> {
    if per_seed.is_empty() {
        return Err(Error::Aggregation("no seeds to aggregate".into()));
    }
    if window == 0 {
        return Err(Error::Aggregation("aggregation window must be positive".into()));
    }
    let means = per_seed
        .iter()
        .enumerate()
        .map(|(i, recs)| {
            if recs.is_empty() {
                return Err(Error::Aggregation(format!("seed index {i} has no finished episodes")));
            }
            let tail = &recs[recs.len().saturating_sub(window)..];
            Ok(tail.iter().map(|r| r.return_ext).sum::<f64>() / tail.len() as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    let (mean, std) = mean_std(&means);
    Ok(Aggregate { per_seed: means, mean, std })
}

pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = if xs.len() > 1 { (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

/// Aggregate result of one variant on one environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub env: String,
    pub variant: String,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub env: String,
    pub variant: String,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    /// True iff this row's mean strictly exceeds the baseline's on the same environment.
    pub beats_baseline: bool,
    pub is_baseline: bool,
    /// Highest mean on its environment, ties going to the baseline and then to
    /// the earlier row.
    pub winner: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
}

/// One row per (environment, variant), baseline rows first.
pub fn compare(baseline: &[VariantSummary], variants: &[VariantSummary]) -> Result<ComparisonTable> {
    let mut base: BTreeMap<&str, &VariantSummary> = BTreeMap::new();
    for b in baseline {
        if base.insert(&b.env, b).is_some() {
            return Err(Error::Aggregation(format!("two baseline rows for environment {}", b.env)));
        }
    }
    let base_envs: BTreeSet<&str> = base.keys().copied().collect();
    let var_envs: BTreeSet<&str> = variants.iter().map(|v| v.env.as_str()).collect();
    if base_envs != var_envs {
        let only_base: Vec<_> = base_envs.difference(&var_envs).collect();
        let only_var: Vec<_> = var_envs.difference(&base_envs).collect();
        return Err(Error::Aggregation(format!(
            "environment sets differ: baseline only {only_base:?}, variants only {only_var:?}"
        )));
    }

    let mut rows = Vec::new();
    for (env, b) in &base {
        let row = |s: &VariantSummary, is_baseline: bool| ComparisonRow {
            env: env.to_string(),
            variant: s.variant.clone(),
            per_seed: s.aggregate.per_seed.clone(),
            mean: s.aggregate.mean,
            std: s.aggregate.std,
            beats_baseline: !is_baseline && s.aggregate.mean > b.aggregate.mean,
            is_baseline,
            winner: false,
        };
        let start = rows.len();
        rows.push(row(b, true));
        rows.extend(variants.iter().filter(|v| v.env == *env).map(|v| row(v, false)));
        let mut best = start;
        for i in start + 1..rows.len() {
            if rows[i].mean > rows[best].mean {
                best = i;
            }
        }
        rows[best].winner = true;
    }
    Ok(ComparisonTable { rows })
}

impl ComparisonTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("env,variant,mean,std,n_seeds,per_seed,beats_baseline,winner\n");
        for r in &self.rows {
            let per: Vec<String> = r.per_seed.iter().map(|x| format!("{x}")).collect();
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                csv_field(&r.env),
                csv_field(&r.variant),
                r.mean,
                r.std,
                r.per_seed.len(),
                per.join(";"),
                r.beats_baseline,
                r.winner
            );
        }
        s
    }

    pub fn winner(&self, env: &str) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.env == env && r.winner)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
