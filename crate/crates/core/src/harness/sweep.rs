//! Cartesian grid search over config keys.
//!
//! A grid file mirrors the config layout, with every leaf replaced by the
//! list of values to try:
//!
//! ```toml
//! [agent]
//! step_size = [7e-4, 2.5e-4]
//! hidden = [[64, 64], [32]]
//!
//! [explore]
//! probability = [0.25, 0.5]
//! ```
//!
//! Each cell is a full experiment with the base config's seeds, written to
//! `<out>/cell-<i>`. The cell with the highest cross-seed last-100 mean wins,
//! ties going to the earlier cell.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::aggregate::{aggregate_last100, Aggregate};
use super::config::{ExperimentConfig, SECTIONS};
use super::run::{run_experiment, RunLogs};
use crate::error::{Error, Result};

/// One axis: `section.key` and its candidate values.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub section: String,
    pub key: String,
    pub values: Vec<toml::Value>,
}

impl Axis {
    pub fn name(&self) -> String {
        format!("{}.{}", self.section, self.key)
    }
}

pub fn parse_grid(text: &str) -> Result<Vec<Axis>> {
    let table: toml::Table = text.parse().map_err(|e| Error::config(format!("invalid grid TOML: {e}")))?;
    let mut axes = Vec::new();
    for (section, body) in &table {
        if !SECTIONS.contains(&section.as_str()) {
            return Err(Error::config(format!("unknown grid section `{section}`")));
        }
        let body = body.as_table().ok_or_else(|| Error::config(format!("grid section `{section}` must be a table")))?;
        for (key, values) in body {
            let values = match values {
                toml::Value::Array(a) if !a.is_empty() => a.clone(),
                _ => return Err(Error::config(format!("grid axis {section}.{key} must be a nonempty list"))),
            };
            axes.push(Axis { section: section.clone(), key: key.clone(), values });
        }
    }
    if axes.is_empty() {
        return Err(Error::config("grid has no axes"));
    }
    Ok(axes)
}

/// All value combinations, the last axis varying fastest.
pub fn cells(axes: &[Axis]) -> Vec<Vec<toml::Value>> {
    let mut out: Vec<Vec<toml::Value>> = vec![vec![]];
    for axis in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut c = prefix.clone();
                    c.push(v.clone());
                    c
                })
            })
            .collect();
    }
    out
}

/// Applies one cell to the base config table and parses the result, so keys
/// unknown to the selected agent or exploration kind are rejected.
pub fn cell_config(base: &toml::Table, axes: &[Axis], values: &[toml::Value], out: PathBuf, name: String) -> Result<ExperimentConfig> {
    let mut table = base.clone();
    for (axis, v) in axes.iter().zip(values) {
        let section = table
            .entry(axis.section.clone())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| Error::config(format!("`{}` must be a table", axis.section)))?;
        section.insert(axis.key.clone(), v.clone());
    }
    let mut cfg = ExperimentConfig::from_table(&table)
        .map_err(|e| Error::config(format!("grid cell {}: {e}", render_cell(axes, values))))?;
    cfg.out = out;
    cfg.name = name;
    Ok(cfg)
}

fn render_cell(axes: &[Axis], values: &[toml::Value]) -> String {
    axes.iter().zip(values).map(|(a, v)| format!("{}={}", a.name(), v)).collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepCell {
    pub index: usize,
    pub settings: Vec<(String, String)>,
    pub out: PathBuf,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub best: usize,
    pub best_config: ExperimentConfig,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("cell");
        for (k, _) in &self.cells[0].settings {
            let _ = write!(s, ",{k}");
        }
        s.push_str(",mean,std,best\n");
        for c in &self.cells {
            let _ = write!(s, "{}", c.index);
            for (_, v) in &c.settings {
                let _ = write!(s, ",\"{}\"", v.replace('"', "\"\""));
            }
            let _ = writeln!(s, ",{},{},{}", c.aggregate.mean, c.aggregate.std, c.index == self.best);
        }
        s
    }
}

/// Runs every cell of `axes` over `base` and writes `<out>/sweep.csv`.
/// All cells are validated before the first one runs.
pub fn sweep(base: &toml::Table, axes: &[Axis], out: &Path) -> Result<SweepResult> {
    let base_name = ExperimentConfig::from_table(base).map(|c| c.name).unwrap_or_else(|_| "sweep".into());
    let combos = cells(axes);
    let configs = combos
        .iter()
        .enumerate()
        .map(|(i, vals)| cell_config(base, axes, vals, out.join(format!("cell-{i}")), format!("{base_name}/cell-{i}")))
        .collect::<Result<Vec<_>>>()?;

    let mut result_cells = Vec::new();
    for (i, (cfg, vals)) in configs.iter().zip(&combos).enumerate() {
        let manifest = run_experiment(cfg)?;
        if let Some(f) = manifest.failed().next() {
            return Err(Error::Numerical(format!(
                "grid cell {i} seed {} failed: {}",
                f.seed,
                f.error.clone().unwrap_or_default()
            )));
        }
        let logs = RunLogs::load(&cfg.out)?;
        let aggregate = aggregate_last100(&logs.records)?;
        let settings = axes.iter().zip(vals).map(|(a, v)| (a.name(), v.to_string())).collect();
        result_cells.push(SweepCell { index: i, settings, out: cfg.out.clone(), aggregate });
    }
    let mut best = 0;
    for (i, c) in result_cells.iter().enumerate() {
        if c.aggregate.mean > result_cells[best].aggregate.mean {
            best = i;
        }
    }
    let result = SweepResult { best_config: configs[best].clone(), cells: result_cells, best };
    std::fs::write(out.join("sweep.csv"), result.to_csv())?;
    std::fs::write(out.join("best.json"), serde_json::to_string_pretty(&result.best_config)? + "\n")?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing_and_product() {
        let axes = parse_grid("[agent]\nstep_size=[1e-3, 1e-4]\nhidden=[[8],[4,4],[2]]\n").unwrap();
        assert_eq!(axes.len(), 2);
        let cs = cells(&axes);
        assert_eq!(cs.len(), 6);
        assert_eq!(cs[0][0], cs[1][0]);
        assert_ne!(cs[0][1], cs[1][1]);
    }

    #[test]
    fn malformed_grids_are_rejected() {
        for g in ["", "[agent]\nstep_size = 1e-3", "[agent]\nstep_size = []", "[model]\nx = [1]"] {
            assert!(parse_grid(g).is_err(), "accepted {g:?}");
        }
    }

    #[test]
    fn unknown_keys_fail_before_running() {
        let base: toml::Table = "[env]\nid='bandit'\n[agent]\nn_actors=1\nhorizon=4\n[run]\ntotal_steps=8".parse().unwrap();
        let axes = parse_grid("[agent]\nlearning_rate=[1e-3]").unwrap();
        let dir = tempfile::tempdir().unwrap();
        assert!(sweep(&base, &axes, dir.path()).is_err());
        assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none());
    }
}
