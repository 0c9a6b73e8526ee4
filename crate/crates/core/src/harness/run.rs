//! Seeded multi-run training with per-episode logs.
//!
//! Layout of a run directory:
//!
//! * `manifest.json`: config echo, content hash, per-seed status;
//! * `seed-<s>.jsonl`: one [`EpisodeRecord`] per line, appended as episodes finish;
//! * `eval-<s>.jsonl`: deterministic evaluation episodes, when enabled;
//! * `seed-<s>.policy.pxnn`, `seed-<s>.value.pxnn`: final network checkpoints.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::agents::{derive_seed, Learner, Trainer};
use crate::envs::make_env;
use crate::error::{Error, Result};
use crate::numerics::write_checkpoint;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub seed: u64,
    pub episode: u64,
    pub global_step: u64,
    /// Sum of environment rewards; exploration bonuses are never included.
    pub return_ext: f64,
    /// Sum of the rewards the learner trained on.
    pub return_learner: f64,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub seed: u64,
    pub global_step: u64,
    pub return_ext: f64,
    pub length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedState {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedStatus {
    pub seed: u64,
    pub status: SeedState,
    pub episodes: u64,
    pub global_step: u64,
    pub log: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub env_id: String,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub seeds: Vec<SeedStatus>,
}

impl Manifest {
    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn failed(&self) -> impl Iterator<Item = &SeedStatus> {
        self.seeds.iter().filter(|s| s.status == SeedState::Failed)
    }
}

pub fn log_file_name(seed: u64) -> String {
    format!("seed-{seed}.jsonl")
}

/// Trains every seed of `cfg` and writes the run directory `cfg.out`.
///
/// Seeds run in parallel. A numerical failure stops only the affected seed;
/// its partial log is kept and the manifest marks it failed.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    let config_hash = cfg.content_hash()?;
    let statuses: Vec<Result<SeedStatus>> = cfg.seeds.par_iter().map(|&seed| run_seed(cfg, seed)).collect();
    let seeds = statuses.into_iter().collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { name: cfg.name.clone(), env_id: cfg.env_id.clone(), config_hash, config: cfg.clone(), seeds };
    let mut f = BufWriter::new(File::create(cfg.out.join(MANIFEST))?);
    serde_json::to_writer_pretty(&mut f, &manifest)?;
    f.write_all(b"\n")?;
    f.flush()?;
    Ok(manifest)
}

fn run_seed(cfg: &ExperimentConfig, seed: u64) -> Result<SeedStatus> {
    let log = log_file_name(seed);
    let mut writer = BufWriter::new(File::create(cfg.out.join(&log))?);
    let mut eval_writer = match cfg.eval_interval {
        0 => None,
        _ => Some(BufWriter::new(File::create(cfg.out.join(format!("eval-{seed}.jsonl")))?)),
    };
    let mut trainer = Trainer::from_env_id(&cfg.env_id, cfg.agent.clone(), cfg.explore.clone(), cfg.total_steps, seed)?;
    let mut episode = 0u64;
    let mut next_eval = cfg.eval_interval;
    let mut eval_index = 0u64;

    let outcome: Result<()> = (|| {
        while !trainer.is_done() {
            let progress = trainer.progress();
            let mut rollout = trainer.collect_rollout(progress)?;
            for ep in trainer.collector.drain_completed() {
                let rec = EpisodeRecord {
                    seed,
                    episode,
                    global_step: ep.global_step,
                    return_ext: ep.return_ext,
                    return_learner: ep.return_learner,
                    length: ep.length,
                };
                serde_json::to_writer(&mut writer, &rec)?;
                writer.write_all(b"\n")?;
                episode += 1;
            }
            writer.flush()?;
            trainer.learner.update(&mut rollout, progress)?;
            if let Some(w) = eval_writer.as_mut() {
                while trainer.global_step() >= next_eval {
                    let env_seed = derive_seed(derive_seed(seed, 6), eval_index);
                    let (return_ext, length) = evaluate_episode(&trainer.learner, &cfg.env_id, env_seed)?;
                    let rec = EvalRecord { seed, global_step: trainer.global_step(), return_ext, length };
                    serde_json::to_writer(&mut *w, &rec)?;
                    w.write_all(b"\n")?;
                    w.flush()?;
                    eval_index += 1;
                    next_eval += cfg.eval_interval;
                }
            }
        }
        Ok(())
    })();

    let error = match outcome {
        Ok(()) => None,
        Err(Error::Numerical(msg)) => Some(msg),
        Err(e) => return Err(e),
    };
    writer.flush()?;
    write_checkpoint(&trainer.learner.policy, BufWriter::new(File::create(cfg.out.join(format!("seed-{seed}.policy.pxnn")))?))?;
    write_checkpoint(&trainer.learner.value, BufWriter::new(File::create(cfg.out.join(format!("seed-{seed}.value.pxnn")))?))?;
    Ok(SeedStatus {
        seed,
        status: if error.is_some() { SeedState::Failed } else { SeedState::Completed },
        episodes: episode,
        global_step: trainer.global_step(),
        log,
        error,
    })
}

/// Runs one greedy episode with the learner's unperturbed policy.
pub fn evaluate_episode(learner: &Learner, env_id: &str, env_seed: u64) -> Result<(f64, usize)> {
    let mut env = make_env(env_id)?;
    let mut obs = env.reset(env_seed);
    let (mut ret, mut len) = (0.0, 0usize);
    loop {
        let step = env.step(learner.greedy_action(&obs)?)?;
        ret += step.reward_ext;
        len += 1;
        if step.done() {
            return Ok((ret, len));
        }
        obs = step.observation;
    }
}

pub fn read_records(path: &Path) -> Result<Vec<EpisodeRecord>> {
    let f = File::open(path).map_err(|e| Error::config(format!("cannot open {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for line in BufReader::new(f).lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

/// Episode logs of one run directory, ordered by seed as listed in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLogs {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub records: Vec<Vec<EpisodeRecord>>,
}

impl RunLogs {
    pub fn load(dir: &Path) -> Result<Self> {
        let manifest = Manifest::read(dir)?;
        let records = manifest
            .seeds
            .iter()
            .map(|s| read_records(&dir.join(&s.log)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { dir: dir.to_path_buf(), manifest, records })
    }

    pub fn name(&self) -> &str {
        &self.manifest.name
    }

    pub fn env_id(&self) -> &str {
        &self.manifest.env_id
    }
}
