//! Experiment configuration files.
//!
//! A config is a TOML document with four tables:
//!
//! ```toml
//! [env]
//! id = "chain:40"
//!
//! [agent]
//! kind = "ppo"          # or "a2c"; every other key overrides that agent's defaults
//! step_size = 2.5e-4
//! hidden = [64, 64]
//!
//! [explore]
//! kind = "sporadic-rewards"
//! probability = 0.5
//!
//! [run]
//! total_steps = 100000
//! seeds = [1, 2, 3, 4, 5]
//! eval_interval = 0
//! out = "runs/chain-sr"
//! name = "sr"           # variant label used by compare and plot
//! ```
//!
//! Keys of the nested exploration settings (`eta_max`, `step_size` of the
//! novelty models, ...) may be given flat inside `[explore]` or in a
//! sub-table named after the group (`[explore.novelty]`). Keys that the
//! selected agent or exploration kind does not have are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::agents::{A2cConfig, AgentConfig, PpoConfig};
use crate::error::{Error, Result};
use crate::exploration::{
    DensityForm, ExplorationConfig, NoveltyConfig, PolicyShapeConfig, RewardPerturbConfig,
};

pub const SECTIONS: [&str; 4] = ["env", "agent", "explore", "run"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub env_id: String,
    pub agent: AgentConfig,
    pub explore: ExplorationConfig,
    pub total_steps: u64,
    pub seeds: Vec<u64>,
    /// Steps between deterministic evaluation episodes; 0 disables evaluation.
    pub eval_interval: u64,
    pub out: PathBuf,
}

/// Command line values that replace the file's `run.*` keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub total_steps: Option<u64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: toml::Table = text.parse().map_err(|e| Error::config(format!("invalid TOML: {e}")))?;
        Self::from_table(&table)
    }

    pub fn from_table(table: &toml::Table) -> Result<Self> {
        for key in table.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(Error::config(format!("unknown config section `{key}`")));
            }
        }
        let section = |name: &str| -> Result<toml::Table> {
            match table.get(name) {
                None => Ok(toml::Table::new()),
                Some(toml::Value::Table(t)) => Ok(t.clone()),
                Some(_) => Err(Error::config(format!("`{name}` must be a table"))),
            }
        };
        let env = section("env")?;
        let mut run = section("run")?;

        let env_id = match env.get("id") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(_) => return Err(Error::config("env.id must be a string")),
            None => return Err(Error::config("env.id is required")),
        };
        if let Some(k) = env.keys().find(|k| *k != "id") {
            return Err(Error::config(format!("unknown key env.{k}")));
        }
        crate::envs::make_env(&env_id)?;

        let agent = parse_agent(section("agent")?)?;
        let explore = parse_explore(section("explore")?)?;

        let mut take = |key: &str| run.remove(key);
        let total_steps = match take("total_steps") {
            Some(v) => as_u64(&v, "run.total_steps")?,
            None => return Err(Error::config("run.total_steps is required")),
        };
        let seeds = match take("seeds") {
            Some(toml::Value::Array(a)) => a.iter().map(|v| as_u64(v, "run.seeds")).collect::<Result<Vec<_>>>()?,
            Some(v) => vec![as_u64(&v, "run.seeds")?],
            None => vec![0],
        };
        let eval_interval = take("eval_interval").map(|v| as_u64(&v, "run.eval_interval")).transpose()?.unwrap_or(0);
        let out = match take("out") {
            Some(toml::Value::String(s)) => PathBuf::from(s),
            Some(_) => return Err(Error::config("run.out must be a string")),
            None => PathBuf::from("runs"),
        };
        let name = match take("name") {
            Some(toml::Value::String(s)) => s,
            Some(_) => return Err(Error::config("run.name must be a string")),
            None => explore.kind().to_string(),
        };
        if let Some(k) = run.keys().next() {
            return Err(Error::config(format!("unknown key run.{k}")));
        }

        let cfg = ExperimentConfig { name, env_id, agent, explore, total_steps, seeds, eval_interval, out };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(s) = o.seed {
            self.seeds = vec![s];
        }
        if let Some(n) = o.total_steps {
            self.total_steps = n;
        }
        if let Some(p) = &o.out {
            self.out = p.clone();
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        self.agent.validate()?;
        self.explore.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::config("run.seeds must not be empty"));
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config("run.seeds must be distinct"));
        }
        if self.total_steps == 0 {
            return Err(Error::config("run.total_steps must be positive"));
        }
        if self.total_steps < self.agent.horizon() as u64 {
            return Err(Error::config(format!(
                "run.total_steps ({}) is shorter than the agent horizon ({})",
                self.total_steps,
                self.agent.horizon()
            )));
        }
        Ok(())
    }

    /// Canonical JSON form used for the manifest echo and the content hash.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&serde_json::to_value(self)?)?)
    }

    /// Content hash in the style of a git blob id, with SHA-256:
    /// `sha256("blob <len>\0" ++ canonical_json)`. The output directory is
    /// blanked first, so the same experiment hashes alike wherever it is written.
    pub fn content_hash(&self) -> Result<String> {
        let body = ExperimentConfig { out: PathBuf::new(), ..self.clone() }.canonical_json()?;
        let mut h = Sha256::new();
        h.update(format!("blob {}\0", body.len()).as_bytes());
        h.update(body.as_bytes());
        Ok(hex::encode(h.finalize()))
    }
}

fn as_u64(v: &toml::Value, what: &str) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(Error::config(format!("{what} must be a nonnegative integer"))),
    }
}

fn to_json(v: &toml::Value) -> Result<Value> {
    serde_json::to_value(v).map_err(Error::from)
}

fn take_kind(t: &mut toml::Table, section: &str, default: &str) -> Result<String> {
    match t.remove("kind") {
        Some(toml::Value::String(s)) => Ok(s),
        Some(_) => Err(Error::config(format!("{section}.kind must be a string"))),
        None => Ok(default.to_string()),
    }
}

/// Writes `key = value` into `target` or into one of its nested objects.
/// `hidden` names fields that are derived and may not be set.
fn set_key(target: &mut Map<String, Value>, key: &str, value: Value, section: &str, hidden: &[&str]) -> Result<()> {
    if hidden.contains(&key) {
        return Err(Error::config(format!("{section}.{key} is set by the exploration kind")));
    }
    if let Some(slot) = target.get_mut(key) {
        match (slot, value) {
            (Value::Object(inner), Value::Object(fields)) => {
                for (k, v) in fields {
                    set_key(inner, &k, v, &format!("{section}.{key}"), hidden)?;
                }
            }
            (slot, value) => *slot = value,
        }
        return Ok(());
    }
    let owners: Vec<&mut Map<String, Value>> = target
        .values_mut()
        .filter_map(|v| v.as_object_mut())
        .filter(|o| o.contains_key(key))
        .collect();
    match owners.len() {
        1 => {
            let owner = owners.into_iter().next().unwrap();
            owner.insert(key.to_string(), value);
            Ok(())
        }
        0 => Err(Error::config(format!("unknown key {section}.{key}"))),
        _ => Err(Error::config(format!("ambiguous key {section}.{key}; use a sub-table"))),
    }
}

fn merge<T: Serialize + for<'de> Deserialize<'de>>(
    default: &T,
    overrides: toml::Table,
    section: &str,
    hidden: &[&str],
) -> Result<T> {
    let mut value = serde_json::to_value(default)?;
    let obj = value.as_object_mut().expect("config structs serialize to objects");
    for (k, v) in overrides {
        set_key(obj, &k, to_json(&v)?, section, hidden)?;
    }
    serde_json::from_value(value).map_err(|e| Error::config(format!("invalid value in [{section}]: {e}")))
}

pub fn parse_agent(mut t: toml::Table) -> Result<AgentConfig> {
    let kind = take_kind(&mut t, "agent", "ppo")?;
    let cfg = match kind.as_str() {
        "ppo" => AgentConfig::Ppo(merge(&PpoConfig::default(), t, "agent", &[])?),
        "a2c" => AgentConfig::A2c(merge(&A2cConfig::default(), t, "agent", &[])?),
        other => return Err(Error::config(format!("unknown agent kind `{other}` (expected ppo or a2c)"))),
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_explore(mut t: toml::Table) -> Result<ExplorationConfig> {
    let kind = take_kind(&mut t, "explore", "none")?;
    let default = match kind.as_str() {
        "none" => ExplorationConfig::None,
        "sporadic-rewards" => ExplorationConfig::SporadicRewards(RewardPerturbConfig::default()),
        "sporadic-shaping" => ExplorationConfig::SporadicShaping(PolicyShapeConfig::default()),
        "structured-shaping" => ExplorationConfig::StructuredShaping {
            shape: PolicyShapeConfig::default(),
            novelty: NoveltyConfig::default(),
        },
        "count-bonus" => ExplorationConfig::CountBonus { beta: 0.01, density_form: DensityForm::Recoding },
        "prediction-bonus" => ExplorationConfig::PredictionBonus { beta: 0.01, novelty: NoveltyConfig::default() },
        "param-noise" => ExplorationConfig::ParamNoise { sigma: 0.01 },
        other => {
            return Err(Error::config(format!(
                "unknown explore kind `{other}` (expected one of {})",
                ExplorationConfig::KINDS.join(", ")
            )))
        }
    };
    let cfg: ExplorationConfig = merge(&default, t, "explore", &["mode"])?;
    cfg.validate()?;
    Ok(cfg)
}
