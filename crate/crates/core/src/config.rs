//! Run configuration: profile defaults, a flat TOML file, command-line
//! overrides and the `DISCO_SEED` environment variable, in that order of
//! increasing precedence for the seed (command line wins over the variable).

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

use crate::eval::ProbeSpec;
use crate::synth::{RstLabelMode, SplitCounts, TaskKind, DEFAULT_CANDIDATE_POOL};
use crate::train::{LossConfig, LossKind};

pub const SEED_ENV: &str = "DISCO_SEED";

pub const KEYS: [&str; 16] = [
    "corpus_path",
    "vectors_path",
    "out_dir",
    "profile",
    "seed",
    "losses",
    "loss_weights",
    "hidden_dim",
    "word_dim",
    "batch_size",
    "spp_caps",
    "tasks",
    "probe_l2_grid",
    "rst_label_mode",
    "dc_candidate_pool",
    "counts",
];

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("unknown configuration key {0:?}")]
    UnknownKey(String),
    #[error("invalid value for {key}: {reason}")]
    InvalidValue { key: String, reason: String },
    #[error("path does not exist: {0}")]
    MissingPath(PathBuf),
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::InvalidValue {
        key: key.to_string(),
        reason: reason.into(),
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Small dimensions for laptops and tests.
    #[default]
    Desk,
    /// Full-size encoder: 1200-unit BiGRUs over 300-d word vectors.
    Paper,
}

impl Profile {
    pub fn name(self) -> &'static str {
        match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(format!("expected \"desk\" or \"paper\", got {other:?}")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub vectors_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub profile: Profile,
    pub seed: u64,
    pub losses: Vec<LossKind>,
    pub loss_weights: BTreeMap<LossKind, f64>,
    pub hidden_dim: usize,
    pub word_dim: usize,
    pub batch_size: usize,
    pub spp_caps: (usize, usize),
    pub tasks: Vec<TaskKind>,
    pub probe_l2_grid: Vec<f64>,
    pub rst_label_mode: RstLabelMode,
    pub dc_candidate_pool: usize,
    pub counts: SplitCounts,
    /// Fixed at one; not configurable.
    pub epochs: usize,
}

impl RunConfig {
    pub fn defaults(profile: Profile) -> Self {
        let (hidden_dim, word_dim, counts) = match profile {
            Profile::Desk => (32, 32, SplitCounts::new(1000, 400, 400)),
            Profile::Paper => (1200, 300, SplitCounts::new(10000, 4000, 4000)),
        };
        RunConfig {
            corpus_path: None,
            vectors_path: None,
            out_dir: PathBuf::from("out"),
            profile,
            seed: 13,
            losses: vec![LossKind::Nsp],
            loss_weights: LossKind::ALL.iter().map(|&k| (k, 1.0)).collect(),
            hidden_dim,
            word_dim,
            batch_size: 64,
            spp_caps: (32, 64),
            tasks: TaskKind::ALL.to_vec(),
            probe_l2_grid: ProbeSpec::DEFAULT_L2_GRID.to_vec(),
            rst_label_mode: RstLabelMode::default(),
            dc_candidate_pool: DEFAULT_CANDIDATE_POOL,
            counts,
            epochs: 1,
        }
    }

    /// Training configuration derived from this run.
    pub fn loss_config(&self) -> LossConfig {
        let mut c = LossConfig::new(&self.losses, self.seed);
        c.weights = self.loss_weights.clone();
        c.spp_caps = self.spp_caps;
        c.batch_size = self.batch_size;
        c
    }

    /// Every resolved value, as TOML (the effective-config echo).
    pub fn to_toml(&self) -> String {
        let mut t = Table::new();
        let path = |p: &Option<PathBuf>| Value::String(p.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        t.insert("corpus_path".into(), path(&self.corpus_path));
        t.insert("vectors_path".into(), path(&self.vectors_path));
        t.insert("out_dir".into(), Value::String(self.out_dir.display().to_string()));
        t.insert("profile".into(), Value::String(self.profile.name().into()));
        t.insert("seed".into(), Value::Integer(self.seed as i64));
        t.insert(
            "losses".into(),
            Value::Array(self.losses.iter().map(|l| Value::String(l.name().into())).collect()),
        );
        let weights: Table = self
            .loss_weights
            .iter()
            .map(|(k, w)| (k.name().to_string(), Value::Float(*w)))
            .collect();
        t.insert("loss_weights".into(), Value::Table(weights));
        t.insert("hidden_dim".into(), Value::Integer(self.hidden_dim as i64));
        t.insert("word_dim".into(), Value::Integer(self.word_dim as i64));
        t.insert("batch_size".into(), Value::Integer(self.batch_size as i64));
        t.insert(
            "spp_caps".into(),
            Value::Array(vec![
                Value::Integer(self.spp_caps.0 as i64),
                Value::Integer(self.spp_caps.1 as i64),
            ]),
        );
        t.insert(
            "tasks".into(),
            Value::Array(self.tasks.iter().map(|k| Value::String(k.name().into())).collect()),
        );
        t.insert(
            "probe_l2_grid".into(),
            Value::Array(self.probe_l2_grid.iter().map(|v| Value::Float(*v)).collect()),
        );
        let mode = match self.rst_label_mode {
            RstLabelMode::Relation => "relation",
            RstLabelMode::NuclearityRelation => "nuclearity_relation",
        };
        t.insert("rst_label_mode".into(), Value::String(mode.into()));
        t.insert("dc_candidate_pool".into(), Value::Integer(self.dc_candidate_pool as i64));
        t.insert(
            "counts".into(),
            Value::Array(
                [self.counts.train, self.counts.dev, self.counts.test]
                    .iter()
                    .map(|&c| Value::Integer(c as i64))
                    .collect(),
            ),
        );
        toml::to_string(&t).expect("plain table serializes")
    }

    fn apply(&mut self, key: &str, value: &Value) -> Result<(), ConfigError> {
        match key {
            "corpus_path" => self.corpus_path = opt_path(key, value)?,
            "vectors_path" => self.vectors_path = opt_path(key, value)?,
            "out_dir" => self.out_dir = PathBuf::from(string(key, value)?),
            "profile" => {
                let p: Profile = string(key, value)?.parse().map_err(|e: String| invalid(key, e))?;
                if p != self.profile {
                    return Err(invalid(key, "profile must be resolved before other keys"));
                }
            }
            "seed" => self.seed = uint(key, value)? as u64,
            "losses" => {
                self.losses = array(key, value)?
                    .iter()
                    .map(|v| string(key, v)?.parse::<LossKind>().map_err(|e| invalid(key, e)))
                    .collect::<Result<_, _>>()?;
                if !self.losses.contains(&LossKind::Nsp) {
                    self.losses.insert(0, LossKind::Nsp);
                }
                self.losses.sort();
                self.losses.dedup();
            }
            "loss_weights" => {
                let Value::Table(t) = value else {
                    return Err(invalid(key, "expected a table of loss = weight"));
                };
                for (name, w) in t {
                    let kind: LossKind = name.parse().map_err(|e| invalid(key, e))?;
                    let w = float(key, w)?;
                    if !(w.is_finite() && w >= 0.0) {
                        return Err(invalid(key, format!("weight of {name} must be finite and >= 0")));
                    }
                    self.loss_weights.insert(kind, w);
                }
            }
            "hidden_dim" => self.hidden_dim = positive(key, value)?,
            "word_dim" => self.word_dim = positive(key, value)?,
            "batch_size" => self.batch_size = positive(key, value)?,
            "spp_caps" => {
                let v = array(key, value)?;
                let [a, b] = v.as_slice() else {
                    return Err(invalid(key, "expected a pair [sentence_cap, paragraph_cap]"));
                };
                self.spp_caps = (positive(key, a)?, positive(key, b)?);
            }
            "tasks" => {
                let mut tasks = Vec::new();
                for v in array(key, value)? {
                    let s = string(key, v)?;
                    if s == "all" {
                        tasks.extend(TaskKind::ALL);
                    } else {
                        tasks.push(s.parse::<TaskKind>().map_err(|e| invalid(key, e.to_string()))?);
                    }
                }
                if tasks.is_empty() {
                    return Err(invalid(key, "at least one task required"));
                }
                tasks.sort();
                tasks.dedup();
                self.tasks = tasks;
            }
            "probe_l2_grid" => {
                let grid: Vec<f64> = array(key, value)?.iter().map(|v| float(key, v)).collect::<Result<_, _>>()?;
                if grid.is_empty() || grid.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
                    return Err(invalid(key, "expected a non-empty list of non-negative numbers"));
                }
                self.probe_l2_grid = grid;
            }
            "rst_label_mode" => {
                self.rst_label_mode = string(key, value)?.parse().map_err(|e: String| invalid(key, e))?
            }
            "dc_candidate_pool" => self.dc_candidate_pool = positive(key, value)?,
            "counts" => {
                let v = array(key, value)?;
                let [a, b, c] = v.as_slice() else {
                    return Err(invalid(key, "expected a triple [train, dev, test]"));
                };
                self.counts = SplitCounts::new(uint(key, a)?, uint(key, b)?, uint(key, c)?);
            }
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    fn check_paths(&self) -> Result<(), ConfigError> {
        for p in [&self.corpus_path, &self.vectors_path].into_iter().flatten() {
            if !p.exists() {
                return Err(ConfigError::MissingPath(p.clone()));
            }
        }
        Ok(())
    }
}

fn string<'a>(key: &str, v: &'a Value) -> Result<&'a str, ConfigError> {
    v.as_str().ok_or_else(|| invalid(key, format!("expected a string, got {v}")))
}

fn opt_path(key: &str, v: &Value) -> Result<Option<PathBuf>, ConfigError> {
    let s = string(key, v)?;
    Ok((!s.is_empty()).then(|| PathBuf::from(s)))
}

fn uint(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match v.as_integer() {
        Some(i) if i >= 0 => Ok(i as usize),
        _ => Err(invalid(key, format!("expected a non-negative integer, got {v}"))),
    }
}

fn positive(key: &str, v: &Value) -> Result<usize, ConfigError> {
    match uint(key, v)? {
        0 => Err(invalid(key, "must be positive")),
        n => Ok(n),
    }
}

fn float(key: &str, v: &Value) -> Result<f64, ConfigError> {
    v.as_float()
        .or_else(|| v.as_integer().map(|i| i as f64))
        .ok_or_else(|| invalid(key, format!("expected a number, got {v}")))
}

fn array<'a>(key: &str, v: &'a Value) -> Result<&'a Vec<Value>, ConfigError> {
    v.as_array().ok_or_else(|| invalid(key, format!("expected a list, got {v}")))
}

fn profile_of(t: &Table) -> Result<Option<Profile>, ConfigError> {
    t.get("profile")
        .map(|v| string("profile", v)?.parse().map_err(|e: String| invalid("profile", e)))
        .transpose()
}

/// Merges profile defaults, the file's keys, `overrides` and the seed
/// variable. Paths are checked for existence last.
pub fn resolve_config(file: &str, overrides: &Table, env_seed: Option<&str>) -> Result<RunConfig, ConfigError> {
    let file: Table = toml::from_str(file).map_err(|e| invalid("<file>", e.message().to_string()))?;
    if let Some(k) = file.keys().chain(overrides.keys()).find(|k| !KEYS.contains(&k.as_str())) {
        return Err(ConfigError::UnknownKey(k.clone()));
    }
    let profile = match profile_of(overrides)? {
        Some(p) => p,
        None => profile_of(&file)?.unwrap_or_default(),
    };
    let mut cfg = RunConfig::defaults(profile);
    for (k, v) in file.iter().filter(|(k, _)| *k != "profile") {
        cfg.apply(k, v)?;
    }
    if let Some(s) = env_seed {
        cfg.seed = s
            .trim()
            .parse()
            .map_err(|e| invalid("seed", format!("{SEED_ENV}={s:?}: {e}")))?;
    }
    for (k, v) in overrides.iter().filter(|(k, _)| *k != "profile") {
        cfg.apply(k, v)?;
    }
    cfg.check_paths()?;
    Ok(cfg)
}

/// Reads `path` (or starts from the defaults when `None`) and resolves it
/// with `overrides` and the `DISCO_SEED` variable.
pub fn load_config(path: Option<&Path>, overrides: &Table) -> Result<RunConfig, ConfigError> {
    let text = match path {
        Some(p) => fs::read_to_string(p).map_err(|_| ConfigError::MissingPath(p.to_path_buf()))?,
        None => String::new(),
    };
    let env = std::env::var(SEED_ENV).ok();
    resolve_config(&text, overrides, env.as_deref())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn desk_defaults() {
        let c = resolve_config("", &Table::new(), None).unwrap();
        assert_eq!((c.hidden_dim, c.word_dim, c.batch_size, c.seed), (32, 32, 64, 13));
        assert_eq!(c.profile, Profile::Desk);
        assert_eq!(c.epochs, 1);
    }

    #[test]
    fn paper_profile() {
        let c = resolve_config("profile = \"paper\"", &Table::new(), None).unwrap();
        assert_eq!((c.hidden_dim, c.word_dim, c.epochs), (1200, 300, 1));
        let c = resolve_config("profile = \"paper\"\nhidden_dim = 64", &Table::new(), None).unwrap();
        assert_eq!(c.hidden_dim, 64);
    }

    #[test]
    fn unknown_key() {
        assert_eq!(
            resolve_config("epochz = 3", &Table::new(), None),
            Err(ConfigError::UnknownKey("epochz".into()))
        );
    }

    #[test]
    fn invalid_values() {
        for text in [
            "hidden_dim = 0",
            "spp_caps = [32]",
            "losses = [\"xyz\"]",
            "rst_label_mode = \"flat\"",
            "counts = [1, 2]",
            "probe_l2_grid = [-1.0]",
            "seed = \"x\"",
        ] {
            assert!(
                matches!(resolve_config(text, &Table::new(), None), Err(ConfigError::InvalidValue { .. })),
                "{text}"
            );
        }
    }

    #[test]
    fn missing_path() {
        assert_eq!(
            resolve_config("corpus_path = \"/no/such/file.jsonl\"", &Table::new(), None),
            Err(ConfigError::MissingPath("/no/such/file.jsonl".into()))
        );
    }

    #[test]
    fn seed_precedence() {
        let c = resolve_config("seed = 5", &Table::new(), Some("7")).unwrap();
        assert_eq!(c.seed, 7);
        let mut o = Table::new();
        o.insert("seed".into(), Value::Integer(9));
        assert_eq!(resolve_config("seed = 5", &o, Some("7")).unwrap().seed, 9);
    }

    #[test]
    fn echo_round_trips() {
        let text = "losses = [\"sdt\", \"nl\"]\ntasks = [\"rst\", \"sp\"]\ncounts = [10, 4, 4]\n[loss_weights]\nnl = 0.5\n";
        let c = resolve_config(text, &Table::new(), None).unwrap();
        assert_eq!(c.losses, vec![LossKind::Nsp, LossKind::Nl, LossKind::Sdt]);
        assert_eq!(c.tasks, vec![TaskKind::Sp, TaskKind::Rst]);
        let again = resolve_config(&c.to_toml(), &Table::new(), None).unwrap();
        assert_eq!(again, c);
    }
}
