//! Strict run configuration. Unknown keys are fatal.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contract::{builtin_template, Contract, ScopeSpec, TaskForm};
use crate::error::{Error, Result};
use crate::grid::TimeSplit;
use crate::heads::{RegretMode, TrainConfig};
use crate::metrics::MetricId;

/// Time ranges as `[start, end)` pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: [u32; 2],
    pub val: [u32; 2],
    pub test: [u32; 2],
}

impl SplitSpec {
    pub fn to_split(self) -> Result<TimeSplit> {
        TimeSplit::new(self.train[0]..self.train[1], self.val[0]..self.val[1], self.test[0]..self.test[1])
    }

    pub fn from_split(s: &TimeSplit) -> Self {
        Self {
            train: [s.train.start, s.train.end],
            val: [s.validation.start, s.validation.end],
            test: [s.test.start, s.test.end],
        }
    }
}

/// Parses `a:b` into `[a, b]`.
pub fn parse_range(s: &str) -> Result<[u32; 2]> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::Usage(format!("time range {s:?} must look like start:end")))?;
    let n = |v: &str| v.trim().parse::<u32>().map_err(|_| Error::Usage(format!("bad time index {v:?}")));
    Ok([n(a)?, n(b)?])
}

/// Everything a run depends on. Paths are resolved against the directory
/// of the file they were read from.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Inline contract.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract: Option<Contract>,
    /// Contract file or `task/metric/scope` shorthand for a built-in contract.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contract_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
    /// Fixed decision threshold; selected on validation when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    /// Overrides `train.seeds`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seeds: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub regret_mode: Option<RegretMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scopes: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<TrainConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.scores, &mut self.labels, &mut self.features, &mut self.out].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(r) = &mut self.contract_ref {
            let candidate = base.join(&*r);
            if Path::new(r).is_relative() && candidate.exists() {
                *r = candidate.to_string_lossy().into_owned();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.contract.is_some() && self.contract_ref.is_some() {
            return Err(Error::Config("give either contract or contract_ref, not both".into()));
        }
        if let Some(c) = &self.contract {
            c.validate()?;
        }
        if let Some(s) = self.split {
            s.to_split()?;
        }
        if let Some(t) = &self.train {
            t.validate()?;
        }
        if self.tau.is_some_and(|t| !t.is_finite()) {
            return Err(Error::Config("tau must be finite".into()));
        }
        if self.seeds.as_ref().is_some_and(|s| s.is_empty()) {
            return Err(Error::Config("seeds must not be empty".into()));
        }
        Ok(())
    }

    pub fn resolve_contract(&self) -> Result<Option<Contract>> {
        match (&self.contract, &self.contract_ref) {
            (Some(c), _) => Ok(Some(c.clone())),
            (None, Some(r)) => load_contract(r).map(Some),
            (None, None) => Ok(None),
        }
    }

    /// Training settings with the seed override applied.
    pub fn train_config(&self, default: TrainConfig) -> TrainConfig {
        let mut cfg = self.train.clone().unwrap_or(default);
        if let Some(seeds) = &self.seeds {
            cfg.seeds = seeds.clone();
        }
        cfg
    }
}

/// Loads a contract from a JSON file, or builds a built-in one from a
/// `task/metric/scope` shorthand such as `occupancy/union_f1/top5`.
pub fn load_contract(reference: &str) -> Result<Contract> {
    let path = Path::new(reference);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        return Contract::from_json(&text);
    }
    let parts: Vec<&str> = reference.split('/').collect();
    let [task, metric, scope] = parts[..] else {
        return Err(Error::Usage(format!("contract {reference:?} is neither a file nor task/metric/scope")));
    };
    let task: TaskForm = serde_json::from_value(serde_json::Value::String(task.into()))
        .map_err(|_| Error::Usage(format!("unknown task form {task:?}")))?;
    let metric: MetricId = serde_json::from_value(serde_json::Value::String(metric.into()))
        .map_err(|_| Error::Usage(format!("unknown metric {metric:?}")))?;
    builtin_template(task).contract(metric, ScopeSpec::parse_label(scope)?)
}
