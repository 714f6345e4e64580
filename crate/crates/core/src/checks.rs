//! The two controlled checks: the fixed-output matching-rule sweep and the
//! fixed-feature head-selection audit, plus seed aggregation and rank maps.
//!
//! Every report row carries the full contracts it was scored under, and
//! every report echoes the engine conventions it was produced with. Rank
//! maps only ever compare entries whose contract and convention echo match.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::contract::{
    occupancy_union_rule, rank_within_contract, Contract, HeadFamilySpec, RankedEntry, ScopeSpec, ScoredEntry,
    TaskForm, OCCUPANCY_K,
};
use crate::error::{Error, Result};
use crate::grid::{threshold_scores, LabelField, OutputRecord, ScopeMask, TimeSplit};
use crate::heads::{evaluate_heads, regret, train_head, FeatureStack, HeadKind, HeadParams, RegretMode, TrainConfig};
use crate::matching::{decision_f1, MatchingRule};
use crate::metrics::{MetricId, MetricSpec, DEFAULT_CANDIDATES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedStat {
    pub mean: f64,
    /// Sample standard deviation (divisor n - 1), 0 for a single seed.
    pub std: f64,
    pub n_seeds: usize,
}

pub fn seed_aggregate(values: &[f64]) -> Result<SeedStat> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len();
    if values.iter().all(|&v| v == values[0]) {
        // summation rounding must not turn identical seeds into spread
        return Ok(SeedStat { mean: values[0], std: 0.0, n_seeds: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std =
        if n == 1 { 0.0 } else { (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() };
    Ok(SeedStat { mean, std, n_seeds: n })
}

/// Engine conventions that decide whether two reports are comparable.
pub type ConfigEcho = BTreeMap<String, Value>;

/// Conventions shared by every check.
pub fn engine_conventions() -> ConfigEcho {
    let mut c = ConfigEcho::new();
    c.insert("log_base".into(), json!(10));
    c.insert("f1_empty".into(), json!("zero"));
    c.insert("threshold_candidates".into(), json!(DEFAULT_CANDIDATES));
    c.insert("threshold_ties".into(), json!("smallest"));
    c.insert("head_ties".into(), json!("constant_prior<linear_probe<pixel_mlp<shallow_adapter<wide_adapter"));
    c.insert("rank_ties".into(), json!("name"));
    c.insert("fire_prone_ties".into(), json!("row_major"));
    c
}

/// The three matching rules a sweep compares, by column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRules {
    pub strict: MatchingRule,
    pub tolerated: MatchingRule,
    pub union: MatchingRule,
}

impl Default for SweepRules {
    fn default() -> Self {
        Self {
            strict: MatchingRule::Exact,
            tolerated: MatchingRule::tolerated(OCCUPANCY_K, 0),
            union: occupancy_union_rule(),
        }
    }
}

impl SweepRules {
    pub fn columns(&self) -> [(MetricId, &MatchingRule); 3] {
        [(MetricId::ExactF1, &self.strict), (MetricId::ToleratedF1, &self.tolerated), (MetricId::UnionF1, &self.union)]
    }
}

/// Fixed contract components of a sweep: everything except the scope and
/// the per-column matching rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSetup {
    pub task: TaskForm,
    pub rules: SweepRules,
    /// Rule the shared threshold was selected under.
    pub selection_rule: MatchingRule,
    pub head_family: HeadFamilySpec,
}

impl SweepSetup {
    pub fn occupancy() -> Self {
        Self {
            task: TaskForm::Occupancy,
            rules: SweepRules::default(),
            selection_rule: MatchingRule::Exact,
            head_family: HeadFamilySpec::standard(),
        }
    }

    pub fn contracts(&self, scope: ScopeSpec) -> Result<Vec<Contract>> {
        self.rules
            .columns()
            .into_iter()
            .map(|(id, rule)| {
                Contract::new(
                    self.task,
                    MetricSpec::new(id).with_selection(self.selection_rule.clone()),
                    Some(rule.clone()),
                    scope,
                    self.head_family.clone(),
                )
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub backbone: String,
    pub scope: String,
    /// Contracts of the strict, tolerated and union columns.
    pub contracts: Vec<Contract>,
    pub strict_f1: f64,
    pub tolerated_f1: f64,
    pub union_f1: f64,
    /// `union_f1 - strict_f1`.
    pub delta: f64,
    /// `|P_tau| / |scope|`.
    pub predicted_positive_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedRegret {
    pub seed: u64,
    pub delta: f64,
    pub ranking_choice: HeadKind,
    pub decision_choice: HeadKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub scope: String,
    pub contracts: Vec<Contract>,
    pub mode: RegretMode,
    pub seeds: Vec<SeedRegret>,
    pub stat: SeedStat,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ReportRow {
    Sweep(SweepRow),
    Regret(RegretRow),
}

impl ReportRow {
    pub fn scope(&self) -> &str {
        match self {
            ReportRow::Sweep(r) => &r.scope,
            ReportRow::Regret(r) => &r.scope,
        }
    }

    pub fn contracts(&self) -> &[Contract] {
        match self {
            ReportRow::Sweep(r) => &r.contracts,
            ReportRow::Regret(r) => &r.contracts,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    FixedOutput,
    FixedFeature,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckReport {
    pub check: CheckKind,
    pub backbone: String,
    /// One contract per score column, with the scope set to global; each
    /// row's contracts equal these up to the row's scope.
    pub base_contracts: Vec<Contract>,
    /// Threshold shared by every sweep row.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    pub config: ConfigEcho,
    pub rows: Vec<ReportRow>,
}

impl CheckReport {
    /// Rejects rows whose contracts differ from the report's base contracts
    /// in anything but the row's own scope.
    pub fn validate(&self) -> Result<()> {
        for (i, row) in self.rows.iter().enumerate() {
            let contracts = row.contracts();
            if contracts.len() != self.base_contracts.len() {
                return Err(Error::ContractViolation(format!(
                    "row {i} has {} contracts, report has {} columns",
                    contracts.len(),
                    self.base_contracts.len()
                )));
            }
            for (c, base) in contracts.iter().zip(&self.base_contracts) {
                if c.scope.label() != row.scope() || c.with_scope(ScopeSpec::Global) != *base {
                    return Err(Error::ContractViolation(format!(
                        "row {i} ({}) is scored under {}, report column is {}",
                        row.scope(),
                        c.descriptor(),
                        base.descriptor()
                    )));
                }
            }
            if let ReportRow::Sweep(r) = row {
                if r.backbone != self.backbone {
                    return Err(Error::ContractViolation(format!(
                        "row {i} belongs to backbone {}, report to {}",
                        r.backbone, self.backbone
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn task(&self) -> Option<TaskForm> {
        self.base_contracts.first().map(|c| c.task)
    }
}

/// Scores one output record under every sweep rule and scope at a single
/// threshold. Only the matching rule varies across columns of a row.
pub fn fixed_output_check(
    record: &OutputRecord,
    tau: f64,
    setup: &SweepSetup,
    scopes: &[ScopeMask],
    backbone: &str,
) -> Result<CheckReport> {
    if scopes.is_empty() {
        return Err(Error::EmptyInput);
    }
    let rows = scopes
        .par_iter()
        .map(|scope| {
            record.spec().ensure_same(scope.spec(), "record vs scope")?;
            let spec = ScopeSpec::from_kind(scope.kind());
            let contracts = setup.contracts(spec)?;
            let f1 = |rule: &MatchingRule| decision_f1(record, tau, rule, scope);
            let strict_f1 = f1(&setup.rules.strict)?;
            let tolerated_f1 = f1(&setup.rules.tolerated)?;
            let union_f1 = f1(&setup.rules.union)?;
            let predicted = threshold_scores(record, tau, scope)?.len();
            Ok(ReportRow::Sweep(SweepRow {
                backbone: backbone.to_string(),
                scope: spec.label(),
                contracts,
                strict_f1,
                tolerated_f1,
                union_f1,
                delta: union_f1 - strict_f1,
                predicted_positive_rate: predicted as f64 / scope.cell_count().max(1) as f64,
            }))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut config = engine_conventions();
    config.insert("check".into(), json!("fixed_output"));
    let report = CheckReport {
        check: CheckKind::FixedOutput,
        backbone: backbone.to_string(),
        base_contracts: setup.contracts(ScopeSpec::Global)?,
        tau: Some(tau),
        config,
        rows,
    };
    report.validate()?;
    Ok(report)
}

/// Trains every head of the contract's family for each seed, runs both
/// selectors on validation and reports regret in both modes for each scope.
/// Only the selection metric varies; features, task, scopes, matching rule
/// and head family are fixed.
pub fn fixed_feature_check(
    features: &FeatureStack,
    labels: &LabelField,
    split: &TimeSplit,
    contract: &Contract,
    scopes: &[ScopeMask],
    cfg: &TrainConfig,
    backbone: &str,
) -> Result<CheckReport> {
    cfg.validate()?;
    if scopes.is_empty() {
        return Err(Error::EmptyInput);
    }
    split.check(features.spec())?;
    let train_f = features.time_slice(split.train.clone())?;
    let train_y = labels.slice_times(split.train.clone())?;
    let kinds = &contract.head_family.allowed_heads;

    let modes = [RegretMode::SameAsSelection, RegretMode::HeldOutTest];
    // per (scope, mode): per-seed outcomes
    let mut outcomes: Vec<Vec<SeedRegret>> = vec![Vec::new(); scopes.len() * modes.len()];
    for &seed in &cfg.seeds {
        let heads = kinds
            .par_iter()
            .map(|&k| train_head(k, &train_f, &train_y, cfg, seed))
            .collect::<Result<Vec<HeadParams>>>()?;
        for (si, scope) in scopes.iter().enumerate() {
            let scoped = contract.with_scope(ScopeSpec::from_kind(scope.kind()));
            let evals = evaluate_heads(&heads, features, labels, split, &scoped, scope)?;
            for (mi, &mode) in modes.iter().enumerate() {
                let r = regret(&evals, mode)?;
                outcomes[si * modes.len() + mi].push(SeedRegret {
                    seed,
                    delta: r.delta,
                    ranking_choice: r.ranking_choice,
                    decision_choice: r.decision_choice,
                });
            }
        }
    }
    let mut rows = Vec::new();
    for (si, scope) in scopes.iter().enumerate() {
        let spec = ScopeSpec::from_kind(scope.kind());
        for (mi, &mode) in modes.iter().enumerate() {
            let seeds = std::mem::take(&mut outcomes[si * modes.len() + mi]);
            let deltas: Vec<f64> = seeds.iter().map(|s| s.delta).collect();
            rows.push(ReportRow::Regret(RegretRow {
                scope: spec.label(),
                contracts: vec![contract.with_scope(spec)],
                mode,
                stat: seed_aggregate(&deltas)?,
                seeds,
            }));
        }
    }
    let mut config = engine_conventions();
    config.insert("check".into(), json!("fixed_feature"));
    config.insert("train".into(), serde_json::to_value(cfg)?);
    config.insert("ranking_selector".into(), json!("pr_auc"));
    config.insert("regret_modes".into(), json!(["in-sample", "held-out"]));
    let report = CheckReport {
        check: CheckKind::FixedFeature,
        backbone: backbone.to_string(),
        base_contracts: vec![contract.with_scope(ScopeSpec::Global)],
        tau: None,
        config,
        rows,
    };
    report.validate()?;
    Ok(report)
}

/// Backbones ranked within one contract under one set of conventions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub contract: Contract,
    pub config: ConfigEcho,
    pub entries: Vec<RankedEntry>,
}

/// A backbone's rank under the strict column and under the union column of
/// the same scope.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankShift {
    pub backbone: String,
    pub scope: String,
    pub before: usize,
    pub after: usize,
}

impl RankShift {
    /// Positive when the backbone moved up.
    pub fn delta(&self) -> i64 {
        self.before as i64 - self.after as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankMap {
    pub tables: Vec<RankTable>,
    pub shifts: Vec<RankShift>,
}

/// Ranks backbones separately within every (contract, conventions) group
/// found in the sweep rows of `reports`, and lists strict-to-union rank
/// shifts. Reports with internally mixed contracts are rejected; nothing is
/// averaged across rows or contracts.
pub fn rank_map(reports: &[CheckReport]) -> Result<RankMap> {
    type Key = (String, String);
    let mut groups: BTreeMap<Key, (Contract, ConfigEcho, Vec<ScoredEntry>)> = BTreeMap::new();
    let mut pairs: Vec<(String, String, Key, Key)> = Vec::new();
    for report in reports {
        report.validate()?;
        let config_key = serde_json::to_string(&report.config)?;
        for row in &report.rows {
            let ReportRow::Sweep(r) = row else { continue };
            let scores = [r.strict_f1, r.tolerated_f1, r.union_f1];
            let mut keys = Vec::new();
            for (c, score) in r.contracts.iter().zip(scores) {
                let key = (c.canonical(), config_key.clone());
                let group = groups.entry(key.clone()).or_insert_with(|| (c.clone(), report.config.clone(), Vec::new()));
                if group.2.iter().any(|e| e.name == r.backbone) {
                    return Err(Error::InvalidParameter(format!(
                        "backbone {} appears twice under {}",
                        r.backbone,
                        c.descriptor()
                    )));
                }
                group.2.push(ScoredEntry { name: r.backbone.clone(), contract: c.clone(), score });
                keys.push(key);
            }
            pairs.push((r.backbone.clone(), r.scope.clone(), keys[0].clone(), keys[2].clone()));
        }
    }
    let mut tables = Vec::with_capacity(groups.len());
    let mut rank_of: BTreeMap<(Key, String), usize> = BTreeMap::new();
    for (key, (contract, config, entries)) in groups {
        let ranked = rank_within_contract(&entries)?;
        for e in &ranked {
            rank_of.insert((key.clone(), e.name.clone()), e.rank);
        }
        tables.push(RankTable { contract, config, entries: ranked });
    }
    let shifts = pairs
        .into_iter()
        .map(|(backbone, scope, strict, union)| RankShift {
            before: rank_of[&(strict, backbone.clone())],
            after: rank_of[&(union, backbone.clone())],
            backbone,
            scope,
        })
        .collect();
    Ok(RankMap { tables, shifts })
}
