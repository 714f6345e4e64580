//! Evaluation contracts `(task, metric, matching rule, scope, head family)`,
//! the built-in task-form registry, scope derivation and within-contract
//! ranking.
//!
//! Two scores are comparable only when their contracts are equal component
//! by component. Nothing in this module aggregates across contracts.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fire_prone_count, FireSet, LabelField, ScopeKind, ScopeMask};
use crate::heads::HeadKind;
use crate::matching::MatchingRule;
use crate::metrics::supporting::{HEAT_DEFAULT_C, HEAT_THRESHOLDS_C, SMOKE_EXCEEDANCE};
use crate::metrics::{Direction, MetricId, MetricSpec};

pub const OCCUPANCY_K: u32 = 8;
pub const OCCUPANCY_UNION_DT: u32 = 3;
pub const SPREAD_K: u32 = 4;
pub const FIRE_PRONE_FRACTIONS: [f64; 3] = [0.05, 0.10, 0.20];
pub const RETRIEVAL_K: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskForm {
    Occupancy,
    FireSpread,
    BurnedArea,
    AnalogRetrieval,
    SmokePm25,
    ExtremeHeat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskClass {
    Primary,
    Supporting,
}

impl TaskForm {
    pub const ALL: [TaskForm; 6] = [
        TaskForm::Occupancy,
        TaskForm::FireSpread,
        TaskForm::BurnedArea,
        TaskForm::AnalogRetrieval,
        TaskForm::SmokePm25,
        TaskForm::ExtremeHeat,
    ];

    pub fn class(self) -> TaskClass {
        match self {
            TaskForm::Occupancy | TaskForm::FireSpread => TaskClass::Primary,
            _ => TaskClass::Supporting,
        }
    }

    /// Matched task forms score fire sets under a matching rule.
    pub fn is_matched(self) -> bool {
        self.class() == TaskClass::Primary
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TaskForm::Occupancy => "occupancy",
            TaskForm::FireSpread => "fire_spread",
            TaskForm::BurnedArea => "burned_area",
            TaskForm::AnalogRetrieval => "analog_retrieval",
            TaskForm::SmokePm25 => "smoke_pm25",
            TaskForm::ExtremeHeat => "extreme_heat",
        }
    }
}

impl fmt::Display for TaskForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeSpec {
    Global,
    FireProneTop { fraction: f64 },
    SpreadRegion,
    TestEvents,
    TestStations,
    HeatRegionStations,
}

impl ScopeSpec {
    pub fn validate(&self) -> Result<()> {
        if let ScopeSpec::FireProneTop { fraction } = *self {
            if !(fraction.is_finite() && fraction > 0.0 && fraction <= 1.0) {
                return Err(Error::InvalidFraction(fraction));
            }
        }
        Ok(())
    }

    /// Short label used in tables: `global`, `top5`, `top12.5`, ...
    pub fn label(&self) -> String {
        match self {
            ScopeSpec::Global => "global".into(),
            ScopeSpec::FireProneTop { fraction } => format!("top{}", fraction * 100.0),
            ScopeSpec::SpreadRegion => "spread_region".into(),
            ScopeSpec::TestEvents => "test_events".into(),
            ScopeSpec::TestStations => "test_stations".into(),
            ScopeSpec::HeatRegionStations => "heat_region_stations".into(),
        }
    }

    /// Inverse of [`ScopeSpec::label`].
    pub fn parse_label(s: &str) -> Result<Self> {
        let spec = match s {
            "global" => ScopeSpec::Global,
            "spread_region" => ScopeSpec::SpreadRegion,
            "test_events" => ScopeSpec::TestEvents,
            "test_stations" => ScopeSpec::TestStations,
            "heat_region_stations" => ScopeSpec::HeatRegionStations,
            other => {
                let pct: f64 = other
                    .strip_prefix("top")
                    .and_then(|p| p.parse().ok())
                    .ok_or_else(|| Error::Usage(format!("unknown scope {other:?}")))?;
                ScopeSpec::FireProneTop { fraction: pct / 100.0 }
            }
        };
        spec.validate()?;
        Ok(spec)
    }

    /// The scope a mask of this kind realises.
    pub fn from_kind(kind: ScopeKind) -> Self {
        match kind {
            ScopeKind::Global => ScopeSpec::Global,
            ScopeKind::FireProne(fraction) => ScopeSpec::FireProneTop { fraction },
            ScopeKind::SpreadRegion => ScopeSpec::SpreadRegion,
        }
    }

    pub fn matches_mask(&self, mask: &ScopeMask) -> bool {
        match (self, mask.kind()) {
            (ScopeSpec::Global, ScopeKind::Global) => true,
            (ScopeSpec::FireProneTop { fraction }, ScopeKind::FireProne(f)) => *fraction == f,
            (ScopeSpec::SpreadRegion, ScopeKind::SpreadRegion) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadFamilySpec {
    pub allowed_heads: Vec<HeadKind>,
    /// Name of the training configuration the heads were fit with.
    pub train_config: String,
}

impl HeadFamilySpec {
    pub fn new(mut allowed_heads: Vec<HeadKind>, train_config: impl Into<String>) -> Result<Self> {
        if allowed_heads.is_empty() {
            return Err(Error::InvalidParameter("head family must not be empty".into()));
        }
        allowed_heads.sort();
        allowed_heads.dedup();
        Ok(Self { allowed_heads, train_config: train_config.into() })
    }

    /// All five heads with default widths and the default training config.
    pub fn standard() -> Self {
        Self::new(HeadKind::family(crate::heads::DEFAULT_HIDDEN).to_vec(), "default").expect("non-empty")
    }
}

/// One evaluation contract. Every component is present; non-matched task
/// forms carry `matching: None` explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contract {
    pub task: TaskForm,
    pub metric: MetricSpec,
    pub matching: Option<MatchingRule>,
    pub scope: ScopeSpec,
    pub head_family: HeadFamilySpec,
}

impl Contract {
    pub fn new(
        task: TaskForm,
        metric: MetricSpec,
        matching: Option<MatchingRule>,
        scope: ScopeSpec,
        head_family: HeadFamilySpec,
    ) -> Result<Self> {
        let c = Self { task, metric, matching, scope, head_family };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.scope.validate()?;
        if self.head_family.allowed_heads.is_empty() {
            return Err(Error::ContractViolation("empty head family".into()));
        }
        match (self.task.is_matched(), &self.matching) {
            (true, None) => Err(Error::ContractViolation(format!("{} contracts need a matching rule", self.task))),
            (false, Some(_)) => {
                Err(Error::ContractViolation(format!("{} contracts carry no matching rule", self.task)))
            }
            (_, Some(MatchingRule::Union(rules))) if rules.is_empty() => {
                Err(Error::ContractViolation("union rule without members".into()))
            }
            _ => Ok(()),
        }
    }

    /// Sorted-key JSON text; two contracts are comparable iff these strings
    /// are equal.
    pub fn canonical(&self) -> String {
        let value = serde_json::to_value(self).expect("contract serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: Contract = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    /// Short human-readable descriptor.
    pub fn descriptor(&self) -> String {
        let rule = self.matching.as_ref().map_or_else(|| "none".to_string(), |r| r.to_string());
        format!("{}/{}/{}/{}", self.task, self.metric.id, rule, self.scope.label())
    }

    pub fn with_scope(&self, scope: ScopeSpec) -> Self {
        Self { scope, ..self.clone() }
    }
}

/// Component-wise equality of all five contract components.
pub fn comparable(a: &Contract, b: &Contract) -> bool {
    a == b
}

/// How the decision threshold (or other tuned value) is picked on validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validation {
    /// Maximise validation F1 under this matching rule.
    F1Under(MatchingRule),
    LogRmse,
    Ndcg10,
    Rmse,
    /// Pick the exceedance threshold from a fixed set.
    ThresholdSet(Vec<f64>),
}

/// Registry entry for one task form: every metric (with its matching rule)
/// and every scope the task form reports, expandable into concrete contracts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractTemplate {
    pub task: TaskForm,
    pub metrics: Vec<(MetricSpec, Option<MatchingRule>)>,
    pub scopes: Vec<ScopeSpec>,
    pub validation: Validation,
    pub head_family: HeadFamilySpec,
}

impl ContractTemplate {
    /// Every (metric, scope) pair as a concrete contract.
    pub fn contracts(&self) -> Vec<Contract> {
        let mut out = Vec::new();
        for (metric, rule) in &self.metrics {
            for scope in &self.scopes {
                out.push(Contract {
                    task: self.task,
                    metric: metric.clone(),
                    matching: rule.clone(),
                    scope: *scope,
                    head_family: self.head_family.clone(),
                });
            }
        }
        out
    }

    pub fn contract(&self, metric: MetricId, scope: ScopeSpec) -> Result<Contract> {
        let (m, rule) = self
            .metrics
            .iter()
            .find(|(m, _)| m.id == metric)
            .ok_or_else(|| Error::ContractViolation(format!("{} does not report {metric}", self.task)))?;
        if !self.scopes.contains(&scope) {
            return Err(Error::ContractViolation(format!("{} is not scored on scope {}", self.task, scope.label())));
        }
        Contract::new(self.task, m.clone(), rule.clone(), scope, self.head_family.clone())
    }

    /// Matching rule attached to `metric`, if this template reports it.
    pub fn rule_for(&self, metric: MetricId) -> Option<&MatchingRule> {
        self.metrics.iter().find(|(m, _)| m.id == metric).and_then(|(_, r)| r.as_ref())
    }
}

pub fn occupancy_union_rule() -> MatchingRule {
    MatchingRule::Union(vec![MatchingRule::Exact, MatchingRule::tolerated(OCCUPANCY_K, OCCUPANCY_UNION_DT)])
}

/// The six task-form contracts with their fixed scoring values.
pub fn builtin_contracts() -> Vec<ContractTemplate> {
    let heads = HeadFamilySpec::standard();
    let strict = MatchingRule::Exact;
    let spatial = MatchingRule::tolerated(SPREAD_K, 0);
    let occupancy_scopes = std::iter::once(ScopeSpec::Global)
        .chain(FIRE_PRONE_FRACTIONS.iter().map(|&fraction| ScopeSpec::FireProneTop { fraction }))
        .collect();
    let sel = |id, rule: &MatchingRule| MetricSpec::new(id).with_selection(rule.clone());

    vec![
        ContractTemplate {
            task: TaskForm::Occupancy,
            metrics: vec![
                (sel(MetricId::ExactF1, &strict), Some(MatchingRule::Exact)),
                (sel(MetricId::ToleratedF1, &strict), Some(MatchingRule::tolerated(OCCUPANCY_K, 0))),
                (sel(MetricId::UnionF1, &strict), Some(occupancy_union_rule())),
                (MetricSpec::new(MetricId::Ap), Some(MatchingRule::Exact)),
            ],
            scopes: occupancy_scopes,
            validation: Validation::F1Under(strict.clone()),
            head_family: heads.clone(),
        },
        ContractTemplate {
            task: TaskForm::FireSpread,
            metrics: vec![
                (sel(MetricId::ExactF1, &spatial), Some(MatchingRule::Exact)),
                (sel(MetricId::SpatialF1, &spatial), Some(spatial.clone())),
                (MetricSpec::new(MetricId::Ap), Some(MatchingRule::Exact)),
            ],
            scopes: vec![ScopeSpec::SpreadRegion],
            validation: Validation::F1Under(spatial.clone()),
            head_family: heads.clone(),
        },
        ContractTemplate {
            task: TaskForm::BurnedArea,
            metrics: vec![
                (MetricSpec::new(MetricId::LogRmse), None),
                (MetricSpec::new(MetricId::LogMae), None),
                (MetricSpec::new(MetricId::SpearmanRho), None),
            ],
            scopes: vec![ScopeSpec::TestEvents],
            validation: Validation::LogRmse,
            head_family: heads.clone(),
        },
        ContractTemplate {
            task: TaskForm::AnalogRetrieval,
            metrics: vec![
                (MetricSpec::new(MetricId::Ndcg10).with_k(RETRIEVAL_K), None),
                (MetricSpec::new(MetricId::LogMae), None),
            ],
            scopes: vec![ScopeSpec::TestEvents],
            validation: Validation::Ndcg10,
            head_family: heads.clone(),
        },
        ContractTemplate {
            task: TaskForm::SmokePm25,
            metrics: vec![
                (MetricSpec::new(MetricId::Rmse), None),
                (MetricSpec::new(MetricId::Mae), None),
                (MetricSpec::new(MetricId::PearsonR), None),
                (MetricSpec::new(MetricId::ExceedanceF1).with_threshold(SMOKE_EXCEEDANCE), None),
            ],
            scopes: vec![ScopeSpec::TestStations],
            validation: Validation::Rmse,
            head_family: heads.clone(),
        },
        ContractTemplate {
            task: TaskForm::ExtremeHeat,
            metrics: vec![
                (MetricSpec::new(MetricId::RmseC), None),
                (MetricSpec::new(MetricId::MaeC), None),
                (MetricSpec::new(MetricId::ExceedanceF1).with_threshold(HEAT_DEFAULT_C), None),
            ],
            scopes: vec![ScopeSpec::HeatRegionStations],
            validation: Validation::ThresholdSet(HEAT_THRESHOLDS_C.to_vec()),
            head_family: heads,
        },
    ]
}

pub fn builtin_template(task: TaskForm) -> ContractTemplate {
    builtin_contracts().into_iter().find(|t| t.task == task).expect("every task form is registered")
}

/// Top-`fraction` spatial cells by training-period fire frequency (number of
/// steps with `y = 1`). Cutoff ties go to the lexicographically smallest
/// `(row, col)`. The mask is frozen and reused for validation and test.
pub fn derive_fire_prone_scope(train_labels: &LabelField, fraction: f64) -> Result<ScopeMask> {
    let spec = *train_labels.spec();
    let n = spec.slice_len();
    let keep = fire_prone_count(fraction, n)?;
    let mut freq = vec![0u32; n];
    for slice in train_labels.values().chunks_exact(n) {
        for (f, &y) in freq.iter_mut().zip(slice) {
            *f += y as u32;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    // flat spatial index order is (row, col) lexicographic order
    order.sort_by(|&a, &b| freq[b].cmp(&freq[a]).then(a.cmp(&b)));
    let mut bits = vec![false; n];
    for &i in &order[..keep] {
        bits[i] = true;
    }
    ScopeMask::from_spatial(spec, ScopeKind::FireProne(fraction), bits)
}

/// Spatial union of the predicted and observed burned regions.
pub fn spread_region_scope(pred_region: &FireSet, obs_region: &FireSet) -> Result<ScopeMask> {
    pred_region.spec().ensure_same(obs_region.spec(), "predicted vs observed region")?;
    let bits = pred_region.footprint().into_iter().zip(obs_region.footprint()).map(|(a, b)| a || b).collect();
    ScopeMask::from_spatial(*pred_region.spec(), ScopeKind::SpreadRegion, bits)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredEntry {
    pub name: String,
    pub contract: Contract,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedEntry {
    pub name: String,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Orders entries by the contract metric's direction, ties by name.
/// All entries must share one contract.
pub fn rank_within_contract(entries: &[ScoredEntry]) -> Result<Vec<RankedEntry>> {
    let Some(first) = entries.first() else {
        return Ok(Vec::new());
    };
    if let Some(other) = entries.iter().find(|e| !comparable(&e.contract, &first.contract)) {
        return Err(Error::ContractViolation(format!(
            "cannot rank {} ({}) against {} ({})",
            other.name,
            other.contract.descriptor(),
            first.name,
            first.contract.descriptor()
        )));
    }
    if let Some(e) = entries.iter().find(|e| e.score.is_nan()) {
        return Err(Error::InvalidParameter(format!("{} has a NaN score", e.name)));
    }
    let direction = first.contract.metric.direction();
    let mut sorted: Vec<&ScoredEntry> = entries.iter().collect();
    sorted.sort_by(|a, b| {
        let by_score = match direction {
            Direction::HigherBetter => b.score.total_cmp(&a.score),
            Direction::LowerBetter => a.score.total_cmp(&b.score),
        };
        by_score.then_with(|| a.name.cmp(&b.name))
    });
    Ok(sorted
        .into_iter()
        .enumerate()
        .map(|(i, e)| RankedEntry { name: e.name.clone(), score: e.score, rank: i + 1 })
        .collect())
}
