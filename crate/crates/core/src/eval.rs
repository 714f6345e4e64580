//! Single-contract evaluation of one output record.

use serde::{Deserialize, Serialize};

use crate::contract::{derive_fire_prone_scope, spread_region_scope, Contract, ScopeSpec};
use crate::error::{Error, Result};
use crate::grid::{observed_set, threshold_scores, OutputRecord, ScopeMask, TimeSplit};
use crate::matching::{decision_counts, MatchCounts, MatchingRule};
use crate::metrics::{pr_auc, select_threshold, MetricId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauSource {
    Given,
    /// Chosen on the validation slice (or the whole record without a split).
    Selected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub contract: Contract,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_source: Option<TauSource>,
    /// The contract metric, as a fraction.
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recall: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<MatchCounts>,
    pub scope_cells: u64,
}

/// Scope mask for `spec` on the scored slice. Fire-prone masks come from
/// the training labels; spread regions from the scored slice at `tau`.
fn scope_for(contract: &Contract, record: &OutputRecord, train: &OutputRecord, tau: Option<f64>) -> Result<ScopeMask> {
    let spec = *record.spec();
    match contract.scope {
        ScopeSpec::Global => Ok(ScopeMask::global(spec)),
        ScopeSpec::FireProneTop { fraction } => {
            derive_fire_prone_scope(train.labels(), fraction)?.retimed(spec.n_times())
        }
        ScopeSpec::SpreadRegion => {
            let global = ScopeMask::global(spec);
            let obs = observed_set(record.labels(), &global)?;
            let pred = match tau {
                Some(t) => threshold_scores(record, t, &global)?,
                None => crate::grid::FireSet::empty(spec),
            };
            spread_region_scope(&pred, &obs)
        }
        other => Err(Error::ContractViolation(format!("scope {} does not apply to gridded records", other.label()))),
    }
}

/// Scores `record` under `contract`. With a split, the threshold is chosen
/// on validation and the metric is reported on test; without one, both use
/// the whole record.
pub fn evaluate_record(
    record: &OutputRecord,
    contract: &Contract,
    split: Option<&TimeSplit>,
    tau: Option<f64>,
) -> Result<EvalResult> {
    contract.validate()?;
    let rule = match &contract.matching {
        Some(r) => r.clone(),
        None => return Err(Error::ContractViolation(format!("{} is not a gridded task form", contract.task))),
    };
    let (train, val, test) = match split {
        Some(s) => {
            s.check(record.spec())?;
            (
                record.time_slice(s.train.clone())?,
                record.time_slice(s.validation.clone())?,
                record.time_slice(s.test.clone())?,
            )
        }
        None => (record.clone(), record.clone(), record.clone()),
    };
    let id = contract.metric.id;
    if matches!(id, MetricId::Ap | MetricId::PrAuc) {
        let scope = scope_for(contract, &test, &train, None)?;
        let bits = scope.spatial_bits();
        let slice = test.spec().slice_len();
        let keep = |i: &usize| bits[i % slice];
        let scores: Vec<f64> =
            (0..test.spec().total_cells()).filter(keep).map(|i| test.scores().values()[i] as f64).collect();
        let labels: Vec<bool> =
            (0..test.spec().total_cells()).filter(keep).map(|i| test.labels().values()[i]).collect();
        return Ok(EvalResult {
            contract: contract.clone(),
            tau: None,
            tau_source: None,
            value: pr_auc(&scores, &labels)?,
            precision: None,
            recall: None,
            counts: None,
            scope_cells: scope.cell_count(),
        });
    }
    if !matches!(id, MetricId::ExactF1 | MetricId::ToleratedF1 | MetricId::UnionF1 | MetricId::SpatialF1) {
        return Err(Error::ContractViolation(format!("metric {id} does not score gridded records")));
    }
    let (tau, source) = match tau {
        Some(t) => (t, TauSource::Given),
        None => {
            let selection: MatchingRule = contract.metric.selection_rule();
            let val_scope = scope_for(contract, &val, &train, None)?;
            (select_threshold(&val, &val_scope, &selection, None)?, TauSource::Selected)
        }
    };
    let scope = scope_for(contract, &test, &train, Some(tau))?;
    let counts = decision_counts(&test, tau, &rule, &scope)?;
    Ok(EvalResult {
        contract: contract.clone(),
        tau: Some(tau),
        tau_source: Some(source),
        value: counts.f1(),
        precision: Some(counts.precision()),
        recall: Some(counts.recall()),
        counts: Some(counts),
        scope_cells: scope.cell_count(),
    })
}
