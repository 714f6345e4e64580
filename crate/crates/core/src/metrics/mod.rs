//! Ranking, correlation, regression, retrieval and exceedance metrics for the
//! six task forms, plus validation-based threshold selection.

mod correlation;
mod ranking;
mod regression;
pub mod supporting;
pub mod tables;
mod threshold;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use correlation::{average_ranks, pearson_r, spearman_rho};
pub use ranking::{average_precision, ndcg_at_k, pr_auc};
pub use regression::{exceedance_f1, log_error_metrics, mae, rmse, ExceedanceScores, LogErrors};
pub use threshold::{default_candidates, select_threshold, DEFAULT_CANDIDATES};

use crate::matching::MatchingRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricId {
    ExactF1,
    ToleratedF1,
    UnionF1,
    SpatialF1,
    Ap,
    PrAuc,
    Ndcg10,
    SpearmanRho,
    PearsonR,
    LogRmse,
    LogMae,
    Rmse,
    Mae,
    RmseC,
    MaeC,
    ExceedanceF1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    HigherBetter,
    LowerBetter,
}

impl MetricId {
    /// Error metrics are lower-is-better; F1, AP, nDCG and correlations are
    /// higher-is-better.
    pub fn direction(self) -> Direction {
        use MetricId::*;
        match self {
            LogRmse | LogMae | Rmse | Mae | RmseC | MaeC => Direction::LowerBetter,
            _ => Direction::HigherBetter,
        }
    }

    pub fn as_str(self) -> &'static str {
        use MetricId::*;
        match self {
            ExactF1 => "exact_f1",
            ToleratedF1 => "tolerated_f1",
            UnionF1 => "union_f1",
            SpatialF1 => "spatial_f1",
            Ap => "ap",
            PrAuc => "pr_auc",
            Ndcg10 => "ndcg10",
            SpearmanRho => "spearman_rho",
            PearsonR => "pearson_r",
            LogRmse => "log_rmse",
            LogMae => "log_mae",
            Rmse => "rmse",
            Mae => "mae",
            RmseC => "rmse_c",
            MaeC => "mae_c",
            ExceedanceF1 => "exceedance_f1",
        }
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParams {
    /// Cutoff for nDCG.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    /// Exceedance threshold (PM2.5 ug/m3 or degrees Celsius).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Matching rule under which the decision threshold is chosen on
    /// validation. Defaults to exact ("strict") when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selection_rule: Option<MatchingRule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub id: MetricId,
    #[serde(default)]
    pub params: MetricParams,
}

impl MetricSpec {
    pub fn new(id: MetricId) -> Self {
        Self { id, params: MetricParams::default() }
    }

    pub fn with_selection(mut self, rule: MatchingRule) -> Self {
        self.params.selection_rule = Some(rule);
        self
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.params.threshold = Some(threshold);
        self
    }

    pub fn with_k(mut self, k: u32) -> Self {
        self.params.k = Some(k);
        self
    }

    pub fn direction(&self) -> Direction {
        self.id.direction()
    }

    /// Threshold-selection rule, exact matching unless configured otherwise.
    pub fn selection_rule(&self) -> MatchingRule {
        self.params.selection_rule.clone().unwrap_or(MatchingRule::Exact)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_follow_convention() {
        for id in [MetricId::LogRmse, MetricId::Mae, MetricId::RmseC, MetricId::MaeC, MetricId::Rmse, MetricId::LogMae]
        {
            assert_eq!(id.direction(), Direction::LowerBetter);
        }
        for id in [
            MetricId::ExactF1,
            MetricId::Ap,
            MetricId::Ndcg10,
            MetricId::SpearmanRho,
            MetricId::PearsonR,
            MetricId::ExceedanceF1,
        ] {
            assert_eq!(id.direction(), Direction::HigherBetter);
        }
    }

    #[test]
    fn metric_spec_parsing_is_strict() {
        let ok: MetricSpec = serde_json::from_str(r#"{"id":"union_f1","params":{"selection_rule":"exact"}}"#).unwrap();
        assert_eq!(ok.selection_rule(), MatchingRule::Exact);
        assert!(serde_json::from_str::<MetricSpec>(r#"{"id":"union_f1","colour":"red"}"#).is_err());
        assert!(serde_json::from_str::<MetricSpec>(r#"{"id":"union_f1","params":{"tau":0.5}}"#).is_err());
    }
}
