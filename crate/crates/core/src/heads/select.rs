use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{head_scores, FeatureStack, HeadKind, HeadParams};
use crate::contract::Contract;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, LabelField, OutputRecord, ScopeMask, TimeSplit};
use crate::matching::{decision_f1, MatchingRule};
use crate::metrics::{pr_auc, select_threshold, MetricId};

/// Head-selection criterion evaluated on a validation record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selector {
    /// PR-AUC of the raw scores over in-scope cells.
    RankingPrAuc,
    /// Decision F1 under `rule` at the threshold that maximises validation
    /// F1 under `selection_rule`.
    DecisionF1 { rule: MatchingRule, selection_rule: MatchingRule },
}

/// A trained head together with its scores on the validation record.
#[derive(Debug, Clone)]
pub struct Candidate {
    pub params: HeadParams,
    pub validation: OutputRecord,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub kind: HeadKind,
    pub score: f64,
}

/// The scope mask attached to `spec`'s time axis.
fn fit_scope(scope: &ScopeMask, spec: &GridSpec) -> Result<ScopeMask> {
    if !scope.spec().same_spatial(spec) {
        return Err(Error::GridMismatch(format!(
            "scope is {}x{}, record is {}x{}",
            scope.spec().n_rows(),
            scope.spec().n_cols(),
            spec.n_rows(),
            spec.n_cols()
        )));
    }
    scope.retimed(spec.n_times())
}

fn in_scope_ranking(record: &OutputRecord, scope: &ScopeMask) -> Result<f64> {
    let scope = fit_scope(scope, record.spec())?;
    let slice = record.spec().slice_len();
    let bits = scope.spatial_bits();
    let (mut s, mut y) = (Vec::new(), Vec::new());
    for (i, (&score, &label)) in record.scores().values().iter().zip(record.labels().values()).enumerate() {
        if bits[i % slice] {
            s.push(score as f64);
            y.push(label);
        }
    }
    pr_auc(&s, &y)
}

fn decision_score(
    record: &OutputRecord,
    scope: &ScopeMask,
    rule: &MatchingRule,
    selection_rule: &MatchingRule,
) -> Result<(f64, f64)> {
    let scope = fit_scope(scope, record.spec())?;
    let tau = select_threshold(record, &scope, selection_rule, None)?;
    Ok((tau, decision_f1(record, tau, rule, &scope)?))
}

pub fn selector_score(candidate: &Candidate, selector: &Selector, scope: &ScopeMask) -> Result<f64> {
    match selector {
        Selector::RankingPrAuc => in_scope_ranking(&candidate.validation, scope),
        Selector::DecisionF1 { rule, selection_rule } => {
            decision_score(&candidate.validation, scope, rule, selection_rule).map(|(_, f1)| f1)
        }
    }
}

/// Argmax over `(kind, score)` pairs; ties go to the earlier head kind, then
/// the earlier position.
fn argmax(scores: &[(HeadKind, f64)]) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::NoCandidates);
    }
    let mut best = 0;
    for (i, &(kind, s)) in scores.iter().enumerate().skip(1) {
        let (bk, bs) = scores[best];
        if s > bs || (s == bs && kind < bk) {
            best = i;
        }
    }
    Ok(best)
}

/// Picks the candidate with the best validation score under `selector`.
pub fn select_head(candidates: &[Candidate], selector: &Selector, scope: &ScopeMask) -> Result<Selection> {
    let first = candidates.first().ok_or(Error::NoCandidates)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for c in candidates {
        first.validation.spec().ensure_same(c.validation.spec(), "candidate validation records")?;
        if c.validation.labels() != first.validation.labels() {
            return Err(Error::ContractViolation("candidates were validated on different labels".into()));
        }
        scores.push((c.params.kind(), selector_score(c, selector, scope)?));
    }
    let index = argmax(&scores)?;
    Ok(Selection { index, kind: scores[index].0, score: scores[index].1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Decision score measured on the validation split used for selection;
    /// regret is non-negative by construction.
    SameAsSelection,
    /// Heads selected on validation, decision score measured on test; the
    /// sign is unconstrained.
    HeldOutTest,
}

impl RegretMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RegretMode::SameAsSelection => "in-sample",
            RegretMode::HeldOutTest => "held-out",
        }
    }
}

impl fmt::Display for RegretMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RegretMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "in-sample" | "same_as_selection" => Ok(RegretMode::SameAsSelection),
            "held-out" | "held_out_test" => Ok(RegretMode::HeldOutTest),
            other => Err(Error::Usage(format!("unknown regret mode {other:?}"))),
        }
    }
}

/// Validation and test evaluation of one trained head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadEval {
    pub kind: HeadKind,
    /// Ranking score `R` on validation.
    pub pr_auc: f64,
    /// Threshold chosen on validation.
    pub tau: f64,
    /// Decision score `D` on validation.
    pub val_f1: f64,
    /// Decision score on test at the validation threshold.
    pub test_f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretOutcome {
    pub mode: RegretMode,
    pub ranking_choice: HeadKind,
    pub decision_choice: HeadKind,
    pub decision_of_hd: f64,
    pub decision_of_hr: f64,
    /// `D(h_D) - D(h_R)`, never clamped.
    pub delta: f64,
}

/// Scores every head on the validation and test slices under `contract`'s
/// decision metric and scope.
pub fn evaluate_heads(
    heads: &[HeadParams],
    features: &FeatureStack,
    labels: &LabelField,
    split: &TimeSplit,
    contract: &Contract,
    scope: &ScopeMask,
) -> Result<Vec<HeadEval>> {
    let (rule, selection_rule) = decision_rules(contract)?;
    if !contract.scope.matches_mask(scope) {
        return Err(Error::ContractViolation(format!(
            "scope mask {:?} does not realise contract scope {}",
            scope.kind(),
            contract.scope.label()
        )));
    }
    if heads.is_empty() {
        return Err(Error::NoCandidates);
    }
    if let Some(h) = heads.iter().find(|h| !contract.head_family.allowed_heads.contains(&h.kind())) {
        return Err(Error::ContractViolation(format!("{} is outside the contract's head family", h.kind())));
    }
    split.check(features.spec())?;
    let val_f = features.time_slice(split.validation.clone())?;
    let val_y = labels.slice_times(split.validation.clone())?;
    let test_f = features.time_slice(split.test.clone())?;
    let test_y = labels.slice_times(split.test.clone())?;
    heads
        .iter()
        .map(|h| {
            let val = OutputRecord::new(head_scores(h, &val_f)?, val_y.clone())?;
            let test = OutputRecord::new(head_scores(h, &test_f)?, test_y.clone())?;
            let (tau, val_f1) = decision_score(&val, scope, &rule, &selection_rule)?;
            let test_scope = fit_scope(scope, test.spec())?;
            Ok(HeadEval {
                kind: h.kind(),
                pr_auc: in_scope_ranking(&val, scope)?,
                tau,
                val_f1,
                test_f1: decision_f1(&test, tau, &rule, &test_scope)?,
            })
        })
        .collect()
}

fn decision_rules(contract: &Contract) -> Result<(MatchingRule, MatchingRule)> {
    let decision = matches!(
        contract.metric.id,
        MetricId::ExactF1 | MetricId::ToleratedF1 | MetricId::UnionF1 | MetricId::SpatialF1
    );
    match (&contract.matching, decision) {
        (Some(rule), true) => Ok((rule.clone(), contract.metric.selection_rule())),
        _ => Err(Error::ContractViolation(format!(
            "selection regret needs a matched F1 contract, got {}",
            contract.descriptor()
        ))),
    }
}

/// Regret of ranking-based over decision-based selection for a set of
/// already evaluated heads.
pub fn regret(evals: &[HeadEval], mode: RegretMode) -> Result<RegretOutcome> {
    let r: Vec<(HeadKind, f64)> = evals.iter().map(|e| (e.kind, e.pr_auc)).collect();
    let d: Vec<(HeadKind, f64)> = evals.iter().map(|e| (e.kind, e.val_f1)).collect();
    let (hr, hd) = (argmax(&r)?, argmax(&d)?);
    let score = |i: usize| match mode {
        RegretMode::SameAsSelection => evals[i].val_f1,
        RegretMode::HeldOutTest => evals[i].test_f1,
    };
    Ok(RegretOutcome {
        mode,
        ranking_choice: evals[hr].kind,
        decision_choice: evals[hd].kind,
        decision_of_hd: score(hd),
        decision_of_hr: score(hr),
        delta: score(hd) - score(hr),
    })
}

/// `delta = D(h_D) - D(h_R)` for one trained head set.
pub fn selection_regret(
    heads: &[HeadParams],
    features: &FeatureStack,
    labels: &LabelField,
    split: &TimeSplit,
    contract: &Contract,
    scope: &ScopeMask,
    mode: RegretMode,
) -> Result<RegretOutcome> {
    regret(&evaluate_heads(heads, features, labels, split, contract, scope)?, mode)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{GridSpec, ScoreField};

    fn eval(kind: HeadKind, pr_auc: f64, val_f1: f64, test_f1: f64) -> HeadEval {
        HeadEval { kind, pr_auc, tau: 0.0, val_f1, test_f1 }
    }

    #[test]
    fn argmax_ties_follow_head_order() {
        let scores =
            [(HeadKind::PixelMlp { hidden: 4 }, 0.5), (HeadKind::LinearProbe, 0.5), (HeadKind::ConstantPrior, 0.2)];
        assert_eq!(argmax(&scores).unwrap(), 1);
        assert!(matches!(argmax(&[]), Err(Error::NoCandidates)));
    }

    #[test]
    fn regret_modes() {
        let evals =
            [eval(HeadKind::LinearProbe, 0.3, 0.8, 0.6), eval(HeadKind::PixelMlp { hidden: 4 }, 0.5, 0.7, 0.75)];
        let same = regret(&evals, RegretMode::SameAsSelection).unwrap();
        assert_eq!(same.ranking_choice, HeadKind::PixelMlp { hidden: 4 });
        assert_eq!(same.decision_choice, HeadKind::LinearProbe);
        assert!((same.delta - 0.1).abs() < 1e-12);
        let held = regret(&evals, RegretMode::HeldOutTest).unwrap();
        assert!((held.delta + 0.15).abs() < 1e-12, "held-out regret keeps its sign");
        let agree = regret(&evals[..1], RegretMode::SameAsSelection).unwrap();
        assert_eq!(agree.delta, 0.0);
    }

    #[test]
    fn single_candidate_is_selected() {
        let spec = GridSpec::new(1, 2, 2).unwrap();
        let labels = LabelField::new(spec, vec![true, false, false, false]).unwrap();
        let scores = ScoreField::new(spec, vec![0.1, 0.9, 0.2, 0.3]).unwrap();
        let c = Candidate {
            params: HeadParams::zeros(HeadKind::LinearProbe, 1).unwrap(),
            validation: OutputRecord::new(scores, labels).unwrap(),
        };
        let scope = ScopeMask::global(spec);
        for sel in [
            Selector::RankingPrAuc,
            Selector::DecisionF1 { rule: MatchingRule::Exact, selection_rule: MatchingRule::Exact },
        ] {
            assert_eq!(select_head(std::slice::from_ref(&c), &sel, &scope).unwrap().index, 0);
        }
        assert!(matches!(select_head(&[], &Selector::RankingPrAuc, &scope), Err(Error::NoCandidates)));
    }

    #[test]
    fn ranking_selection_ignores_monotone_rescaling() {
        let spec = GridSpec::new(1, 4, 4).unwrap();
        let labels: Vec<bool> = (0..16).map(|i| i % 5 == 0).collect();
        let labels = LabelField::new(spec, labels).unwrap();
        let a: Vec<f32> = (0..16).map(|i| ((i * 7) % 16) as f32 / 16.0).collect();
        let b: Vec<f32> = (0..16).map(|i| ((i * 3) % 16) as f32 / 16.0).collect();
        let make = |s: &[f32], kind| Candidate {
            params: HeadParams::zeros(kind, 1).unwrap(),
            validation: OutputRecord::new(ScoreField::new(spec, s.to_vec()).unwrap(), labels.clone()).unwrap(),
        };
        let scope = ScopeMask::global(spec);
        let plain = [make(&a, HeadKind::LinearProbe), make(&b, HeadKind::PixelMlp { hidden: 2 })];
        let warp = |s: &[f32]| s.iter().map(|v| (3.0 * v).exp() - 5.0).collect::<Vec<f32>>();
        let warped = [make(&warp(&a), HeadKind::LinearProbe), make(&warp(&b), HeadKind::PixelMlp { hidden: 2 })];
        assert_eq!(
            select_head(&plain, &Selector::RankingPrAuc, &scope).unwrap().index,
            select_head(&warped, &Selector::RankingPrAuc, &scope).unwrap().index
        );
    }

    #[test]
    fn regret_mode_parsing() {
        assert_eq!("in-sample".parse::<RegretMode>().unwrap(), RegretMode::SameAsSelection);
        assert_eq!("held-out".parse::<RegretMode>().unwrap(), RegretMode::HeldOutTest);
        assert!("both".parse::<RegretMode>().is_err());
    }
}
