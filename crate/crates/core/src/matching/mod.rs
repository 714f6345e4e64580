//! Exact, tolerated and union matching between predicted and observed fire
//! sets, with a dilation-based fast path and a pairwise reference path.
//!
//! Counting is one-sided: a prediction is a true positive when some
//! observation matches it, and an observation is a false negative when no
//! prediction matches it. Several predictions may match one observation.

mod dilate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{observed_set, threshold_scores, Cell, FireSet, GridSpec, OutputRecord, ScopeMask};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchingRule {
    /// Same cell, same step.
    Exact,
    /// Chebyshev spatial radius `k` cells and temporal radius `dt` steps.
    Tolerated { k: u32, dt: u32 },
    /// A pair matches if any member rule matches it.
    Union(Vec<MatchingRule>),
}

impl MatchingRule {
    pub fn tolerated(k: u32, dt: u32) -> Self {
        MatchingRule::Tolerated { k, dt }
    }

    pub fn union(rules: Vec<MatchingRule>) -> Result<Self> {
        if rules.is_empty() {
            return Err(Error::InvalidParameter("union rule needs at least one member".into()));
        }
        Ok(MatchingRule::Union(rules))
    }

    /// Flattens the rule into the `(k, dt)` windows whose union it accepts.
    fn windows(&self, out: &mut Vec<(u32, u32)>) {
        match self {
            MatchingRule::Exact => out.push((0, 0)),
            MatchingRule::Tolerated { k, dt } => out.push((*k, *dt)),
            MatchingRule::Union(rules) => rules.iter().for_each(|r| r.windows(out)),
        }
    }

    /// Distinct windows with dominated ones removed: `(k, dt)` is dropped when
    /// another window has both radii at least as large.
    fn reduced_windows(&self) -> Vec<(u32, u32)> {
        let mut all = Vec::new();
        self.windows(&mut all);
        all.sort_unstable();
        all.dedup();
        all.iter()
            .copied()
            .filter(|&(k, dt)| !all.iter().any(|&(k2, dt2)| (k2, dt2) != (k, dt) && k2 >= k && dt2 >= dt))
            .collect()
    }
}

impl fmt::Display for MatchingRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchingRule::Exact => write!(f, "exact"),
            MatchingRule::Tolerated { k, dt } => write!(f, "tolerated(k={k},dt={dt})"),
            MatchingRule::Union(rules) => {
                write!(f, "union[")?;
                for (i, r) in rules.iter().enumerate() {
                    if i > 0 {
                        write!(f, "|")?;
                    }
                    write!(f, "{r}")?;
                }
                write!(f, "]")
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MatchCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub predicted_total: u64,
    pub observed_total: u64,
}

impl MatchCounts {
    pub fn f1(&self) -> f64 {
        f1_from_counts(self)
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        let matched_obs = self.observed_total - self.fn_;
        ratio(matched_obs, self.observed_total)
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Whether prediction `p` matches observation `o` under `rule`.
pub fn match_predicate(p: Cell, o: Cell, rule: &MatchingRule) -> bool {
    match rule {
        MatchingRule::Exact => p == o,
        MatchingRule::Tolerated { k, dt } => {
            p.row.abs_diff(o.row) <= *k && p.col.abs_diff(o.col) <= *k && p.t.abs_diff(o.t) <= *dt
        }
        MatchingRule::Union(rules) => rules.iter().any(|r| match_predicate(p, o, r)),
    }
}

/// Pairwise O(|pred| * |obs|) reference implementation.
pub fn brute_force_counts(pred: &FireSet, obs: &FireSet, rule: &MatchingRule) -> Result<MatchCounts> {
    pred.spec().ensure_same(obs.spec(), "predicted vs observed")?;
    let tp =
        pred.members().iter().filter(|&&p| obs.members().iter().any(|&o| match_predicate(p, o, rule))).count() as u64;
    let fn_ =
        obs.members().iter().filter(|&&o| !pred.members().iter().any(|&p| match_predicate(p, o, rule))).count() as u64;
    Ok(MatchCounts {
        tp,
        fp: pred.len() as u64 - tp,
        fn_,
        predicted_total: pred.len() as u64,
        observed_total: obs.len() as u64,
    })
}

fn dense_bytes(set: &FireSet) -> Vec<u8> {
    let spec = set.spec();
    let mut mask = vec![0u8; spec.total_cells()];
    for &c in set.members() {
        mask[spec.flat_index(c)] = 1;
    }
    mask
}

/// Neighborhood of `set` under `rule`: every cell some member would match.
fn neighborhood(set: &FireSet, rule: &MatchingRule) -> Vec<u8> {
    let spec = set.spec();
    let base = dense_bytes(set);
    if set.is_empty() {
        return base;
    }
    let windows = rule.reduced_windows();
    let mut acc: Option<Vec<u8>> = None;
    for (k, dt) in windows {
        let d = dilate::dilate(&base, spec, k, dt);
        acc = Some(match acc {
            None => d,
            Some(mut a) => {
                a.iter_mut().zip(&d).for_each(|(x, y)| *x |= y);
                a
            }
        });
    }
    acc.unwrap_or_else(|| vec![0u8; spec.total_cells()])
}

/// Observation-side state reusable across many predicted sets (threshold
/// sweeps re-dilate only the prediction side).
pub struct Matcher<'a> {
    obs: &'a FireSet,
    rule: &'a MatchingRule,
    obs_neighborhood: Vec<u8>,
}

impl<'a> Matcher<'a> {
    pub fn new(obs: &'a FireSet, rule: &'a MatchingRule) -> Self {
        Self { obs_neighborhood: neighborhood(obs, rule), obs, rule }
    }

    pub fn counts(&self, pred: &FireSet) -> Result<MatchCounts> {
        let spec: &GridSpec = pred.spec();
        spec.ensure_same(self.obs.spec(), "predicted vs observed")?;
        let tp = pred.members().iter().filter(|&&c| self.obs_neighborhood[spec.flat_index(c)] != 0).count() as u64;
        let fn_ = if pred.is_empty() {
            self.obs.len() as u64
        } else {
            let pred_neighborhood = neighborhood(pred, self.rule);
            self.obs.members().iter().filter(|&&c| pred_neighborhood[spec.flat_index(c)] == 0).count() as u64
        };
        Ok(MatchCounts {
            tp,
            fp: pred.len() as u64 - tp,
            fn_,
            predicted_total: pred.len() as u64,
            observed_total: self.obs.len() as u64,
        })
    }
}

/// Fast path: counts via separable dilation. Always equal to
/// [`brute_force_counts`].
pub fn dilated_counts(pred: &FireSet, obs: &FireSet, rule: &MatchingRule) -> Result<MatchCounts> {
    pred.spec().ensure_same(obs.spec(), "predicted vs observed")?;
    Matcher::new(obs, rule).counts(pred)
}

/// `2 TP / (2 TP + FP + FN)`, and 0 when nothing was predicted or observed.
pub fn f1_from_counts(c: &MatchCounts) -> f64 {
    let den = 2 * c.tp + c.fp + c.fn_;
    if den == 0 {
        0.0
    } else {
        (2 * c.tp) as f64 / den as f64
    }
}

/// Counts for a record thresholded at `tau`, both sets restricted to `scope`.
pub fn decision_counts(record: &OutputRecord, tau: f64, rule: &MatchingRule, scope: &ScopeMask) -> Result<MatchCounts> {
    let pred = threshold_scores(record, tau, scope)?;
    let obs = observed_set(record.labels(), scope)?;
    dilated_counts(&pred, &obs, rule)
}

pub fn decision_f1(record: &OutputRecord, tau: f64, rule: &MatchingRule, scope: &ScopeMask) -> Result<f64> {
    Ok(f1_from_counts(&decision_counts(record, tau, rule, scope)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{LabelField, ScoreField};
    use proptest::prelude::*;

    fn spec() -> GridSpec {
        GridSpec::new(4, 16, 16).unwrap()
    }

    fn set(cells: &[(u32, u32, u32)]) -> FireSet {
        FireSet::from_cells(spec(), cells.iter().copied()).unwrap()
    }

    #[test]
    fn predicate_examples() {
        let p = Cell::new(0, 5, 5);
        assert!(match_predicate(p, Cell::new(0, 5, 5), &MatchingRule::Exact));
        assert!(match_predicate(p, Cell::new(0, 7, 6), &MatchingRule::tolerated(2, 0)));
        assert!(!match_predicate(p, Cell::new(0, 8, 5), &MatchingRule::tolerated(2, 0)));
        let q = Cell::new(1, 5, 5);
        assert!(!match_predicate(q, p, &MatchingRule::tolerated(8, 0)));
        assert!(match_predicate(q, p, &MatchingRule::tolerated(8, 3)));
    }

    #[test]
    fn brute_force_examples() {
        let pred = set(&[(0, 1, 1)]);
        let obs = set(&[(0, 2, 2)]);
        let c = brute_force_counts(&pred, &obs, &MatchingRule::Exact).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 1, 1));
        let c = brute_force_counts(&pred, &obs, &MatchingRule::tolerated(1, 0)).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (1, 0, 0));
    }

    #[test]
    fn empty_prediction() {
        let obs = set(&[(0, 2, 2), (3, 9, 9)]);
        let c = dilated_counts(&FireSet::empty(spec()), &obs, &MatchingRule::tolerated(8, 3)).unwrap();
        assert_eq!((c.tp, c.fp, c.fn_), (0, 0, 2));
    }

    #[test]
    fn tp_may_exceed_observed() {
        let pred = set(&[(0, 1, 1), (0, 1, 2), (0, 2, 1)]);
        let obs = set(&[(0, 2, 2)]);
        let c = dilated_counts(&pred, &obs, &MatchingRule::tolerated(1, 0)).unwrap();
        assert_eq!(c.tp, 3);
        assert_eq!(c.fn_, 0);
        assert_eq!(c.observed_total, 1);
    }

    #[test]
    fn f1_examples() {
        let c = MatchCounts { tp: 2, fp: 1, fn_: 1, predicted_total: 3, observed_total: 3 };
        assert!((f1_from_counts(&c) - 4.0 / 6.0).abs() < 1e-15);
        assert_eq!(f1_from_counts(&MatchCounts::default()), 0.0);
        let c = MatchCounts { tp: 5, fp: 0, fn_: 0, predicted_total: 5, observed_total: 5 };
        assert_eq!(f1_from_counts(&c), 1.0);
    }

    #[test]
    fn union_of_occupancy_defaults_reduces_to_widest_window() {
        let u = MatchingRule::union(vec![MatchingRule::Exact, MatchingRule::tolerated(8, 3)]).unwrap();
        assert_eq!(u.reduced_windows(), vec![(8, 3)]);
        let u = MatchingRule::union(vec![MatchingRule::tolerated(8, 0), MatchingRule::tolerated(2, 3)]).unwrap();
        assert_eq!(u.reduced_windows(), vec![(2, 3), (8, 0)]);
        assert!(MatchingRule::union(vec![]).is_err());
    }

    #[test]
    fn union_counts_equal_tolerated_8_3() {
        let pred = set(&[(0, 1, 1), (1, 9, 9), (3, 15, 0)]);
        let obs = set(&[(0, 2, 2), (3, 10, 12), (0, 15, 15)]);
        let u = MatchingRule::union(vec![MatchingRule::Exact, MatchingRule::tolerated(8, 3)]).unwrap();
        assert_eq!(
            dilated_counts(&pred, &obs, &u).unwrap(),
            dilated_counts(&pred, &obs, &MatchingRule::tolerated(8, 3)).unwrap()
        );
    }

    #[test]
    fn decision_f1_perfect_record() {
        let s = GridSpec::new(2, 4, 4).unwrap();
        let y: Vec<bool> = (0..32).map(|i| i % 5 == 0).collect();
        let scores = y.iter().map(|&b| if b { 0.9 } else { 0.1 }).collect();
        let rec = OutputRecord::new(ScoreField::new(s, scores).unwrap(), LabelField::new(s, y).unwrap()).unwrap();
        assert_eq!(decision_f1(&rec, 0.5, &MatchingRule::Exact, &ScopeMask::global(s)).unwrap(), 1.0);
    }

    #[test]
    fn display_is_stable() {
        let u = MatchingRule::union(vec![MatchingRule::Exact, MatchingRule::tolerated(8, 3)]).unwrap();
        assert_eq!(u.to_string(), "union[exact|tolerated(k=8,dt=3)]");
    }

    fn arb_cells() -> impl Strategy<Value = Vec<(u32, u32, u32)>> {
        proptest::collection::vec((0u32..4, 0u32..16, 0u32..16), 0..30)
    }

    proptest! {
        #[test]
        fn predicate_is_symmetric(a in (0u32..4, 0u32..16, 0u32..16), b in (0u32..4, 0u32..16, 0u32..16), k in 0u32..9, dt in 0u32..4) {
            let (p, o) = (Cell::from(a), Cell::from(b));
            for rule in [MatchingRule::Exact, MatchingRule::tolerated(k, dt)] {
                prop_assert_eq!(match_predicate(p, o, &rule), match_predicate(o, p, &rule));
            }
        }

        #[test]
        fn tolerated_zero_is_exact(p in arb_cells(), o in arb_cells()) {
            let (p, o) = (set(&p), set(&o));
            prop_assert_eq!(
                dilated_counts(&p, &o, &MatchingRule::tolerated(0, 0)).unwrap(),
                dilated_counts(&p, &o, &MatchingRule::Exact).unwrap()
            );
        }

        #[test]
        fn self_match_is_perfect(p in arb_cells(), k in 0u32..9, dt in 0u32..4) {
            let p = set(&p);
            let c = dilated_counts(&p, &p, &MatchingRule::tolerated(k, dt)).unwrap();
            prop_assert_eq!((c.tp, c.fp, c.fn_), (p.len() as u64, 0, 0));
        }
    }
}
