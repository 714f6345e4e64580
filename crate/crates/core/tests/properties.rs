use std::path::Path;

use firecontract::checks::{fixed_output_check, seed_aggregate, ReportRow, SweepSetup};
use firecontract::contract::derive_fire_prone_scope;
use firecontract::grid::{GridSpec, LabelField, OutputRecord, ScopeMask, ScoreField};
use firecontract::io::{decode_grid, encode_labels, encode_scores, GridData};
use firecontract::matching::{decision_f1, MatchingRule};
use firecontract::metrics::{average_precision, default_candidates, select_threshold};
use proptest::prelude::*;

fn record() -> impl Strategy<Value = OutputRecord> {
    (1u32..=3, 1u32..=12, 1u32..=12).prop_flat_map(|(t, r, c)| {
        let n = (t * r * c) as usize;
        (prop::collection::vec(0.0f32..1.0, n), prop::collection::vec(prop::bool::weighted(0.2), n)).prop_map(
            move |(s, y)| {
                let spec = GridSpec::new(t, r, c).unwrap();
                OutputRecord::new(ScoreField::new(spec, s).unwrap(), LabelField::new(spec, y).unwrap()).unwrap()
            },
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn sweep_rows_are_ordered_by_rule(rec in record(), tau in 0.0f64..1.0) {
        let mut scopes = vec![ScopeMask::global(*rec.spec())];
        scopes.push(derive_fire_prone_scope(rec.labels(), 0.2).unwrap());
        let report = fixed_output_check(&rec, tau, &SweepSetup::occupancy(), &scopes, "m").unwrap();
        for row in &report.rows {
            let ReportRow::Sweep(r) = row else { panic!("sweep rows only") };
            prop_assert!(r.strict_f1 <= r.tolerated_f1 && r.tolerated_f1 <= r.union_f1);
            prop_assert!((0.0..=1.0).contains(&r.predicted_positive_rate));
            prop_assert_eq!(r.delta, r.union_f1 - r.strict_f1);
        }
    }

    #[test]
    fn selected_threshold_is_optimal(rec in record()) {
        let scope = ScopeMask::global(*rec.spec());
        let rule = MatchingRule::tolerated(1, 0);
        let tau = select_threshold(&rec, &scope, &rule, None).unwrap();
        let best = decision_f1(&rec, tau, &rule, &scope).unwrap();
        for c in default_candidates(&rec, &scope).unwrap() {
            let f = decision_f1(&rec, c, &rule, &scope).unwrap();
            prop_assert!(f < best || (f == best && c >= tau));
        }
    }

    #[test]
    fn grid_bytes_round_trip(rec in record()) {
        let path = Path::new("mem.fgr");
        match decode_grid(&encode_scores(rec.scores()), path).unwrap() {
            GridData::Scores(s) => prop_assert_eq!(&s, rec.scores()),
            _ => prop_assert!(false, "scores decoded as another dtype"),
        }
        match decode_grid(&encode_labels(rec.labels()), path).unwrap() {
            GridData::Labels(y) => prop_assert_eq!(&y, rec.labels()),
            _ => prop_assert!(false, "labels decoded as another dtype"),
        }
    }

    #[test]
    fn average_precision_is_a_fraction(scores in prop::collection::vec(0.0f64..1.0, 1..60), seed in 0usize..60) {
        let labels: Vec<bool> = (0..scores.len()).map(|i| i == seed % scores.len() || i % 7 == 3).collect();
        let ap = average_precision(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&ap));
    }

    #[test]
    fn seed_aggregate_ignores_order(mut values in prop::collection::vec(-10.0f64..10.0, 2..8)) {
        let a = seed_aggregate(&values).unwrap();
        values.reverse();
        let b = seed_aggregate(&values).unwrap();
        prop_assert!((a.mean - b.mean).abs() < 1e-12 && (a.std - b.std).abs() < 1e-12);
        prop_assert!(a.std >= 0.0);
    }
}
