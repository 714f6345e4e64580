//! Exact, tolerated and union matching on a displaced synthetic scene.
//!
//! Run with `cargo run --example matching_rules`.

use firecontract::contract::occupancy_union_rule;
use firecontract::grid::{observed_set, threshold_scores, ScopeMask};
use firecontract::matching::{brute_force_counts, dilated_counts, MatchingRule};
use firecontract::synth::{generate_occupancy_scene, SceneConfig};
use firecontract::Result;

pub fn run() -> Result<()> {
    // every predicted disc sits three rows below its fire
    let scene = generate_occupancy_scene(&SceneConfig::new(7).displaced(3, 0))?;
    let scope = ScopeMask::global(*scene.record.spec());
    let pred = threshold_scores(&scene.record, 0.75, &scope)?;
    let obs = observed_set(scene.record.labels(), &scope)?;
    println!("{} predicted cells, {} observed cells", pred.len(), obs.len());

    let rules =
        [MatchingRule::Exact, MatchingRule::tolerated(1, 0), MatchingRule::tolerated(8, 0), occupancy_union_rule()];
    println!("{:<36} {:>6} {:>6} {:>6} {:>8}", "rule", "tp", "fp", "fn", "f1");
    for rule in &rules {
        let fast = dilated_counts(&pred, &obs, rule)?;
        // the pairwise reference agrees on every count
        assert_eq!(fast, brute_force_counts(&pred, &obs, rule)?);
        println!("{:<36} {:>6} {:>6} {:>6} {:>8.4}", rule.to_string(), fast.tp, fast.fp, fast.fn_, fast.f1());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
