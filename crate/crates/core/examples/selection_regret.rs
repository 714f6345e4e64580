//! Fixed-feature check: train the lightweight head family on frozen
//! features and compare ranking-based with decision-based head selection.
//!
//! Run with `cargo run --release --example selection_regret`.

use firecontract::checks::{fixed_feature_check, ReportRow};
use firecontract::contract::derive_fire_prone_scope;
use firecontract::grid::ScopeMask;
use firecontract::synth::{generate_regret_scenario, regret_contract, regret_train_config};
use firecontract::Result;

pub fn run() -> Result<()> {
    let s = generate_regret_scenario(1)?;
    let contract = regret_contract();
    let train_labels = s.labels.slice_times(s.split.train.clone())?;
    let n_times = s.labels.spec().n_times();
    let scopes = [ScopeMask::global(*s.labels.spec()), derive_fire_prone_scope(&train_labels, 0.05)?.retimed(n_times)?];
    // one seed keeps the example quick; the default config uses five
    let cfg = firecontract::heads::TrainConfig { seeds: vec![1], ..regret_train_config() };
    let report = fixed_feature_check(&s.features, &s.labels, &s.split, &contract, &scopes, &cfg, "synthetic")?;
    for row in &report.rows {
        let ReportRow::Regret(r) = row else { continue };
        let seed = &r.seeds[0];
        println!(
            "{:<6} {:<9} ranking picks {:<22} decision picks {:<22} regret {:+.4}",
            r.scope,
            r.mode.as_str(),
            seed.ranking_choice.to_string(),
            seed.decision_choice.to_string(),
            seed.delta
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
