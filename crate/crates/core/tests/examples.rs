//! Every example runs to completion.

#[path = "../examples/contracts.rs"]
mod contracts;
#[path = "../examples/file_formats.rs"]
mod file_formats;
#[path = "../examples/fire_prone_scopes.rs"]
mod fire_prone_scopes;
#[path = "../examples/fixed_output_sweep.rs"]
mod fixed_output_sweep;
#[path = "../examples/matching_rules.rs"]
mod matching_rules;
#[path = "../examples/selection_regret.rs"]
mod selection_regret;
#[path = "../examples/supporting_metrics.rs"]
mod supporting_metrics;
#[path = "../examples/train_heads.rs"]
mod train_heads;

#[test]
fn contracts_runs() {
    contracts::run().unwrap();
}

#[test]
fn file_formats_runs() {
    file_formats::run().unwrap();
}

#[test]
fn fire_prone_scopes_runs() {
    fire_prone_scopes::run().unwrap();
}

#[test]
fn fixed_output_sweep_runs() {
    fixed_output_sweep::run().unwrap();
}

#[test]
fn matching_rules_runs() {
    matching_rules::run().unwrap();
}

#[test]
fn selection_regret_runs() {
    selection_regret::run().unwrap();
}

#[test]
fn supporting_metrics_runs() {
    supporting_metrics::run().unwrap();
}

#[test]
fn train_heads_runs() {
    train_heads::run().unwrap();
}
