//! Evaluation contracts: built-in task forms, comparability and ranking
//! backbones only within one contract.
//!
//! Run with `cargo run --example contracts`.

use firecontract::contract::{
    builtin_contracts, comparable, rank_within_contract, Contract, ScopeSpec, ScoredEntry, TaskForm,
};
use firecontract::io::load_contract;
use firecontract::{Error, Result};

pub fn run() -> Result<()> {
    for template in builtin_contracts() {
        println!("{} ({} contracts)", template.task, template.contracts().len());
        for c in template.contracts().iter().take(2) {
            println!("  {}", c.descriptor());
        }
    }

    let strict = load_contract("occupancy/exact_f1/global")?;
    let union = load_contract("occupancy/union_f1/global")?;
    let text = strict.canonical();
    assert!(comparable(&strict, &Contract::from_json(&text)?));
    assert!(!comparable(&strict, &union));
    assert!(!comparable(&strict, &strict.with_scope(ScopeSpec::FireProneTop { fraction: 0.05 })));

    let entries = [("a", 0.41), ("b", 0.47), ("c", 0.47)].map(|(name, score)| ScoredEntry {
        name: name.into(),
        contract: strict.clone(),
        score,
    });
    for e in rank_within_contract(&entries)? {
        println!("rank {} {} {:.2}", e.rank, e.name, e.score);
    }

    // a union-F1 score cannot be ranked against exact-F1 scores
    let mut mixed = entries.to_vec();
    mixed.push(ScoredEntry { name: "d".into(), contract: union, score: 0.9 });
    match rank_within_contract(&mixed) {
        Err(Error::ContractViolation(msg)) => println!("rejected: {msg}"),
        other => panic!("mixed ranking accepted: {other:?}"),
    }
    assert_eq!(strict.task, TaskForm::Occupancy);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
