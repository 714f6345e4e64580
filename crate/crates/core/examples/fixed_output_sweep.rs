//! Fixed-output check: one record, one threshold, only the matching rule
//! varies across columns and only the scope varies across rows.
//!
//! Run with `cargo run --example fixed_output_sweep`.

use firecontract::checks::{fixed_output_check, rank_map, SweepSetup};
use firecontract::contract::{derive_fire_prone_scope, FIRE_PRONE_FRACTIONS};
use firecontract::grid::ScopeMask;
use firecontract::io::{render_report, Format};
use firecontract::synth::{generate_occupancy_scene, SceneConfig};
use firecontract::Result;

pub fn run() -> Result<()> {
    let setup = SweepSetup::occupancy();
    let mut reports = Vec::new();
    // two synthetic backbones: one displaced by 3 cells, one by 1 cell with noise
    for (name, cfg) in
        [("far", SceneConfig::new(11).displaced(3, 0)), ("near", SceneConfig::new(11).displaced(1, 1).noisy(0.1, 0.01))]
    {
        let scene = generate_occupancy_scene(&cfg)?;
        let mut scopes = vec![ScopeMask::global(*scene.record.spec())];
        for f in FIRE_PRONE_FRACTIONS {
            scopes.push(derive_fire_prone_scope(scene.record.labels(), f)?);
        }
        let report = fixed_output_check(&scene.record, 0.7, &setup, &scopes, name)?;
        print!("{}", render_report(&report, Format::Markdown)?);
        reports.push(report);
    }
    for shift in rank_map(&reports)?.shifts {
        println!("{} {}: rank {} under strict, {} under union", shift.backbone, shift.scope, shift.before, shift.after);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
