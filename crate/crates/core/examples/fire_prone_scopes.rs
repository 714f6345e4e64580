//! Fire-prone scopes: the top fraction of cells by training fire frequency,
//! frozen and reused on later steps.
//!
//! Run with `cargo run --example fire_prone_scopes`.

use firecontract::contract::{derive_fire_prone_scope, FIRE_PRONE_FRACTIONS};
use firecontract::grid::{GridSpec, LabelField, ScopeMask};
use firecontract::rng::SeededRng;
use firecontract::Result;

pub fn run() -> Result<()> {
    let spec = GridSpec::new(10, 245, 275)?;
    let mut rng = SeededRng::new(3);
    // fire frequency falls off away from the south-west corner
    let labels: Vec<bool> = (0..spec.total_cells())
        .map(|i| {
            let cell = spec.cell_at(i);
            let d = (cell.row as f64 / 245.0 - 1.0).hypot(cell.col as f64 / 275.0);
            rng.bernoulli(0.05 * (-3.0 * d).exp())
        })
        .collect();
    let train = LabelField::new(spec, labels)?;
    let test_steps = 120;
    let global = ScopeMask::global(spec.retimed(test_steps)?);
    println!("global: {} test cells", global.cell_count());
    for f in FIRE_PRONE_FRACTIONS {
        let scope = derive_fire_prone_scope(&train, f)?.retimed(test_steps)?;
        assert!(scope.is_subset_of(&global));
        println!("top {:>2}%: {} spatial cells, {} test cells", f * 100.0, scope.spatial_count(), scope.cell_count());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
