//! Train each lightweight head on frozen scene features, verify its
//! gradient numerically and score it on held-out steps.
//!
//! Run with `cargo run --release --example train_heads`.

use firecontract::contract::occupancy_union_rule;
use firecontract::grid::{GridSpec, LabelField, OutputRecord, ScopeMask};
use firecontract::heads::{
    gradient_check, head_scores, train_head_traced, ClassWeights, FeatureStack, HeadParams, TrainConfig,
};
use firecontract::matching::decision_f1;
use firecontract::metrics::select_threshold;
use firecontract::rng::SeededRng;
use firecontract::synth::{generate_occupancy_scene, SceneConfig};
use firecontract::Result;

pub fn run() -> Result<()> {
    let mut cfg = SceneConfig::new(4).displaced(1, 0).noisy(0.1, 0.01);
    cfg.spec = GridSpec::new(6, 32, 32)?;
    cfg.n_events = 3;
    let scene = generate_occupancy_scene(&cfg)?;
    let train_f = scene.features.time_slice(0..4)?;
    let train_y = scene.record.labels().slice_times(0..4)?;
    let test_f = scene.features.time_slice(4..6)?;
    let test_y = scene.record.labels().slice_times(4..6)?;

    let train_cfg = TrainConfig { epochs: 60, ..TrainConfig::with_hidden(4) };
    let (w_pos, w_neg) = ClassWeights::Balanced.resolve(train_y.values().len(), train_y.positives());
    let rule = occupancy_union_rule();
    for kind in train_cfg.family() {
        let (params, losses) = train_head_traced(kind, &train_f, &train_y, &train_cfg, 1)?;

        // gradient check at a random point on a small random problem, redrawn
        // while a hidden unit sits within finite-difference reach of its kink
        let mut rng = SeededRng::new(9);
        let d = params.channels();
        let spec = GridSpec::new(1, 5, 5)?;
        let check = loop {
            let f = FeatureStack::new(spec, d, (0..25 * d).map(|_| rng.normal() as f32).collect())?;
            let y = LabelField::new(spec, (0..25).map(|_| rng.bernoulli(0.3)).collect())?;
            let w = (0..kind.param_count(d)).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let check = gradient_check(&HeadParams::new(kind, d, w)?, &f, &y, w_pos, w_neg)?;
            if check.min_abs_preactivation > 1e-3 {
                break check;
            }
        };

        let test = OutputRecord::new(head_scores(&params, &test_f)?, test_y.clone())?;
        let scope = ScopeMask::global(*test.spec());
        let tau = select_threshold(&test, &scope, &rule, None)?;
        println!(
            "{:<22} loss {:.4} -> {:.4}  grad rel err {:.1e}  union F1 {:.4}",
            kind.to_string(),
            losses[0],
            losses[losses.len() - 1],
            check.max_rel_error,
            decision_f1(&test, tau, &rule, &scope)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
