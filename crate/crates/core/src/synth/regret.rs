use serde::{Deserialize, Serialize};

use crate::contract::{occupancy_union_rule, Contract, HeadFamilySpec, ScopeSpec, TaskForm};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, LabelField, TimeSplit};
use crate::heads::{FeatureStack, TrainConfig};
use crate::metrics::{MetricId, MetricSpec};
use crate::rng::SeededRng;

/// Channels: hotspot indicator, signed spark cue, distractor noise.
pub const REGRET_CHANNELS: usize = 3;

/// Layout of the selection-regret scenario.
///
/// Fires come from two sources. Each hotspot (a small square blob flagged by
/// channel 0) ignites one random cell of its blob every step, so blob cells
/// have a low fire rate but are always near a fire. Spark cues (channel 1,
/// value +1 or -1 with equal odds) sit outside the hotspots; a fraction of
/// them burn, the rest are decoys placed farther than `isolation` cells
/// (Chebyshev) from every fire within `isolation_steps` steps.
///
/// A spark cue is a better per-cell fire predictor than a blob cell, so
/// heads that can read `|cue|` rank better. Their decoys, however, can
/// never be matched under a tolerant rule, while predicting the whole blob
/// is fully matched; thresholding those heads costs decision F1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegretScenarioConfig {
    pub spec: GridSpec,
    pub hotspots: u32,
    /// Chebyshev radius of each hotspot blob.
    pub hotspot_radius: u32,
    /// Burning spark cues per step.
    pub sparks_per_step: u32,
    /// Decoy (non-burning) spark cues per step.
    pub decoys_per_step: u32,
    pub isolation: u32,
    pub isolation_steps: u32,
    pub noise_sd: f64,
    pub train_steps: u32,
    pub validation_steps: u32,
}

impl Default for RegretScenarioConfig {
    fn default() -> Self {
        Self {
            spec: GridSpec::new(30, 48, 48).expect("static grid"),
            hotspots: 2,
            hotspot_radius: 1,
            sparks_per_step: 1,
            decoys_per_step: 2,
            isolation: 8,
            isolation_steps: 3,
            noise_sd: 0.05,
            train_steps: 16,
            validation_steps: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegretScenario {
    pub features: FeatureStack,
    pub labels: LabelField,
    pub split: TimeSplit,
    /// Hotspot centres `(row, col)`.
    pub hotspots: Vec<(u32, u32)>,
}

/// Training settings sized for the scenario: narrow heads (h = 8, H = 32).
pub fn regret_train_config() -> TrainConfig {
    TrainConfig::with_hidden(8)
}

/// Occupancy union-F1 contract over the scenario's head family, with the
/// threshold selected under the union rule.
pub fn regret_contract() -> Contract {
    Contract::new(
        TaskForm::Occupancy,
        MetricSpec::new(MetricId::UnionF1).with_selection(occupancy_union_rule()),
        Some(occupancy_union_rule()),
        ScopeSpec::Global,
        HeadFamilySpec::new(regret_train_config().family().to_vec(), "regret").expect("non-empty family"),
    )
    .expect("valid contract")
}

pub fn generate_regret_scenario(seed: u64) -> Result<RegretScenario> {
    generate_regret_scenario_with(&RegretScenarioConfig::default(), seed)
}

type Pos = (i64, i64);

fn cheb(a: Pos, b: Pos) -> i64 {
    (a.0 - b.0).abs().max((a.1 - b.1).abs())
}

pub fn generate_regret_scenario_with(cfg: &RegretScenarioConfig, seed: u64) -> Result<RegretScenario> {
    let spec = cfg.spec;
    let split = TimeSplit::new(
        0..cfg.train_steps,
        cfg.train_steps..cfg.train_steps + cfg.validation_steps,
        cfg.train_steps + cfg.validation_steps..spec.n_times(),
    )?;
    split.check(&spec)?;
    let (rows, cols) = (spec.n_rows() as i64, spec.n_cols() as i64);
    let (r, iso) = (cfg.hotspot_radius as i64, cfg.isolation as i64);
    let root = SeededRng::new(seed);
    let mut rng = root.split(1);
    let mut noise = root.split(2);
    let fail = |what: &str| Error::InvalidSceneConfig(format!("cannot place {what} on a {rows}x{cols} grid"));
    let random_cell = |rng: &mut SeededRng, margin: i64| -> Pos {
        (margin + rng.below((rows - 2 * margin) as u64) as i64, margin + rng.below((cols - 2 * margin) as u64) as i64)
    };
    if rows <= 2 * r || cols <= 2 * r {
        return Err(fail("hotspots"));
    }

    // hotspots far enough apart that their blobs and tolerance halos are distinct
    let mut hot: Vec<Pos> = Vec::new();
    for _ in 0..cfg.hotspots {
        let c = (0..10_000)
            .map(|_| random_cell(&mut rng, r))
            .find(|&c| hot.iter().all(|&h| cheb(c, h) > 2 * r + iso))
            .ok_or_else(|| fail("hotspots"))?;
        hot.push(c);
    }
    let near_hotspot = |p: Pos| hot.iter().any(|&h| cheb(p, h) <= r + iso);

    let steps = spec.n_times() as usize;
    let mut fires: Vec<Vec<Pos>> = vec![Vec::new(); steps];
    let mut sparks: Vec<Vec<Pos>> = vec![Vec::new(); steps];
    for t in 0..steps {
        for &h in &hot {
            let d = 2 * r + 1;
            fires[t].push((h.0 - r + rng.below(d as u64) as i64, h.1 - r + rng.below(d as u64) as i64));
        }
        for _ in 0..cfg.sparks_per_step {
            let c = (0..10_000)
                .map(|_| random_cell(&mut rng, 0))
                .find(|&c| !near_hotspot(c))
                .ok_or_else(|| fail("sparks"))?;
            fires[t].push(c);
            sparks[t].push(c);
        }
    }
    let window = cfg.isolation_steps as usize;
    let mut decoys: Vec<Vec<Pos>> = vec![Vec::new(); steps];
    for t in 0..steps {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(steps - 1);
        for _ in 0..cfg.decoys_per_step {
            let c = (0..10_000)
                .map(|_| random_cell(&mut rng, 0))
                .find(|&c| !near_hotspot(c) && fires[lo..=hi].iter().flatten().all(|&f| cheb(c, f) > iso))
                .ok_or_else(|| fail("decoys"))?;
            decoys[t].push(c);
        }
    }

    let slice = spec.slice_len();
    let idx = |p: Pos| (p.0 * cols + p.1) as usize;
    let mut labels = vec![false; spec.total_cells()];
    let mut values = vec![0f32; spec.total_cells() * REGRET_CHANNELS];
    for t in 0..steps {
        for &f in &fires[t] {
            labels[t * slice + idx(f)] = true;
        }
        let base = t * slice * REGRET_CHANNELS;
        let (blob, rest) = values[base..base + slice * REGRET_CHANNELS].split_at_mut(slice);
        let (cue, distractor) = rest.split_at_mut(slice);
        for &h in &hot {
            for rr in h.0 - r..=h.0 + r {
                for cc in h.1 - r..=h.1 + r {
                    blob[idx((rr, cc))] = 1.0;
                }
            }
        }
        for &c in sparks[t].iter().chain(&decoys[t]) {
            cue[idx(c)] = if rng.bernoulli(0.5) { 1.0 } else { -1.0 };
        }
        for v in blob.iter_mut().chain(cue.iter_mut()) {
            *v += (cfg.noise_sd * noise.normal()) as f32;
        }
        for v in distractor.iter_mut() {
            *v = noise.normal() as f32;
        }
    }
    Ok(RegretScenario {
        features: FeatureStack::new(spec, REGRET_CHANNELS, values)?,
        labels: LabelField::new(spec, labels)?,
        split,
        hotspots: hot.into_iter().map(|(a, b)| (a as u32, b as u32)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenario_is_deterministic_and_shaped() {
        let a = generate_regret_scenario(42).unwrap();
        assert_eq!(a, generate_regret_scenario(42).unwrap());
        assert_ne!(a.labels, generate_regret_scenario(7).unwrap().labels);
        let cfg = RegretScenarioConfig::default();
        // one blob fire per hotspot plus the sparks, every step
        let per_step = (cfg.hotspots + cfg.sparks_per_step) as usize;
        assert_eq!(a.labels.positives(), per_step * cfg.spec.n_times() as usize);
        assert_eq!(a.features.channels(), REGRET_CHANNELS);
        assert_eq!(a.split.test, 23..30);
    }

    #[test]
    fn decoys_are_isolated_from_fires() {
        let cfg = RegretScenarioConfig::default();
        let s = generate_regret_scenario(1).unwrap();
        let spec = cfg.spec;
        let steps = spec.n_times();
        for t in 0..steps {
            for row in 0..spec.n_rows() {
                for col in 0..spec.n_cols() {
                    let cue = s.features.get(t, 1, row, col).abs() > 0.5;
                    if !cue || s.labels.get((t, row, col).into()) {
                        continue;
                    }
                    for t2 in t.saturating_sub(3)..(t + 4).min(steps) {
                        for r2 in row.saturating_sub(8)..(row + 9).min(spec.n_rows()) {
                            for c2 in col.saturating_sub(8)..(col + 9).min(spec.n_cols()) {
                                assert!(!s.labels.get((t2, r2, c2).into()), "decoy at {t},{row},{col}");
                            }
                        }
                    }
                }
            }
        }
    }
}
