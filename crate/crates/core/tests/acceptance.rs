//! Acceptance suite: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use firecontract::checks::{fixed_feature_check, seed_aggregate, ReportRow};
use firecontract::contract::{
    builtin_contracts, comparable, derive_fire_prone_scope, occupancy_union_rule, rank_within_contract, Contract,
    HeadFamilySpec, ScopeSpec, ScoredEntry, FIRE_PRONE_FRACTIONS,
};
use firecontract::grid::{FireSet, GridSpec, LabelField, OutputRecord, ScopeMask, ScoreField};
use firecontract::heads::{gradient_check, FeatureStack, HeadKind, HeadParams, RegretMode, TrainConfig, DEFAULT_SEEDS};
use firecontract::io::{read_labels, read_scores, write_labels, write_scores};
use firecontract::matching::{
    brute_force_counts, decision_f1, dilated_counts, f1_from_counts, MatchCounts, MatchingRule,
};
use firecontract::metrics::{average_precision, ndcg_at_k, select_threshold, spearman_rho};
use firecontract::rng::SeededRng;
use firecontract::synth::{
    generate_occupancy_scene, generate_regret_scenario, regret_contract, regret_train_config, SceneConfig,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, budget_s: f64) -> Result<(), String> {
    ensure(elapsed.as_secs_f64() < budget_s, || format!("took {:.1} s, budget {budget_s} s", elapsed.as_secs_f64()))
}

fn random_spec(rng: &mut SeededRng, max_t: u64, max_side: u64) -> GridSpec {
    GridSpec::new(1 + rng.below(max_t) as u32, 1 + rng.below(max_side) as u32, 1 + rng.below(max_side) as u32).unwrap()
}

fn random_set(rng: &mut SeededRng, spec: GridSpec, p: f64) -> FireSet {
    let mask: Vec<bool> = (0..spec.total_cells()).map(|_| rng.bernoulli(p)).collect();
    FireSet::from_dense(spec, &mask).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(1);
    let rules: Vec<MatchingRule> =
        [0, 1, 2, 8].iter().flat_map(|&k| [0, 1, 3].map(|dt| MatchingRule::tolerated(k, dt))).collect();
    let pairs = 200;
    for i in 0..pairs {
        let spec = random_spec(&mut rng, 4, 16);
        let density = rng.uniform_in(0.0, 0.3);
        let (pred, obs) = (random_set(&mut rng, spec, density), random_set(&mut rng, spec, density));
        for rule in &rules {
            let fast = dilated_counts(&pred, &obs, rule).map_err(|e| e.to_string())?;
            let slow = brute_force_counts(&pred, &obs, rule).map_err(|e| e.to_string())?;
            ensure(fast == slow, || format!("pair {i} {rule}: {fast:?} vs {slow:?}"))?;
        }
    }
    within(start.elapsed(), 30.0)?;
    Ok(format!("{pairs} pairs x {} rules equal", rules.len()))
}

fn random_record(rng: &mut SeededRng) -> OutputRecord {
    let spec = random_spec(rng, 4, 16);
    let p = rng.uniform_in(0.01, 0.3);
    let labels: Vec<bool> = (0..spec.total_cells()).map(|_| rng.bernoulli(p)).collect();
    let scores: Vec<f32> = labels.iter().map(|&y| (rng.uniform() + if y { 0.3 } else { 0.0 }) as f32).collect();
    OutputRecord::new(ScoreField::new(spec, scores).unwrap(), LabelField::new(spec, labels).unwrap()).unwrap()
}

fn monotonicity() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(2);
    let (tol, union) = (MatchingRule::tolerated(8, 0), occupancy_union_rule());
    let zero = MatchingRule::tolerated(0, 0);
    for i in 0..1000 {
        let record = random_record(&mut rng);
        let scope = ScopeMask::global(*record.spec());
        let tau = rng.uniform_in(0.0, 1.3);
        let f = |rule: &MatchingRule| decision_f1(&record, tau, rule, &scope).map_err(|e| e.to_string());
        let (strict, tolerated, unioned) = (f(&MatchingRule::Exact)?, f(&tol)?, f(&union)?);
        ensure(strict <= tolerated && tolerated <= unioned, || {
            format!("record {i}: {strict} <= {tolerated} <= {unioned} violated")
        })?;
        ensure(f(&zero)?.to_bits() == strict.to_bits(), || format!("record {i}: tolerated(0,0) differs from exact"))?;
    }
    within(start.elapsed(), 60.0)?;
    Ok("0 violations over 1000 records".into())
}

fn fixed_output_reproduction() -> Outcome {
    let union = occupancy_union_rule();
    let tol = MatchingRule::tolerated(8, 0);
    let mut worst = (f64::NEG_INFINITY, f64::INFINITY);
    for seed in DEFAULT_SEEDS {
        let start = Instant::now();
        let f1_at_selected = |cfg: SceneConfig, rules: [&MatchingRule; 2]| -> Result<[f64; 2], String> {
            let scene = generate_occupancy_scene(&cfg).map_err(|e| e.to_string())?;
            let scope = ScopeMask::global(*scene.record.spec());
            let tau = select_threshold(&scene.record, &scope, &union, None).map_err(|e| e.to_string())?;
            let f = |r: &MatchingRule| decision_f1(&scene.record, tau, r, &scope).map_err(|e| e.to_string());
            Ok([f(rules[0])?, f(rules[1])?])
        };
        let [exact, tolerated] = f1_at_selected(SceneConfig::new(seed).displaced(3, 0), [&MatchingRule::Exact, &tol])?;
        ensure(exact == 0.0 && tolerated == 1.0, || {
            format!("seed {seed} noise free: exact {exact}, tolerated {tolerated}")
        })?;
        let [exact, unioned] =
            f1_at_selected(SceneConfig::new(seed).displaced(3, 0).noisy(0.1, 0.02), [&MatchingRule::Exact, &union])?;
        ensure(exact < 0.05 && unioned > 0.80, || format!("seed {seed} noisy: exact {exact}, union {unioned}"))?;
        worst = (worst.0.max(exact), worst.1.min(unioned));
        within(start.elapsed(), 10.0)?;
    }
    Ok(format!("noisy worst case: exact {:.4}, union {:.4}", worst.0, worst.1))
}

fn run_bin(args: &[&str]) -> Result<std::process::Output, String> {
    Command::new(env!("CARGO_BIN_EXE_firecontract")).args(args).output().map_err(|e| e.to_string())
}

fn sweep_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let synth = run_bin(&[
        "synth",
        "scene",
        "--seed",
        "42",
        "--displacement",
        "3,0",
        "--noise-sd",
        "0.1",
        "--out",
        &p("scene"),
    ])?;
    ensure(synth.status.success(), || String::from_utf8_lossy(&synth.stderr).into_owned())?;
    for out in ["a.json", "b.json"] {
        let sweep = run_bin(&["sweep", "--record", &p("scene"), "--out", &p(out)])?;
        ensure(sweep.status.success(), || String::from_utf8_lossy(&sweep.stderr).into_owned())?;
    }
    let read = |name: &str| std::fs::read(dir.path().join(name)).map_err(|e| e.to_string());
    let (a, b) = (read("a.json")?, read("b.json")?);
    ensure(a == b, || "sweep reports differ".into())?;
    Ok(format!("two {}-byte reports identical", a.len()))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = SeededRng::new(5);
    let spec = GridSpec::new(1, 5, 5).unwrap();
    let d = 3;
    let mut summary = Vec::new();
    for kind in TrainConfig::default().family() {
        let (mut worst, mut trials) = (0.0f64, 0);
        while trials < 20 {
            let f = FeatureStack::new(spec, d, (0..25 * d).map(|_| rng.normal() as f32).collect()).unwrap();
            let y = LabelField::new(spec, (0..25).map(|_| rng.bernoulli(0.3)).collect()).unwrap();
            let w = (0..kind.param_count(d)).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
            let params = HeadParams::new(kind, d, w).map_err(|e| e.to_string())?;
            let check = gradient_check(&params, &f, &y, 1.7, 0.6).map_err(|e| e.to_string())?;
            // a hidden unit within a step of its ReLU kink has no derivative to compare
            if check.min_abs_preactivation < 1e-3 {
                continue;
            }
            worst = worst.max(check.max_rel_error);
            trials += 1;
        }
        ensure(worst < 1e-6, || format!("{kind}: relative error {worst:e}"))?;
        summary.push(format!("{}={worst:.0e}", kind.name()));
    }
    within(start.elapsed(), 60.0)?;
    Ok(summary.join(" "))
}

fn selection_regret() -> Outcome {
    let start = Instant::now();
    let s = generate_regret_scenario(1).map_err(|e| e.to_string())?;
    let train = s.labels.slice_times(s.split.train.clone()).map_err(|e| e.to_string())?;
    let n_times = s.labels.spec().n_times();
    let scopes = [
        ScopeMask::global(*s.labels.spec()),
        derive_fire_prone_scope(&train, FIRE_PRONE_FRACTIONS[0])
            .and_then(|m| m.retimed(n_times))
            .map_err(|e| e.to_string())?,
    ];
    let report = fixed_feature_check(
        &s.features,
        &s.labels,
        &s.split,
        &regret_contract(),
        &scopes,
        &regret_train_config(),
        "synthetic",
    )
    .map_err(|e| e.to_string())?;
    let same = |scope: &str| {
        report.rows.iter().find_map(|r| match r {
            ReportRow::Regret(r) if r.scope == scope && r.mode == RegretMode::SameAsSelection => Some(r.clone()),
            _ => None,
        })
    };
    let global = same("global").ok_or("no global in-sample row")?;
    let prone = same(&ScopeSpec::from_kind(scopes[1].kind()).label()).ok_or("no fire-prone in-sample row")?;
    ensure(global.seeds.len() == 5 && prone.seeds.len() == 5, || "expected five seeds".into())?;
    for row in [&global, &prone] {
        if let Some(bad) = row.seeds.iter().find(|s| s.delta < 0.0) {
            return Err(format!("{} seed {} has regret {}", row.scope, bad.seed, bad.delta));
        }
    }
    let positive = global.seeds.iter().filter(|s| s.delta > 0.0).count();
    ensure(positive >= 3, || format!("only {positive} of 5 global seeds have positive regret"))?;
    ensure(prone.stat.mean <= global.stat.mean, || {
        format!("mean regret fire-prone {} > global {}", prone.stat.mean, global.stat.mean)
    })?;
    within(start.elapsed(), 300.0)?;
    Ok(format!(
        "global mean {:.4} ({positive}/5 positive), {} mean {:.4}",
        global.stat.mean, prone.scope, prone.stat.mean
    ))
}

fn scope_proportionality() -> Outcome {
    let spec = GridSpec::new(4, 245, 275).unwrap();
    let mut rng = SeededRng::new(7);
    let labels: Vec<bool> = (0..spec.total_cells()).map(|_| rng.bernoulli(0.02)).collect();
    let train = LabelField::new(spec, labels).unwrap();
    let test_steps = 120;
    let global = ScopeMask::global(spec.retimed(test_steps).unwrap());
    ensure(global.cell_count() == 8_085_000, || format!("global scope {}", global.cell_count()))?;
    let mut counts = Vec::new();
    for f in FIRE_PRONE_FRACTIONS {
        let scope =
            derive_fire_prone_scope(&train, f).and_then(|m| m.retimed(test_steps)).map_err(|e| e.to_string())?;
        counts.push(scope.cell_count());
    }
    ensure(counts == [404_280, 808_560, 1_617_000], || format!("scope sizes {counts:?}"))?;
    Ok(format!("{counts:?} of 8085000"))
}

fn metric_units() -> Outcome {
    let c = MatchCounts { tp: 2, fp: 1, fn_: 1, predicted_total: 3, observed_total: 3 };
    ensure(f1_from_counts(&c) == 2.0 / 3.0, || format!("f1 {}", f1_from_counts(&c)))?;
    let ap = average_precision(&[0.9, 0.2, 0.1], &[true, false, false]).map_err(|e| e.to_string())?;
    ensure(ap == 1.0, || format!("ap {ap}"))?;
    let ndcg = ndcg_at_k(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], 3);
    ensure((ndcg - 0.6309297535714574).abs() < 1e-9, || format!("ndcg {ndcg}"))?;
    let rho = spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).map_err(|e| e.to_string())?;
    ensure(rho == 0.6, || format!("spearman {rho}"))?;
    let stat = seed_aggregate(&[1.0, 2.0, 3.0, 4.0, 5.0]).map_err(|e| e.to_string())?;
    ensure((stat.std - 2.5f64.sqrt()).abs() < 1e-12, || format!("std {}", stat.std))?;
    Ok("f1, ap, ndcg, spearman, seed std".into())
}

fn contract_pool() -> Vec<Contract> {
    let mut pool: Vec<Contract> = builtin_contracts().iter().flat_map(|t| t.contracts()).collect();
    let narrow = HeadFamilySpec::new(vec![HeadKind::ConstantPrior, HeadKind::LinearProbe], "narrow").unwrap();
    let extra: Vec<Contract> = pool
        .iter()
        .take(6)
        .flat_map(|c| {
            let mut other = c.clone();
            other.head_family = narrow.clone();
            [other, c.with_scope(ScopeSpec::SpreadRegion)]
        })
        .collect();
    pool.extend(extra);
    pool
}

fn contract_discipline() -> Outcome {
    let pool = contract_pool();
    let a = ScoredEntry { name: "a".into(), contract: pool[0].clone(), score: 0.5 };
    let b = ScoredEntry { name: "b".into(), contract: pool[1].clone(), score: 0.4 };
    match rank_within_contract(&[a, b]) {
        Err(e) if e.exit_code() == 2 => {}
        other => return Err(format!("mixed ranking accepted: {other:?}")),
    }

    // a report whose rows carry a second contract must be refused
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let synth = run_bin(&["synth", "scene", "--seed", "7", "--out", &p("scene")])?;
    ensure(synth.status.success(), || String::from_utf8_lossy(&synth.stderr).into_owned())?;
    let sweep = run_bin(&["sweep", "--record", &p("scene"), "--out", &p("clean.json")])?;
    ensure(sweep.status.success(), || String::from_utf8_lossy(&sweep.stderr).into_owned())?;
    let text = std::fs::read_to_string(p("clean.json")).map_err(|e| e.to_string())?;
    let mut json: serde_json::Value = serde_json::from_str(&text).map_err(|e| e.to_string())?;
    json["rows"][1]["contracts"][0]["head_family"]["train_config"] = "other".into();
    let mixed = dir.path().join("mixed");
    std::fs::create_dir(&mixed).map_err(|e| e.to_string())?;
    std::fs::write(mixed.join("report.json"), json.to_string()).map_err(|e| e.to_string())?;
    let report = run_bin(&["report", "--in", &mixed.to_string_lossy()])?;
    ensure(report.status.code() == Some(2), || format!("report exit {:?}", report.status.code()))?;

    let mut runner = TestRunner::new(Config { cases: 512, failure_persistence: None, ..Config::default() });
    let idx = 0..pool.len();
    runner
        .run(&(idx.clone(), idx.clone(), idx), |(i, j, k)| {
            let (x, y, z) = (&pool[i], &pool[j], &pool[k]);
            prop_assert!(comparable(x, x));
            prop_assert_eq!(comparable(x, y), comparable(y, x));
            if comparable(x, y) && comparable(y, z) {
                prop_assert!(comparable(x, z));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    Ok(format!("mixtures refused, equivalence over {} contracts", pool.len()))
}

fn matching_performance() -> Outcome {
    let spec = GridSpec::new(10, 2000, 2000).unwrap();
    let mut rng = SeededRng::new(10);
    let (pred, obs) = (random_set(&mut rng, spec, 0.01), random_set(&mut rng, spec, 0.01));
    let rule = MatchingRule::tolerated(8, 3);
    // single-threaded: the matcher runs on the calling thread only
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let counts = pool.install(|| dilated_counts(&pred, &obs, &rule)).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(counts.predicted_total == pred.len() as u64, || "counts cover a different set".into())?;
    within(elapsed, 5.0)?;
    Ok(format!("40M cells in {:.2} s", elapsed.as_secs_f64()))
}

fn round_trip() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut rng = SeededRng::new(11);
    for i in 0..100 {
        let spec = random_spec(&mut rng, 4, 37);
        let scores: Vec<f32> = (0..spec.total_cells()).map(|_| (rng.normal() * 1e3) as f32).collect();
        let field = ScoreField::new(spec, scores).unwrap();
        let path = dir.path().join(format!("s{i}.fgr"));
        write_scores(&field, &path).map_err(|e| e.to_string())?;
        let back = read_scores(&path).map_err(|e| e.to_string())?;
        let bits = |f: &ScoreField| f.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
        ensure(back.spec() == field.spec() && bits(&back) == bits(&field), || format!("score field {i} differs"))?;

        let labels = LabelField::new(spec, (0..spec.total_cells()).map(|_| rng.bernoulli(0.4)).collect()).unwrap();
        let path = dir.path().join(format!("l{i}.fgr"));
        write_labels(&labels, &path).map_err(|e| e.to_string())?;
        ensure(read_labels(&path).map_err(|e| e.to_string())? == labels, || format!("label field {i} differs"))?;
    }
    Ok("100 score and 100 label fields bit-exact".into())
}

fn main() {
    // the binary the CLI criteria call is built by cargo alongside this target
    assert!(Path::new(env!("CARGO_BIN_EXE_firecontract")).exists());
    let criteria: [Criterion; 11] = [
        ("oracle equivalence", oracle_equivalence),
        ("matching-rule monotonicity", monotonicity),
        ("displaced scene: exact vs tolerated F1", fixed_output_reproduction),
        ("fixed-output determinism", sweep_determinism),
        ("gradient correctness", gradient_correctness),
        ("selection regret", selection_regret),
        ("scope proportionality", scope_proportionality),
        ("metric units", metric_units),
        ("contract discipline", contract_discipline),
        ("matching performance", matching_performance),
        ("grid file round trip", round_trip),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.1} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
