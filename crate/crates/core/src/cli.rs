//! Command-line front end. Exit codes: 0 success, 1 usage or config error,
//! 2 contract violation, 3 data error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::checks::{engine_conventions, fixed_feature_check, fixed_output_check, ReportRow, SweepRules, SweepSetup};
use crate::contract::{derive_fire_prone_scope, Contract, ScopeSpec};
use crate::error::{Error, Result};
use crate::eval::evaluate_record;
use crate::grid::{LabelField, OutputRecord, ScopeMask, TimeSplit};
use crate::heads::{RegretMode, TrainConfig};
use crate::io::{self, Format, RunConfig, SplitSpec};
use crate::matching::MatchingRule;
use crate::metrics::select_threshold;
use crate::synth::{self, SceneConfig, StationKind};

#[derive(Debug, Parser)]
#[command(name = "firecontract", version, about = "Fixed-contract evaluation of gridded fire forecasts")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score one output record under one contract.
    Eval(EvalArgs),
    /// Fixed-output check: vary only the matching rule.
    Sweep(SweepArgs),
    /// Fixed-feature check: vary only the head-selection metric.
    Regret(RegretArgs),
    /// Generate synthetic inputs.
    Synth(SynthArgs),
    /// Combine saved check reports into per-contract tables and rank maps.
    Report(ReportArgs),
}

#[derive(Debug, Args, Default)]
pub struct SplitArgs {
    /// Training steps as start:end.
    #[arg(long)]
    pub train: Option<String>,
    /// Validation steps as start:end.
    #[arg(long)]
    pub val: Option<String>,
    /// Test steps as start:end.
    #[arg(long)]
    pub test: Option<String>,
}

impl SplitArgs {
    fn parse(&self) -> Result<Option<SplitSpec>> {
        match (&self.train, &self.val, &self.test) {
            (None, None, None) => Ok(None),
            (Some(a), Some(b), Some(c)) => {
                let s = SplitSpec { train: io::parse_range(a)?, val: io::parse_range(b)?, test: io::parse_range(c)? };
                s.to_split()?;
                Ok(Some(s))
            }
            _ => Err(Error::Usage("give all of --train, --val and --test or none".into())),
        }
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    pub format: String,
}

impl OutputArgs {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => io::write_text(p, text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    fn format(&self) -> Result<Format> {
        self.format.parse()
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Contract file or task/metric/scope shorthand.
    #[arg(long)]
    pub contract: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub split: SplitArgs,
    /// Run configuration; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Directory holding scores.fgr and labels.fgr.
    #[arg(long, conflicts_with_all = ["scores", "labels"])]
    pub record: Option<PathBuf>,
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Strict, tolerated and union columns, e.g. strict,tolerated:8:0,union:8:3.
    #[arg(long, default_value = "strict,tolerated,union")]
    pub rules: String,
    #[arg(long, default_value = "global,top5,top10,top20")]
    pub scopes: String,
    /// Shared threshold; selected on validation under the strict rule when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub tau: Option<f64>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long, default_value = "model")]
    pub backbone: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    InSample,
    HeldOut,
}

impl From<ModeArg> for RegretMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::InSample => RegretMode::SameAsSelection,
            ModeArg::HeldOut => RegretMode::HeldOutTest,
        }
    }
}

#[derive(Debug, Args)]
pub struct RegretArgs {
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Contract file or task/metric/scope shorthand.
    #[arg(long)]
    pub contract: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    pub seeds: Option<String>,
    /// Report only this regret mode; both when absent.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub scopes: Option<String>,
    /// Pixel-MLP and shallow-adapter width (the wide adapter uses 4x).
    #[arg(long)]
    pub hidden: Option<u32>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[command(flatten)]
    pub split: SplitArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "frozen")]
    pub backbone: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SynthKind {
    Scene,
    Events,
    Stations,
    RegretScenario,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StationKindArg {
    Smoke,
    Heat,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    pub kind: SynthKind,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Scene displacement as drow,dcol.
    #[arg(long, default_value = "0,0", allow_hyphen_values = true)]
    pub displacement: String,
    #[arg(long, default_value_t = 0.0)]
    pub noise_sd: f64,
    #[arg(long, default_value_t = 0.0)]
    pub false_alarm_rate: f64,
    /// Number of events for `events`.
    #[arg(long, default_value_t = 500)]
    pub events: usize,
    #[arg(long, default_value_t = 10)]
    pub stations: u32,
    #[arg(long, default_value_t = 240)]
    pub times: u32,
    #[arg(long, value_enum, default_value = "smoke")]
    pub station_kind: StationKindArg,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Directory of saved reports.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value = "markdown")]
    pub format: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Eval(a) => eval(a),
        Command::Sweep(a) => sweep(a),
        Command::Regret(a) => regret(a),
        Command::Synth(a) => synth(a),
        Command::Report(a) => report(a),
    }
}

fn absolute(p: &Path) -> Result<PathBuf> {
    std::path::absolute(p).map_err(|e| Error::io(p, e))
}

fn required<T: Clone>(v: &Option<T>, flag: &str) -> Result<T> {
    v.clone().ok_or_else(|| Error::Usage(format!("missing --{flag}")))
}

fn load_record(scores: &Path, labels: &Path) -> Result<OutputRecord> {
    OutputRecord::new(io::read_scores(scores)?, io::read_labels(labels)?)
}

fn eval(a: EvalArgs) -> Result<()> {
    let mut run = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &a.scores {
        run.scores = Some(p.clone());
    }
    if let Some(p) = &a.labels {
        run.labels = Some(p.clone());
    }
    if let Some(c) = &a.contract {
        run.contract = Some(io::load_contract(c)?);
        run.contract_ref = None;
    }
    if a.tau.is_some() {
        run.tau = a.tau;
    }
    if let Some(s) = a.split.parse()? {
        run.split = Some(s);
    }
    let contract = run.resolve_contract()?.ok_or_else(|| Error::Usage("missing --contract".into()))?;
    // the echo is self-contained: inline contract and absolute paths
    run.contract = Some(contract.clone());
    run.contract_ref = None;
    run.scores = Some(absolute(&required(&run.scores, "scores")?)?);
    run.labels = Some(absolute(&required(&run.labels, "labels")?)?);
    run.out = None;
    run.validate()?;

    let record = load_record(run.scores.as_ref().unwrap(), run.labels.as_ref().unwrap())?;
    let split = run.split.map(SplitSpec::to_split).transpose()?;
    let result = evaluate_record(&record, &contract, split.as_ref(), run.tau)?;
    let mut config = engine_conventions();
    config.insert("check".into(), json!("eval"));
    let report = io::EvalReport { result, config, run };
    a.output.emit(&io::render_eval(&report, a.output.format()?)?)
}

fn parse_rule(s: &str, default: MatchingRule) -> Result<MatchingRule> {
    let mut parts = s.split(':');
    let name = parts.next().unwrap_or_default();
    let nums: Vec<u32> = parts
        .map(|p| p.parse().map_err(|_| Error::Usage(format!("bad rule parameter in {s:?}"))))
        .collect::<Result<_>>()?;
    let kdt = |nums: &[u32]| match nums {
        [k, dt] => Ok((*k, *dt)),
        _ => Err(Error::Usage(format!("rule {s:?} needs name:k:dt"))),
    };
    match (name, nums.is_empty()) {
        ("strict" | "exact", true) => Ok(MatchingRule::Exact),
        ("tolerated" | "union", true) => Ok(default),
        ("tolerated", false) => {
            let (k, dt) = kdt(&nums)?;
            Ok(MatchingRule::tolerated(k, dt))
        }
        ("union", false) => {
            let (k, dt) = kdt(&nums)?;
            MatchingRule::union(vec![MatchingRule::Exact, MatchingRule::tolerated(k, dt)])
        }
        _ => Err(Error::Usage(format!("unknown rule {s:?}"))),
    }
}

fn parse_rules(s: &str) -> Result<SweepRules> {
    let items: Vec<&str> = s.split(',').map(str::trim).collect();
    let [strict, tolerated, union] = items[..] else {
        return Err(Error::Usage("--rules takes exactly three rules: strict,tolerated,union".into()));
    };
    let d = SweepRules::default();
    Ok(SweepRules {
        strict: parse_rule(strict, MatchingRule::Exact)?,
        tolerated: parse_rule(tolerated, d.tolerated)?,
        union: parse_rule(union, d.union)?,
    })
}

/// Scope masks over `n_times` steps; fire-prone masks come from `train`.
fn build_scopes(list: &str, train: &LabelField, n_times: u32) -> Result<Vec<ScopeMask>> {
    let spec = train.spec().retimed(n_times)?;
    list.split(',')
        .map(|label| match ScopeSpec::parse_label(label.trim())? {
            ScopeSpec::Global => Ok(ScopeMask::global(spec)),
            ScopeSpec::FireProneTop { fraction } => derive_fire_prone_scope(train, fraction)?.retimed(n_times),
            other => Err(Error::Usage(format!("scope {} is not available here", other.label()))),
        })
        .collect()
}

fn sweep(a: SweepArgs) -> Result<()> {
    let (scores, labels) = match &a.record {
        Some(dir) => (dir.join("scores.fgr"), dir.join("labels.fgr")),
        None => (required(&a.scores, "scores")?, required(&a.labels, "labels")?),
    };
    let record = load_record(&scores, &labels)?;
    let setup = SweepSetup { rules: parse_rules(&a.rules)?, ..SweepSetup::occupancy() };
    let split = a.split.parse()?;
    let (train, val, test) = match split {
        Some(s) => {
            let s = s.to_split()?;
            s.check(record.spec())?;
            (
                record.time_slice(s.train.clone())?,
                record.time_slice(s.validation.clone())?,
                record.time_slice(s.test.clone())?,
            )
        }
        None => (record.clone(), record.clone(), record),
    };
    let (tau, source) = match a.tau {
        Some(t) => (t, "given"),
        None => {
            let scope = ScopeMask::global(*val.spec());
            (select_threshold(&val, &scope, &setup.selection_rule, None)?, "selected")
        }
    };
    let scopes = build_scopes(&a.scopes, train.labels(), test.spec().n_times())?;
    let mut report = fixed_output_check(&test, tau, &setup, &scopes, &a.backbone)?;
    report.config.insert("tau_source".into(), json!(source));
    report.config.insert("split".into(), serde_json::to_value(split)?);
    let format = a.output.format()?;
    a.output.emit(&io::render_report(&report, format)?)
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    s.split(',').map(|v| v.trim().parse().map_err(|_| Error::Usage(format!("bad seed {v:?}")))).collect()
}

fn regret(a: RegretArgs) -> Result<()> {
    let mut run = match &a.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    if let Some(p) = &a.features {
        run.features = Some(p.clone());
    }
    if let Some(p) = &a.labels {
        run.labels = Some(p.clone());
    }
    if let Some(c) = &a.contract {
        run.contract_ref = Some(c.clone());
        run.contract = None;
    }
    if let Some(s) = &a.seeds {
        run.seeds = Some(parse_seeds(s)?);
    }
    if let Some(m) = a.mode {
        run.regret_mode = Some(m.into());
    }
    if let Some(s) = &a.scopes {
        run.scopes = Some(s.split(',').map(|v| v.trim().to_string()).collect());
    }
    if let Some(s) = a.split.parse()? {
        run.split = Some(s);
    }
    run.validate()?;
    let contract: Contract = run.resolve_contract()?.ok_or_else(|| Error::Usage("missing --contract".into()))?;
    let mut cfg: TrainConfig = run.train_config(TrainConfig::default());
    if let Some(h) = a.hidden {
        let seeds = cfg.seeds.clone();
        cfg = TrainConfig { seeds, ..TrainConfig::with_hidden(h) };
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    let split: TimeSplit = run
        .split
        .ok_or_else(|| Error::Usage("regret needs --train, --val and --test (or a config with a split)".into()))?
        .to_split()?;
    let features = io::read_features(required(&run.features, "features")?)?;
    let labels = io::read_labels(required(&run.labels, "labels")?)?;
    let train_labels = labels.slice_times(split.train.clone())?;
    let scope_list = run.scopes.clone().unwrap_or_else(|| vec!["global".into(), "top5".into()]).join(",");
    let scopes = build_scopes(&scope_list, &train_labels, labels.spec().n_times())?;
    let mut report = fixed_feature_check(&features, &labels, &split, &contract, &scopes, &cfg, &a.backbone)?;
    if let Some(mode) = run.regret_mode {
        report.rows.retain(|r| matches!(r, ReportRow::Regret(g) if g.mode == mode));
        report.config.insert("regret_modes".into(), json!([mode.as_str()]));
    }
    report.config.insert("split".into(), serde_json::to_value(SplitSpec::from_split(&split))?);
    let format = a.output.format()?;
    a.output.emit(&io::render_report(&report, format)?)
}

fn parse_pair(s: &str) -> Result<(i32, i32)> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Usage(format!("expected drow,dcol, got {s:?}")))?;
    let n = |v: &str| v.trim().parse::<i32>().map_err(|_| Error::Usage(format!("bad offset {v:?}")));
    Ok((n(a)?, n(b)?))
}

fn synth(a: SynthArgs) -> Result<()> {
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    let out = |name: &str| a.out.join(name);
    let write_run = |run: &RunConfig| io::write_text(out("run.json"), &io::to_json(run)?);
    match a.kind {
        SynthKind::Scene => {
            let (dr, dc) = parse_pair(&a.displacement)?;
            let cfg = SceneConfig::new(a.seed).displaced(dr, dc).noisy(a.noise_sd, a.false_alarm_rate);
            let scene = synth::generate_occupancy_scene(&cfg)?;
            io::write_scores(scene.record.scores(), out("scores.fgr"))?;
            io::write_labels(scene.record.labels(), out("labels.fgr"))?;
            io::write_features(&scene.features, out("features.fgr"))?;
            io::write_text(out("scene.json"), &io::to_json(&cfg)?)?;
            write_run(&RunConfig {
                contract_ref: Some("occupancy/exact_f1/global".into()),
                scores: Some("scores.fgr".into()),
                labels: Some("labels.fgr".into()),
                ..RunConfig::default()
            })
        }
        SynthKind::Events => io::write_events(&synth::generate_event_table(a.events, a.seed)?, out("events.csv")),
        SynthKind::Stations => {
            let kind = match a.station_kind {
                StationKindArg::Smoke => StationKind::Smoke,
                StationKindArg::Heat => StationKind::Heat,
            };
            let series = synth::generate_station_series(a.stations, a.times, kind, a.seed)?;
            io::write_stations(&series, out("stations.csv"))
        }
        SynthKind::RegretScenario => {
            let s = synth::generate_regret_scenario(a.seed)?;
            io::write_features(&s.features, out("features.fgr"))?;
            io::write_labels(&s.labels, out("labels.fgr"))?;
            let contract = synth::regret_contract();
            io::write_text(out("contract.json"), &io::to_json(&contract)?)?;
            write_run(&RunConfig {
                contract_ref: Some("contract.json".into()),
                features: Some("features.fgr".into()),
                labels: Some("labels.fgr".into()),
                split: Some(SplitSpec::from_split(&s.split)),
                scopes: Some(vec!["global".into(), "top5".into()]),
                train: Some(synth::regret_train_config()),
                ..RunConfig::default()
            })
        }
    }
}

fn report(a: ReportArgs) -> Result<()> {
    let format: Format = a.format.parse()?;
    if format == Format::Json {
        return Err(Error::Usage("report renders csv or markdown".into()));
    }
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&a.input)
        .map_err(|e| Error::io(&a.input, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    let mut reports = Vec::new();
    for p in &paths {
        let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
        let is_report = serde_json::from_str::<serde_json::Value>(&text)
            .ok()
            .is_some_and(|v| v.get("check").is_some() && v.get("rows").is_some());
        if is_report {
            reports.push(io::read_report(p)?);
        }
    }
    if reports.is_empty() {
        return Err(Error::EmptyInput);
    }
    let tables = io::group_reports(&reports)?;
    let ranks = io::rank_maps(&reports)?;
    let text = io::render_tables(&tables, Some(&ranks), format)?;
    match &a.out {
        Some(p) => io::write_text(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
