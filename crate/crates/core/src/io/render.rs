//! Report emission. F1 values are stored as fractions and rendered here as
//! percentages with four decimals, '.' as decimal mark and no grouping.
//!
//! Every emitted table carries the contract descriptors of its columns and
//! the config echo of the reports it was built from.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::checks::{rank_map, CheckKind, CheckReport, ConfigEcho, RankMap, RegretRow, ReportRow, SweepRow};
use crate::contract::Contract;
use crate::error::{Error, Result};
use crate::eval::EvalResult;
use crate::io::config::RunConfig;

/// `100 * v` with four decimals; negative zero prints as `0.0000`.
pub fn pct(v: f64) -> String {
    let s = format!("{:.4}", v * 100.0);
    if s == "-0.0000" {
        "0.0000".into()
    } else {
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "markdown" | "md" => Ok(Format::Markdown),
            other => Err(Error::Usage(format!("unknown format {other:?}"))),
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Reads a report strictly and rejects internally mixed ones.
pub fn read_report(path: impl AsRef<Path>) -> Result<CheckReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report: CheckReport =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    report.validate()?;
    Ok(report)
}

/// An evaluation result together with the run that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalReport {
    pub result: EvalResult,
    pub config: ConfigEcho,
    /// Re-running `eval --config` on this block reproduces the report.
    pub run: RunConfig,
}

fn config_line(config: &ConfigEcho) -> Result<String> {
    Ok(serde_json::to_string(config)?)
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn md_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n|{}\n", header.join(" | "), "---|".repeat(header.len()));
    for r in rows {
        let cells: Vec<String> = r.iter().map(|c| c.replace('|', "\\|")).collect();
        let _ = writeln!(s, "| {} |", cells.join(" | "));
    }
    s
}

pub fn render_eval(report: &EvalReport, format: Format) -> Result<String> {
    let r = &report.result;
    let opt = |v: Option<f64>| v.map_or_else(String::new, pct);
    let header = ["contract", "metric", "value", "precision", "recall", "tau", "scope_cells", "config"];
    let row = vec![
        r.contract.descriptor(),
        r.contract.metric.id.to_string(),
        pct(r.value),
        opt(r.precision),
        opt(r.recall),
        r.tau.map_or_else(String::new, |t| t.to_string()),
        r.scope_cells.to_string(),
        config_line(&report.config)?,
    ];
    match format {
        Format::Json => to_json(report),
        Format::Csv => csv_text(&header, vec![row]),
        Format::Markdown => Ok(format!(
            "### {}\n\ncontract: `{}`\n\nconfig: `{}`\n\n{}",
            r.contract.descriptor(),
            r.contract.canonical(),
            config_line(&report.config)?,
            md_table(&header[..7], &[row[..7].to_vec()])
        )),
    }
}

/// Rows of one table: reports that share the same column contracts, check
/// kind and config echo.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub check: CheckKind,
    pub base_contracts: Vec<Contract>,
    pub config: ConfigEcho,
    pub rows: Vec<(String, ReportRow)>,
}

/// Groups rows of all reports into one table per (check, contracts,
/// config). Identical duplicate reports are counted once.
pub fn group_reports(reports: &[CheckReport]) -> Result<Vec<ReportTable>> {
    let mut seen: Vec<&CheckReport> = Vec::new();
    let mut tables: BTreeMap<(String, String, String), ReportTable> = BTreeMap::new();
    for report in reports {
        report.validate()?;
        if seen.contains(&report) {
            continue;
        }
        seen.push(report);
        let contracts: Vec<String> = report.base_contracts.iter().map(Contract::canonical).collect();
        let key = (format!("{:?}", report.check), contracts.join("\n"), config_line(&report.config)?);
        let table = tables.entry(key).or_insert_with(|| ReportTable {
            check: report.check,
            base_contracts: report.base_contracts.clone(),
            config: report.config.clone(),
            rows: Vec::new(),
        });
        for row in &report.rows {
            table.rows.push((report.backbone.clone(), row.clone()));
        }
    }
    Ok(tables.into_values().collect())
}

const SWEEP_HEADER: [&str; 8] =
    ["backbone", "scope", "strict_f1", "tolerated_f1", "union_f1", "delta", "predicted_positive_rate", "contracts"];

fn sweep_cells(r: &SweepRow) -> Vec<String> {
    let descriptors: Vec<String> = r.contracts.iter().map(Contract::descriptor).collect();
    vec![
        r.backbone.clone(),
        r.scope.clone(),
        pct(r.strict_f1),
        pct(r.tolerated_f1),
        pct(r.union_f1),
        pct(r.delta),
        pct(r.predicted_positive_rate),
        descriptors.join(" ; "),
    ]
}

const REGRET_HEADER: [&str; 8] =
    ["backbone", "scope", "mode", "regret_mean", "regret_std", "n_seeds", "per_seed", "contracts"];

fn regret_cells(backbone: &str, r: &RegretRow) -> Vec<String> {
    let per_seed: Vec<String> = r.seeds.iter().map(|s| format!("{}:{}", s.seed, pct(s.delta))).collect();
    let descriptors: Vec<String> = r.contracts.iter().map(Contract::descriptor).collect();
    vec![
        backbone.to_string(),
        r.scope.clone(),
        r.mode.as_str().to_string(),
        pct(r.stat.mean),
        pct(r.stat.std),
        r.stat.n_seeds.to_string(),
        per_seed.join(" "),
        descriptors.join(" ; "),
    ]
}

fn table_cells(table: &ReportTable) -> (&'static [&'static str], Vec<Vec<String>>) {
    match table.check {
        CheckKind::FixedOutput => (
            &SWEEP_HEADER,
            table
                .rows
                .iter()
                .filter_map(|(_, r)| match r {
                    ReportRow::Sweep(s) => Some(sweep_cells(s)),
                    ReportRow::Regret(_) => None,
                })
                .collect(),
        ),
        CheckKind::FixedFeature => (
            &REGRET_HEADER,
            table
                .rows
                .iter()
                .filter_map(|(b, r)| match r {
                    ReportRow::Regret(g) => Some(regret_cells(b, g)),
                    ReportRow::Sweep(_) => None,
                })
                .collect(),
        ),
    }
}

/// Renders one check report as a single table.
pub fn render_report(report: &CheckReport, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(report),
        _ => render_tables(&group_reports(std::slice::from_ref(report))?, None, format),
    }
}

fn rank_rows(map: &RankMap) -> (Vec<Vec<String>>, Vec<Vec<String>>) {
    let ranks = map
        .tables
        .iter()
        .flat_map(|t| {
            t.entries
                .iter()
                .map(move |e| vec![t.contract.descriptor(), e.name.clone(), e.rank.to_string(), pct(e.score)])
        })
        .collect();
    let shifts = map
        .shifts
        .iter()
        .map(|s| {
            vec![
                s.backbone.clone(),
                s.scope.clone(),
                s.before.to_string(),
                s.after.to_string(),
                format!("{:+}", s.delta()),
            ]
        })
        .collect();
    (ranks, shifts)
}

const RANK_HEADER: [&str; 4] = ["contract", "backbone", "rank", "score"];
const SHIFT_HEADER: [&str; 5] = ["backbone", "scope", "strict_rank", "union_rank", "shift"];

/// Renders tables (and rank maps when given) as CSV or Markdown. CSV output
/// holds one block per table, each with its own header; every row repeats
/// the table's config echo.
pub fn render_tables(tables: &[ReportTable], ranks: Option<&[RankMap]>, format: Format) -> Result<String> {
    let mut out = String::new();
    for (i, table) in tables.iter().enumerate() {
        let (header, rows) = table_cells(table);
        let config = config_line(&table.config)?;
        let descriptors: Vec<String> = table.base_contracts.iter().map(Contract::descriptor).collect();
        match format {
            Format::Csv => {
                if i > 0 {
                    out.push('\n');
                }
                let mut h = header.to_vec();
                h.push("config");
                let rows = rows
                    .into_iter()
                    .map(|mut r| {
                        r.push(config.clone());
                        r
                    })
                    .collect();
                out.push_str(&csv_text(&h, rows)?);
            }
            Format::Markdown => {
                let _ = writeln!(out, "### Table {}: {}\n", i + 1, descriptors.join(" ; "));
                for c in &table.base_contracts {
                    let _ = writeln!(out, "- contract: `{}`", c.canonical());
                }
                let _ = writeln!(out, "- config: `{config}`\n");
                out.push_str(&md_table(&header[..header.len() - 1], &strip_last(&rows)));
                out.push('\n');
            }
            Format::Json => return Err(Error::Usage("tables render as csv or markdown".into())),
        }
    }
    for map in ranks.unwrap_or_default() {
        if map.tables.is_empty() {
            continue;
        }
        let config = config_line(&map.tables[0].config)?;
        let (ranks, shifts) = rank_rows(map);
        match format {
            Format::Csv => {
                out.push('\n');
                let add = |rows: Vec<Vec<String>>| -> Vec<Vec<String>> {
                    rows.into_iter()
                        .map(|mut r| {
                            r.push(config.clone());
                            r
                        })
                        .collect()
                };
                out.push_str(&csv_text(&[&RANK_HEADER[..], &["config"]].concat(), add(ranks))?);
                out.push('\n');
                out.push_str(&csv_text(&[&SHIFT_HEADER[..], &["config"]].concat(), add(shifts))?);
            }
            _ => {
                let _ = writeln!(out, "### Rank map\n\n- config: `{config}`\n");
                out.push_str(&md_table(&RANK_HEADER, &ranks));
                out.push_str("\n#### Strict to union rank shifts\n\n");
                out.push_str(&md_table(&SHIFT_HEADER, &shifts));
                out.push('\n');
            }
        }
    }
    Ok(out)
}

fn strip_last(rows: &[Vec<String>]) -> Vec<Vec<String>> {
    rows.iter().map(|r| r[..r.len() - 1].to_vec()).collect()
}

/// Rank maps of the fixed-output tables, one per config echo.
pub fn rank_maps(reports: &[CheckReport]) -> Result<Vec<RankMap>> {
    let mut by_config: BTreeMap<String, Vec<CheckReport>> = BTreeMap::new();
    let mut seen: Vec<&CheckReport> = Vec::new();
    for r in reports.iter().filter(|r| r.check == CheckKind::FixedOutput) {
        if seen.contains(&r) {
            continue;
        }
        seen.push(r);
        by_config.entry(config_line(&r.config)?).or_default().push(r.clone());
    }
    by_config.values().map(|group| rank_map(group)).collect()
}
