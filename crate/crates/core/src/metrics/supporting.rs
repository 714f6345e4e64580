//! Scoring for the four supporting task forms: burned area, analog
//! retrieval, smoke PM2.5 and extreme heat.

use serde::{Deserialize, Serialize};

use super::correlation::{pearson_r, spearman_rho};
use super::ranking::ndcg_at_k;
use super::regression::{exceedance_f1, log_error_metrics, mae, rmse, ExceedanceScores, LogErrors};
use super::tables::{EventTable, Split, StationSeries, StationUnit};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BurnedAreaScores {
    pub log: LogErrors,
    pub spearman_rho: f64,
}

pub fn burned_area_scores(pred_acres: &[f64], true_acres: &[f64]) -> Result<BurnedAreaScores> {
    Ok(BurnedAreaScores {
        log: log_error_metrics(pred_acres, true_acres)?,
        spearman_rho: spearman_rho(pred_acres, true_acres)?,
    })
}

/// Graded relevance of a retrieved analog: `1 / (1 + |log10 a_q - log10 a_j|)`.
pub fn analog_relevance(query_acres: f64, candidate_acres: f64) -> f64 {
    1.0 / (1.0 + (query_acres.log10() - candidate_acres.log10()).abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalScores {
    /// Mean nDCG@k over queries.
    pub ndcg: f64,
    pub k: usize,
    /// Log errors of the top-1 retrieved event's area against the query's.
    pub retrieved_log_errors: LogErrors,
    pub n_queries: usize,
}

/// Leave-one-out analog retrieval. Each event in `queries` retrieves its
/// nearest neighbours by Euclidean feature distance from every other event
/// in the table (ties by table order).
pub fn analog_retrieval(table: &EventTable, queries: Split, k: usize) -> Result<RetrievalScores> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be at least 1".into()));
    }
    let rows = table.rows();
    if rows.len() < 2 {
        return Err(Error::EmptyInput);
    }
    let mut ndcg_sum = 0.0;
    let mut top1 = Vec::new();
    let mut truth = Vec::new();
    for (qi, q) in rows.iter().enumerate().filter(|(_, r)| r.split == queries) {
        let mut neighbours: Vec<(f64, usize)> = rows
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != qi)
            .map(|(j, c)| (squared_distance(&q.features, &c.features), j))
            .collect();
        neighbours.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let retrieved: Vec<f64> =
            neighbours.iter().map(|&(_, j)| analog_relevance(q.burned_area_acres, rows[j].burned_area_acres)).collect();
        let mut ideal = retrieved.clone();
        ideal.sort_by(|a, b| b.total_cmp(a));
        ndcg_sum += ndcg_at_k(&retrieved, &ideal, k);
        top1.push(rows[neighbours[0].1].burned_area_acres);
        truth.push(q.burned_area_acres);
    }
    if truth.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(RetrievalScores {
        ndcg: ndcg_sum / truth.len() as f64,
        k,
        retrieved_log_errors: log_error_metrics(&top1, &truth)?,
        n_queries: truth.len(),
    })
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Default exceedance threshold for smoke stations, PM2.5 in ug/m3.
pub const SMOKE_EXCEEDANCE: f64 = 35.0;
/// Validation set of heat thresholds in degrees Celsius.
pub const HEAT_THRESHOLDS_C: [f64; 3] = [27.0, 30.0, 33.0];
pub const HEAT_DEFAULT_C: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationScores {
    pub rmse: f64,
    pub mae: f64,
    /// Pearson r for smoke; `None` for heat, whose contract does not use it.
    pub pearson_r: Option<f64>,
    pub threshold: f64,
    pub exceedance: ExceedanceScores,
}

/// Smoke: RMSE, MAE, Pearson r and exceedance at `threshold`. Heat: RMSE-C,
/// MAE-C and exceedance F1 (the unit must be Celsius).
pub fn station_scores(series: &StationSeries, threshold: f64) -> Result<StationScores> {
    let (obs, pred) = (series.observed(), series.predicted());
    let pearson = match series.unit() {
        StationUnit::Pm25 => Some(pearson_r(&pred, &obs)?),
        StationUnit::Celsius => None,
    };
    Ok(StationScores {
        rmse: rmse(&pred, &obs)?,
        mae: mae(&pred, &obs)?,
        pearson_r: pearson,
        threshold,
        exceedance: exceedance_f1(&pred, &obs, threshold)?,
    })
}

/// Picks the heat threshold from `candidates` with the best validation
/// exceedance F1 (ties to the smaller threshold).
pub fn select_heat_threshold(validation: &StationSeries, candidates: &[f64]) -> Result<f64> {
    if validation.unit() != StationUnit::Celsius {
        return Err(Error::InvalidParameter("heat thresholds need a Celsius series".into()));
    }
    let mut cands = candidates.to_vec();
    cands.sort_by(f64::total_cmp);
    let (obs, pred) = (validation.observed(), validation.predicted());
    let mut best: Option<(f64, f64)> = None;
    for t in cands {
        let f1 = exceedance_f1(&pred, &obs, t)?.f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((t, f1));
        }
    }
    best.map(|b| b.0).ok_or(Error::NoCandidates)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::tables::{EventRow, StationRow};

    #[test]
    fn relevance_is_one_for_equal_areas() {
        assert_eq!(analog_relevance(500.0, 500.0), 1.0);
        assert!((analog_relevance(100.0, 1000.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn retrieval_on_collinear_table_is_ideal() {
        let rows = (0..30)
            .map(|i| {
                let z = i as f64 / 29.0;
                EventRow {
                    event_id: i,
                    features: vec![z, 2.0 * z],
                    burned_area_acres: 10f64.powf(2.0 + 2.0 * z),
                    split: if i % 5 == 0 { Split::Test } else { Split::Train },
                }
            })
            .collect();
        let table = EventTable::new(rows).unwrap();
        let r = analog_retrieval(&table, Split::Test, 10).unwrap();
        assert!((r.ndcg - 1.0).abs() < 1e-12, "{}", r.ndcg);
        assert_eq!(r.n_queries, 6);
    }

    #[test]
    fn retrieval_without_queries_errors() {
        let rows = (0..3)
            .map(|i| EventRow { event_id: i, features: vec![i as f64], burned_area_acres: 1.0, split: Split::Train })
            .collect();
        let table = EventTable::new(rows).unwrap();
        assert!(analog_retrieval(&table, Split::Test, 10).is_err());
        assert!(analog_retrieval(&table, Split::Train, 0).is_err());
    }

    #[test]
    fn heat_threshold_selection_prefers_small_on_ties() {
        let rows = (0..10)
            .map(|i| StationRow {
                station_id: 0,
                time_index: i,
                observed: 20.0 + i as f64 * 2.0,
                predicted: 20.0 + i as f64 * 2.0,
            })
            .collect();
        let series = StationSeries::new(StationUnit::Celsius, rows).unwrap();
        assert_eq!(select_heat_threshold(&series, &HEAT_THRESHOLDS_C).unwrap(), 27.0);
        let s = station_scores(&series, HEAT_DEFAULT_C).unwrap();
        assert_eq!(s.pearson_r, None);
        assert_eq!(s.exceedance.f1, 1.0);
    }
}
