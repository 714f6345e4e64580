//! Ranking, regression and retrieval metrics on the supporting task forms.
//!
//! Run with `cargo run --example supporting_metrics`.

use firecontract::metrics::supporting::{analog_retrieval, burned_area_scores, station_scores};
use firecontract::metrics::tables::Split;
use firecontract::metrics::{average_precision, ndcg_at_k, spearman_rho};
use firecontract::synth::{generate_event_table, generate_station_series, LinearRegressor, StationKind};
use firecontract::Result;

pub fn run() -> Result<()> {
    println!("AP of a top-ranked single positive: {}", average_precision(&[0.9, 0.2, 0.1], &[true, false, false])?);
    println!("nDCG@3 with the hit at rank 2: {:.4}", ndcg_at_k(&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], 3));
    println!("Spearman of (1,2,3,4) vs (2,1,4,3): {}", spearman_rho(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0])?);

    let events = generate_event_table(400, 5)?;
    let reg = LinearRegressor::fit(&events, Split::Train)?;
    let test: Vec<_> = events.in_split(Split::Test).collect();
    let pred: Vec<f64> = test.iter().map(|r| reg.predict_acres(&r.features)).collect();
    let truth: Vec<f64> = test.iter().map(|r| r.burned_area_acres).collect();
    let area = burned_area_scores(&pred, &truth)?;
    println!(
        "burned area: log-RMSE {:.4}, log-MAE {:.4}, Spearman {:.4}",
        area.log.log_rmse, area.log.log_mae, area.spearman_rho
    );
    let retrieval = analog_retrieval(&events, Split::Test, 10)?;
    println!("analog retrieval: nDCG@10 {:.4} over {} queries", retrieval.ndcg, retrieval.n_queries);

    for kind in [StationKind::Smoke, StationKind::Heat] {
        let series = generate_station_series(8, 240, kind, 3)?;
        let s = station_scores(&series, kind.threshold())?;
        println!("{kind:?}: RMSE {:.3}, MAE {:.3}, exceedance F1 {:.4}", s.rmse, s.mae, s.exceedance.f1);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
