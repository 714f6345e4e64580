//! FGR1 grid files and CSV tables: write, read back, compare.
//!
//! Run with `cargo run --example file_formats`.

use firecontract::io::{
    read_events, read_features, read_labels, read_scores, read_stations, write_events, write_features, write_labels,
    write_scores, write_stations, HEADER_LEN,
};
use firecontract::synth::{
    generate_event_table, generate_occupancy_scene, generate_station_series, SceneConfig, StationKind,
};
use firecontract::Result;

pub fn run() -> Result<()> {
    let dir = std::env::temp_dir().join(format!("firecontract-formats-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| firecontract::Error::InvalidParameter(e.to_string()))?;

    let scene = generate_occupancy_scene(&SceneConfig::new(2).noisy(0.05, 0.01))?;
    write_scores(scene.record.scores(), dir.join("scores.fgr"))?;
    write_labels(scene.record.labels(), dir.join("labels.fgr"))?;
    write_features(&scene.features, dir.join("features.fgr"))?;
    assert_eq!(&read_scores(dir.join("scores.fgr"))?, scene.record.scores());
    assert_eq!(&read_labels(dir.join("labels.fgr"))?, scene.record.labels());
    assert_eq!(read_features(dir.join("features.fgr"))?, scene.features);
    for name in ["scores.fgr", "labels.fgr", "features.fgr"] {
        let len = std::fs::metadata(dir.join(name)).map(|m| m.len()).unwrap_or(0);
        println!("{name}: {} header + {} payload bytes", HEADER_LEN, len - HEADER_LEN as u64);
    }

    let events = generate_event_table(50, 1)?;
    write_events(&events, dir.join("events.csv"))?;
    assert_eq!(read_events(dir.join("events.csv"))?, events);
    let stations = generate_station_series(2, 48, StationKind::Smoke, 1)?;
    write_stations(&stations, dir.join("stations.csv"))?;
    assert_eq!(read_stations(dir.join("stations.csv"), stations.unit())?, stations);
    println!("{} events and {} station rows round-tripped", events.len(), stations.rows().len());

    let _ = std::fs::remove_dir_all(&dir);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<()> {
    run()
}
