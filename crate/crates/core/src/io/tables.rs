//! CSV schemas for the tabular task forms.
//!
//! Events: `id,f0,...,f{d-1},area_acres,split`.
//! Stations: `station_id,t,observed,predicted`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::tables::{EventRow, EventTable, StationRow, StationSeries, StationUnit};

fn schema(path: &Path, msg: String) -> Error {
    Error::ShapeError(format!("{}: {msg}", path.display()))
}

fn parse<T: std::str::FromStr>(path: &Path, line: u64, field: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| schema(path, format!("line {line}: cannot parse {field} from {value:?}")))
}

pub fn write_events(table: &EventTable, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    let d = table.feature_dim();
    let mut header = vec!["id".to_string()];
    header.extend((0..d).map(|j| format!("f{j}")));
    header.extend(["area_acres".to_string(), "split".to_string()]);
    w.write_record(&header)?;
    for r in table.rows() {
        let mut rec = vec![r.event_id.to_string()];
        rec.extend(r.features.iter().map(|v| v.to_string()));
        rec.extend([r.burned_area_acres.to_string(), r.split.to_string()]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

pub fn read_events(path: impl AsRef<Path>) -> Result<EventTable> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let n = header.len();
    let d = n.saturating_sub(3);
    let ok = n >= 3
        && &header[0] == "id"
        && (0..d).all(|j| header[j + 1] == format!("f{j}"))
        && &header[n - 2] == "area_acres"
        && &header[n - 1] == "split";
    if !ok {
        return Err(schema(path, "expected header id,f0,...,area_acres,split".into()));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(EventRow {
            event_id: parse(path, line, "id", &rec[0])?,
            features: (0..d).map(|j| parse(path, line, "feature", &rec[j + 1])).collect::<Result<_>>()?,
            burned_area_acres: parse(path, line, "area_acres", &rec[n - 2])?,
            split: rec[n - 1].trim().parse()?,
        });
    }
    EventTable::new(rows)
}

const STATION_HEADER: [&str; 4] = ["station_id", "t", "observed", "predicted"];

pub fn write_stations(series: &StationSeries, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(STATION_HEADER)?;
    for r in series.rows() {
        w.write_record([
            r.station_id.to_string(),
            r.time_index.to_string(),
            r.observed.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}

/// The unit is not stored in the file; the caller's contract supplies it.
pub fn read_stations(path: impl AsRef<Path>, unit: StationUnit) -> Result<StationSeries> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().ne(STATION_HEADER) {
        return Err(schema(path, format!("expected header {}", STATION_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        rows.push(StationRow {
            station_id: parse(path, line, "station_id", &rec[0])?,
            time_index: parse(path, line, "t", &rec[1])?,
            observed: parse(path, line, "observed", &rec[2])?,
            predicted: parse(path, line, "predicted", &rec[3])?,
        });
    }
    StationSeries::new(unit, rows)
}
