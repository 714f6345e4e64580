//! Event-scale and station-scale inputs for the supporting task forms.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidParameter(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRow {
    pub event_id: u64,
    pub features: Vec<f64>,
    pub burned_area_acres: f64,
    pub split: Split,
}

/// Incident-level table: unique ids, positive areas, one feature width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventTable {
    rows: Vec<EventRow>,
}

impl EventTable {
    pub fn new(rows: Vec<EventRow>) -> Result<Self> {
        let mut ids = HashSet::new();
        let width = rows.first().map(|r| r.features.len());
        for r in &rows {
            if !ids.insert(r.event_id) {
                return Err(Error::InvalidParameter(format!("duplicate event id {}", r.event_id)));
            }
            if !(r.burned_area_acres.is_finite() && r.burned_area_acres > 0.0) {
                return Err(Error::InvalidArea(r.burned_area_acres));
            }
            if Some(r.features.len()) != width {
                return Err(Error::ShapeError(format!(
                    "event {} has {} features, expected {}",
                    r.event_id,
                    r.features.len(),
                    width.unwrap_or(0)
                )));
            }
            if r.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("event {} has non-finite features", r.event_id)));
            }
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[EventRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn feature_dim(&self) -> usize {
        self.rows.first().map_or(0, |r| r.features.len())
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &EventRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationUnit {
    /// PM2.5 concentration, micrograms per cubic metre.
    Pm25,
    /// Air temperature, degrees Celsius.
    Celsius,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationRow {
    pub station_id: u32,
    pub time_index: u32,
    pub observed: f64,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationSeries {
    unit: StationUnit,
    rows: Vec<StationRow>,
}

impl StationSeries {
    pub fn new(unit: StationUnit, rows: Vec<StationRow>) -> Result<Self> {
        if let Some(r) = rows.iter().find(|r| !(r.observed.is_finite() && r.predicted.is_finite())) {
            return Err(Error::InvalidParameter(format!(
                "station {} time {} has a non-finite value",
                r.station_id, r.time_index
            )));
        }
        Ok(Self { unit, rows })
    }

    pub fn unit(&self) -> StationUnit {
        self.unit
    }

    pub fn rows(&self) -> &[StationRow] {
        &self.rows
    }

    pub fn observed(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.observed).collect()
    }

    pub fn predicted(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.predicted).collect()
    }

    /// Rows whose time index lies in `range`.
    pub fn window(&self, range: std::ops::Range<u32>) -> Self {
        Self { unit: self.unit, rows: self.rows.iter().filter(|r| range.contains(&r.time_index)).cloned().collect() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(id: u64, area: f64) -> EventRow {
        EventRow { event_id: id, features: vec![1.0, 2.0], burned_area_acres: area, split: Split::Train }
    }

    #[test]
    fn event_table_invariants() {
        assert!(EventTable::new(vec![row(1, 10.0), row(2, 5.0)]).is_ok());
        assert!(EventTable::new(vec![row(1, 10.0), row(1, 5.0)]).is_err());
        assert!(matches!(EventTable::new(vec![row(1, 0.0)]), Err(Error::InvalidArea(_))));
        let mut bad = row(3, 1.0);
        bad.features.push(0.0);
        assert!(EventTable::new(vec![row(1, 1.0), bad]).is_err());
    }

    #[test]
    fn station_rows_must_be_finite() {
        let ok = StationRow { station_id: 1, time_index: 0, observed: 1.0, predicted: 2.0 };
        let bad = StationRow { predicted: f64::NAN, ..ok.clone() };
        assert!(StationSeries::new(StationUnit::Pm25, vec![ok.clone()]).is_ok());
        assert!(StationSeries::new(StationUnit::Pm25, vec![ok, bad]).is_err());
    }

    #[test]
    fn split_parsing() {
        assert_eq!("validation".parse::<Split>().unwrap(), Split::Val);
        assert!("dev".parse::<Split>().is_err());
    }
}
