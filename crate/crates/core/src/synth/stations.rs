use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::supporting::{HEAT_DEFAULT_C, SMOKE_EXCEEDANCE};
use crate::metrics::tables::{StationRow, StationSeries, StationUnit};
use crate::rng::SeededRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StationKind {
    Smoke,
    Heat,
}

impl StationKind {
    pub fn unit(self) -> StationUnit {
        match self {
            StationKind::Smoke => StationUnit::Pm25,
            StationKind::Heat => StationUnit::Celsius,
        }
    }

    /// Default exceedance threshold of the kind's contract.
    pub fn threshold(self) -> f64 {
        match self {
            StationKind::Smoke => SMOKE_EXCEEDANCE,
            StationKind::Heat => HEAT_DEFAULT_C,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub n_stations: u32,
    pub n_times: u32,
    pub kind: StationKind,
    /// Added to every prediction.
    pub bias: f64,
    /// Standard deviation of the prediction error.
    pub noise_sd: f64,
    /// Per-step probability of a smoke plume or heat-wave spike.
    pub spike_rate: f64,
}

impl StationConfig {
    pub fn new(n_stations: u32, n_times: u32, kind: StationKind) -> Self {
        Self {
            n_stations,
            n_times,
            kind,
            bias: 0.0,
            noise_sd: match kind {
                StationKind::Smoke => 6.0,
                StationKind::Heat => 1.5,
            },
            spike_rate: 0.06,
        }
    }

    pub fn perfect(mut self) -> Self {
        self.bias = 0.0;
        self.noise_sd = 0.0;
        self
    }
}

pub fn generate_station_series(n_stations: u32, n_times: u32, kind: StationKind, seed: u64) -> Result<StationSeries> {
    generate_station_series_with(&StationConfig::new(n_stations, n_times, kind), seed)
}

/// Observed series are a seasonal cycle plus per-station offset plus
/// occasional spikes; at least one observation per series crosses the
/// kind's threshold. Predictions are observation + bias + noise.
pub fn generate_station_series_with(cfg: &StationConfig, seed: u64) -> Result<StationSeries> {
    if cfg.n_stations == 0 || cfg.n_times == 0 {
        return Err(Error::InvalidParameter("need at least one station and one step".into()));
    }
    if !(cfg.noise_sd >= 0.0 && cfg.bias.is_finite() && (0.0..=1.0).contains(&cfg.spike_rate)) {
        return Err(Error::InvalidParameter("invalid station noise, bias or spike rate".into()));
    }
    let root = SeededRng::new(seed);
    let mut obs_rng = root.split(1);
    let mut pred_rng = root.split(2);
    let period = 24.0;
    let mut rows = Vec::with_capacity((cfg.n_stations * cfg.n_times) as usize);
    let mut crossed = false;
    for s in 0..cfg.n_stations {
        let offset = obs_rng.normal();
        for t in 0..cfg.n_times {
            let season = (std::f64::consts::TAU * t as f64 / period).sin();
            let spike = obs_rng.bernoulli(cfg.spike_rate);
            let observed = match cfg.kind {
                StationKind::Smoke => {
                    let base = (8.0 + 4.0 * season + 2.0 * offset + 2.0 * obs_rng.normal()).max(0.5);
                    if spike {
                        base + obs_rng.uniform_in(30.0, 120.0)
                    } else {
                        base
                    }
                }
                StationKind::Heat => {
                    let base = 24.0 + 4.0 * season + offset + obs_rng.normal();
                    if spike {
                        base + obs_rng.uniform_in(6.0, 12.0)
                    } else {
                        base
                    }
                }
            };
            crossed |= observed >= cfg.kind.threshold();
            rows.push(StationRow { station_id: s, time_index: t, observed, predicted: 0.0 });
        }
    }
    if !crossed {
        let mid = (cfg.n_times / 2) as usize;
        rows[mid].observed = cfg.kind.threshold() + 10.0;
    }
    for row in &mut rows {
        row.predicted = row.observed + cfg.bias + cfg.noise_sd * pred_rng.normal();
    }
    StationSeries::new(cfg.kind.unit(), rows)
}
