use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::tables::{EventRow, EventTable, Split};
use crate::rng::SeededRng;

/// Planted relation: `log10(acres) = AREA_INTERCEPT + AREA_SLOPE * z`.
pub const AREA_INTERCEPT: f64 = 2.5;
pub const AREA_SLOPE: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventTableConfig {
    pub n_events: usize,
    pub n_features: usize,
    /// Standard deviation added to each feature.
    pub feature_noise_sd: f64,
    /// Standard deviation added to log10 area.
    pub area_noise_sd: f64,
}

impl EventTableConfig {
    pub fn new(n_events: usize) -> Self {
        Self { n_events, n_features: 4, feature_noise_sd: 0.1, area_noise_sd: 0.25 }
    }

    pub fn noise_free(mut self) -> Self {
        self.feature_noise_sd = 0.0;
        self.area_noise_sd = 0.0;
        self
    }
}

pub fn generate_event_table(n_events: usize, seed: u64) -> Result<EventTable> {
    generate_event_table_with(&EventTableConfig::new(n_events), seed)
}

/// Each event has a latent severity `z ~ N(0, 1)`; features are `z` times a
/// fixed random direction plus noise, and log10 area is linear in `z` plus
/// noise. Splits are 60/20/20 over a seeded permutation.
pub fn generate_event_table_with(cfg: &EventTableConfig, seed: u64) -> Result<EventTable> {
    if cfg.n_events < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 events, got {}", cfg.n_events)));
    }
    if cfg.n_features == 0 {
        return Err(Error::InvalidParameter("need at least one feature".into()));
    }
    if !(cfg.feature_noise_sd >= 0.0 && cfg.area_noise_sd >= 0.0) {
        return Err(Error::InvalidParameter("noise levels must be non-negative".into()));
    }
    let root = SeededRng::new(seed);
    let mut dir_rng = root.split(1);
    let mut rng = root.split(2);
    let mut perm_rng = root.split(3);

    let mut direction: Vec<f64> = (0..cfg.n_features).map(|_| dir_rng.normal()).collect();
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        direction.iter_mut().for_each(|v| *v /= norm);
    }

    let mut order: Vec<usize> = (0..cfg.n_events).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, perm_rng.below(i as u64 + 1) as usize);
    }
    let n_train = (cfg.n_events as f64 * 0.6).round() as usize;
    let n_val = (cfg.n_events as f64 * 0.2).round() as usize;
    let mut split = vec![Split::Test; cfg.n_events];
    for (rank, &i) in order.iter().enumerate() {
        split[i] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Val
        } else {
            Split::Test
        };
    }

    let rows = (0..cfg.n_events)
        .map(|i| {
            let z = rng.normal();
            let features = direction.iter().map(|u| u * z + cfg.feature_noise_sd * rng.normal()).collect();
            let log_area = AREA_INTERCEPT + AREA_SLOPE * z + cfg.area_noise_sd * rng.normal();
            EventRow { event_id: i as u64 + 1, features, burned_area_acres: 10f64.powf(log_area), split: split[i] }
        })
        .collect();
    EventTable::new(rows)
}

/// Least-squares map from event features to log10 burned area. Columns that
/// are linearly dependent on earlier ones are dropped (coefficient 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRegressor {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl LinearRegressor {
    /// Fits on the rows of `split`.
    pub fn fit(table: &EventTable, split: Split) -> Result<Self> {
        let rows: Vec<_> = table.in_split(split).collect();
        if rows.len() < 2 {
            return Err(Error::EmptyInput);
        }
        let n = rows.len() as f64;
        let d = table.feature_dim();
        let y: Vec<f64> = rows.iter().map(|r| r.burned_area_acres.log10()).collect();
        let y_mean = y.iter().sum::<f64>() / n;
        let x_mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r.features[j]).sum::<f64>() / n).collect();
        let cols: Vec<Vec<f64>> = (0..d).map(|j| rows.iter().map(|r| r.features[j] - x_mean[j]).collect()).collect();
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

        // modified Gram-Schmidt QR over the kept columns
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut q: Vec<Vec<f64>> = Vec::new();
        let mut kept: Vec<usize> = Vec::new();
        let mut r_mat: Vec<Vec<f64>> = Vec::new(); // r_mat[k][i] = q_i . x_{kept[k]}
        for (j, col) in cols.iter().enumerate() {
            let scale = dot(col, col).sqrt();
            let mut v = col.clone();
            let mut coeffs = Vec::with_capacity(q.len());
            for qi in &q {
                let c = dot(qi, &v);
                v.iter_mut().zip(qi).for_each(|(a, b)| *a -= c * b);
                coeffs.push(c);
            }
            let norm = dot(&v, &v).sqrt();
            if scale == 0.0 || norm <= 1e-9 * scale {
                continue;
            }
            v.iter_mut().for_each(|a| *a /= norm);
            coeffs.push(norm);
            q.push(v);
            kept.push(j);
            r_mat.push(coeffs);
        }
        let qty: Vec<f64> = q.iter().map(|qi| dot(qi, &yc)).collect();
        let m = kept.len();
        let mut beta_kept = vec![0.0; m];
        for k in (0..m).rev() {
            let mut s = qty[k];
            for l in k + 1..m {
                s -= r_mat[l][k] * beta_kept[l];
            }
            beta_kept[k] = s / r_mat[k][k];
        }
        let mut coefficients = vec![0.0; d];
        for (k, &j) in kept.iter().enumerate() {
            coefficients[j] = beta_kept[k];
        }
        let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(b, m)| b * m).sum::<f64>();
        Ok(Self { coefficients, intercept })
    }

    pub fn predict_log10(&self, features: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(features).map(|(b, x)| b * x).sum::<f64>()
    }

    pub fn predict_acres(&self, features: &[f64]) -> f64 {
        10f64.powf(self.predict_log10(features))
    }
}
