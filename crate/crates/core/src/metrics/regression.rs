use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matching::{f1_from_counts, MatchCounts};

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch { left: a.len(), right: b.len() });
    }
    if a.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn rmse(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_lengths(pred, obs)?;
    let sse: f64 = pred.iter().zip(obs).map(|(p, o)| (p - o) * (p - o)).sum();
    Ok((sse / pred.len() as f64).sqrt())
}

pub fn mae(pred: &[f64], obs: &[f64]) -> Result<f64> {
    check_lengths(pred, obs)?;
    Ok(pred.iter().zip(obs).map(|(p, o)| (p - o).abs()).sum::<f64>() / pred.len() as f64)
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogErrors {
    pub log_rmse: f64,
    pub log_mae: f64,
    pub log_median_ae: f64,
}

/// Errors on base-10 logarithms of burned area (acres).
pub fn log_error_metrics(pred_acres: &[f64], true_acres: &[f64]) -> Result<LogErrors> {
    check_lengths(pred_acres, true_acres)?;
    if let Some(&bad) = pred_acres.iter().chain(true_acres).find(|a| !(a.is_finite() && **a > 0.0)) {
        return Err(Error::InvalidArea(bad));
    }
    let mut abs_err: Vec<f64> = pred_acres.iter().zip(true_acres).map(|(p, t)| (p.log10() - t.log10()).abs()).collect();
    let n = abs_err.len() as f64;
    let log_mae = abs_err.iter().sum::<f64>() / n;
    let log_rmse = (abs_err.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    let log_median_ae = median(&mut abs_err);
    Ok(LogErrors { log_rmse, log_mae, log_median_ae })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExceedanceScores {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub counts: MatchCounts,
}

/// Pointwise F1 of the events `value >= threshold` in two aligned series.
pub fn exceedance_f1(pred: &[f64], obs: &[f64], threshold: f64) -> Result<ExceedanceScores> {
    if pred.len() != obs.len() {
        return Err(Error::LengthMismatch { left: pred.len(), right: obs.len() });
    }
    let mut c = MatchCounts::default();
    for (&p, &o) in pred.iter().zip(obs) {
        let (pe, oe) = (p >= threshold, o >= threshold);
        c.predicted_total += pe as u64;
        c.observed_total += oe as u64;
        match (pe, oe) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(ExceedanceScores { f1: f1_from_counts(&c), precision: c.precision(), recall: c.recall(), counts: c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    #[test]
    fn log_errors_examples() {
        let a = [120.0, 5000.0, 33.0];
        assert_eq!(log_error_metrics(&a, &a).unwrap(), LogErrors { log_rmse: 0.0, log_mae: 0.0, log_median_ae: 0.0 });
        let ten_x: Vec<f64> = a.iter().map(|v| v * 10.0).collect();
        let e = log_error_metrics(&ten_x, &a).unwrap();
        for v in [e.log_rmse, e.log_mae, e.log_median_ae] {
            assert!((v - 1.0).abs() < 1e-12);
        }
        let e = log_error_metrics(&[1000.0, 50.0], &[100.0, 50.0]).unwrap();
        assert!((e.log_mae - 0.5).abs() < 1e-12);
        assert!((e.log_median_ae - 0.5).abs() < 1e-12);
        assert!((e.log_rmse - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn log_errors_reject_non_positive_area() {
        assert!(matches!(log_error_metrics(&[0.0], &[1.0]), Err(Error::InvalidArea(_))));
        assert!(matches!(log_error_metrics(&[1.0], &[-3.0]), Err(Error::InvalidArea(_))));
        assert!(matches!(log_error_metrics(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn log_errors_scale_equivariant() {
        let mut rng = SeededRng::new(3);
        let p: Vec<f64> = (0..50).map(|_| 10f64.powf(rng.uniform_in(1.0, 5.0))).collect();
        let t: Vec<f64> = (0..50).map(|_| 10f64.powf(rng.uniform_in(1.0, 5.0))).collect();
        let base = log_error_metrics(&p, &t).unwrap();
        let ps: Vec<f64> = p.iter().map(|v| v * 37.5).collect();
        let ts: Vec<f64> = t.iter().map(|v| v * 37.5).collect();
        let scaled = log_error_metrics(&ps, &ts).unwrap();
        assert!((base.log_rmse - scaled.log_rmse).abs() < 1e-12);
        assert!((base.log_mae - scaled.log_mae).abs() < 1e-12);
        assert!((base.log_median_ae - scaled.log_median_ae).abs() < 1e-12);
    }

    #[test]
    fn exceedance_examples() {
        let obs = [10.0, 40.0, 50.0, 20.0];
        let s = exceedance_f1(&obs, &obs, 35.0).unwrap();
        assert_eq!((s.f1, s.precision, s.recall), (1.0, 1.0, 1.0));
        let calm = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(exceedance_f1(&calm, &calm, 35.0).unwrap().f1, 0.0);
        let low = [0.0; 4];
        let s = exceedance_f1(&low, &obs, 35.0).unwrap();
        assert_eq!((s.f1, s.recall), (0.0, 0.0));
    }

    #[test]
    fn exceedance_matches_contingency_oracle() {
        let mut rng = SeededRng::new(8);
        let obs: Vec<f64> = (0..500).map(|_| rng.uniform_in(0.0, 60.0)).collect();
        for shift in [1usize, 3, 17] {
            let pred: Vec<f64> = (0..obs.len()).map(|i| obs[(i + shift) % obs.len()]).collect();
            let s = exceedance_f1(&pred, &obs, 35.0).unwrap();
            let (mut tp, mut fp, mut fn_) = (0.0, 0.0, 0.0);
            for i in 0..obs.len() {
                match (pred[i] >= 35.0, obs[i] >= 35.0) {
                    (true, true) => tp += 1.0,
                    (true, false) => fp += 1.0,
                    (false, true) => fn_ += 1.0,
                    _ => {}
                }
            }
            assert!((s.f1 - 2.0 * tp / (2.0 * tp + fp + fn_)).abs() < 1e-15);
            assert!((s.precision - tp / (tp + fp)).abs() < 1e-15);
            assert!((s.recall - tp / (tp + fn_)).abs() < 1e-15);
        }
    }

    #[test]
    fn rmse_mae_basic() {
        assert_eq!(rmse(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), 2f64.sqrt());
        assert_eq!(mae(&[1.0, 3.0], &[1.0, 1.0]).unwrap(), 1.0);
        assert!(rmse(&[1.0], &[1.0, 2.0]).is_err());
    }
}
