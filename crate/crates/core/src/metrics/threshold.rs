use crate::error::{Error, Result};
use crate::grid::{observed_set, threshold_scores, OutputRecord, ScopeMask};
use crate::matching::{f1_from_counts, Matcher, MatchingRule};

/// Quantile-spaced thresholds drawn from the default candidate grid.
pub const DEFAULT_CANDIDATES: usize = 512;

/// `DEFAULT_CANDIDATES` quantiles of the in-scope scores plus their minimum
/// and maximum, sorted ascending without duplicates.
pub fn default_candidates(record: &OutputRecord, scope: &ScopeMask) -> Result<Vec<f64>> {
    record.spec().ensure_same(scope.spec(), "record vs scope")?;
    let slice = record.spec().slice_len();
    let bits = scope.spatial_bits();
    let mut scores: Vec<f32> =
        record.scores().values().iter().enumerate().filter(|(i, _)| bits[i % slice]).map(|(_, &s)| s).collect();
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    scores.sort_by(f32::total_cmp);
    let n = scores.len();
    let mut out: Vec<f64> = (0..DEFAULT_CANDIDATES)
        .map(|q| {
            let pos = q as f64 / (DEFAULT_CANDIDATES - 1) as f64 * (n - 1) as f64;
            scores[pos.round() as usize] as f64
        })
        .collect();
    out.push(scores[0] as f64);
    out.push(scores[n - 1] as f64);
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// Picks the candidate threshold with the highest decision F1 under `rule`
/// on the given (validation) record. Ties go to the smallest threshold.
pub fn select_threshold(
    record: &OutputRecord,
    val_scope: &ScopeMask,
    rule: &MatchingRule,
    candidates: Option<&[f64]>,
) -> Result<f64> {
    record.spec().ensure_same(val_scope.spec(), "record vs scope")?;
    if val_scope.cell_count() == 0 {
        return Err(Error::EmptyInput);
    }
    let mut cands: Vec<f64> = match candidates {
        Some(c) => c.to_vec(),
        None => default_candidates(record, val_scope)?,
    };
    if cands.is_empty() {
        return Err(Error::NoCandidates);
    }
    if let Some(bad) = cands.iter().find(|c| !c.is_finite()) {
        return Err(Error::InvalidParameter(format!("candidate threshold {bad}")));
    }
    cands.sort_by(f64::total_cmp);
    cands.dedup();

    let obs = observed_set(record.labels(), val_scope)?;
    let matcher = Matcher::new(&obs, rule);
    let mut best = (cands[0], f64::NEG_INFINITY);
    for &tau in &cands {
        let pred = threshold_scores(record, tau, val_scope)?;
        let f1 = f1_from_counts(&matcher.counts(&pred)?);
        // strict improvement only: ascending order keeps the smallest tie
        if f1 > best.1 {
            best = (tau, f1);
        }
    }
    Ok(best.0)
}
