use crate::error::{Error, Result};

/// Step-interpolated average precision, `sum_n (R_n - R_{n-1}) * P_n`.
///
/// Operating points are the distinct score values in descending order, so
/// tied scores form one step. The input order of tied items never affects
/// the result.
pub fn average_precision(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch { left: scores.len(), right: labels.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidParameter("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&y| y).count();
    if n_pos == 0 {
        return Err(Error::NoPositives);
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut prev_recall = 0.0;
    let mut ap = 0.0;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        let recall = tp as f64 / n_pos as f64;
        let precision = tp as f64 / (tp + fp) as f64;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    Ok(ap)
}

/// Area under the precision-recall curve, defined here as step-interpolated
/// average precision.
pub fn pr_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    average_precision(scores, labels)
}

/// `DCG@k / IDCG@k` with `DCG = sum rel_j / log2(j + 1)`. Returns 0 when the
/// ideal list has no gain.
pub fn ndcg_at_k(retrieved_relevances: &[f64], ideal_relevances: &[f64], k: usize) -> f64 {
    let idcg = dcg(ideal_relevances, k);
    if idcg <= 0.0 {
        return 0.0;
    }
    dcg(retrieved_relevances, k) / idcg
}

fn dcg(rels: &[f64], k: usize) -> f64 {
    rels.iter().take(k).enumerate().map(|(j, &r)| r / ((j + 2) as f64).log2()).sum()
}
