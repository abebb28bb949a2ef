//! Plain (non-differentiated) numerical helpers: batch statistics and
//! classification losses used for reporting and normalization.

use ndarray::Array2;

use crate::error::NnError;

/// Arithmetic mean; 0 for an empty slice.
pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance (divide by `n`, not `n - 1`); 0 for an empty slice.
pub fn population_variance(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn population_std(xs: &[f64]) -> f64 {
    population_variance(xs).sqrt()
}

/// Standardize to zero mean, unit scale: `(x - mean) / sqrt(var + eps)` with
/// population variance. With `eps = 0` and constant input the result is NaN;
/// callers pass a positive `eps` to stay defined on degenerate batches.
pub fn zscore(xs: &[f64], eps: f64) -> Vec<f64> {
    let mu = mean(xs);
    let denom = (population_variance(xs) + eps).sqrt();
    xs.iter().map(|x| (x - mu) / denom).collect()
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let total: f64 = row.sum();
        row.mapv_inplace(|v| v / total);
    }
    out
}

/// `log(sum(exp(xs)))` with max-shifting.
pub fn logsumexp(xs: &[f64]) -> f64 {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max
}

/// Mean cross-entropy of integer labels under row logits:
/// `-(1/n) * sum_i log softmax(logits)[i, labels[i]]`.
pub fn cross_entropy_mean(logits: &Array2<f64>, labels: &[usize]) -> Result<f64, NnError> {
    if labels.len() != logits.nrows() {
        return Err(NnError::DimensionMismatch(format!(
            "{} labels for {} logit rows",
            labels.len(),
            logits.nrows()
        )));
    }
    let classes = logits.ncols();
    let mut total = 0.0;
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(NnError::LabelOutOfRange { label, classes });
        }
        let row: Vec<f64> = logits.row(i).to_vec();
        total += logsumexp(&row) - row[label];
    }
    Ok(total / labels.len() as f64)
}
