//! Prediction-quality metrics and their aggregation across replications.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::BuiltModel;

/// Metrics for one fitted model on one train/test split. Test-set fields
/// are absent (not zero) when the test set is empty.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Metrics {
    /// Log marginal likelihood of the training targets.
    pub train_loglik: f64,
    /// Sum of out-of-sample predictive log densities (noise included).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pred_loglik: Option<f64>,
    /// Mean absolute error of the posterior mean.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae: Option<f64>,
    /// Two standard deviations of |error| across test points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mae_point_spread: Option<f64>,
    /// Mean posterior std of the latent function over test points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_std: Option<f64>,
    /// Mean predictive std (noise included) over test points.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub avg_std_predictive: Option<f64>,
    /// Relative range (max - min)/mean of the latent posterior std.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rr_std: Option<f64>,
    /// Relative range of the predictive std.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rr_std_predictive: Option<f64>,
}

/// Mean absolute error; `None` on an empty set.
pub fn mae(predicted: &[f64], actual: &[f64]) -> Option<f64> {
    if predicted.is_empty() || predicted.len() != actual.len() {
        return None;
    }
    let sum: f64 = predicted
        .iter()
        .zip(actual)
        .map(|(p, a)| (p - a).abs())
        .sum();
    Some(sum / predicted.len() as f64)
}

/// Relative range (max - min)/mean; `None` on an empty set or zero mean.
pub fn relative_range(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &v in values {
        lo = lo.min(v);
        hi = hi.max(v);
        sum += v;
    }
    let mean = sum / values.len() as f64;
    if mean == 0.0 {
        return None;
    }
    Some((hi - lo) / mean)
}

fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Evaluate a fitted model against a held-out test set.
pub fn evaluate(model: &BuiltModel, test_xs: &[Vec<f64>], test_ys: &[f64]) -> Result<Metrics> {
    let train_loglik = model.train_loglik();
    if test_xs.is_empty() {
        return Ok(Metrics {
            train_loglik,
            pred_loglik: None,
            mae: None,
            mae_point_spread: None,
            avg_std: None,
            avg_std_predictive: None,
            rr_std: None,
            rr_std_predictive: None,
        });
    }
    let preds = model.predict(test_xs)?;
    let means: Vec<f64> = preds.iter().map(|p| p.mean).collect();
    let abs_err: Vec<f64> = means
        .iter()
        .zip(test_ys)
        .map(|(m, y)| (m - y).abs())
        .collect();
    let stds: Vec<f64> = preds.iter().map(|p| p.latent_var.sqrt()).collect();
    let stds_pred: Vec<f64> = preds.iter().map(|p| p.predictive_var().sqrt()).collect();
    let (_, err_std) = mean_and_std(&abs_err);
    Ok(Metrics {
        train_loglik,
        pred_loglik: Some(model.predictive_log_likelihood(test_xs, test_ys)?),
        mae: mae(&means, test_ys),
        mae_point_spread: Some(2.0 * err_std),
        avg_std: Some(stds.iter().sum::<f64>() / stds.len() as f64),
        avg_std_predictive: Some(stds_pred.iter().sum::<f64>() / stds_pred.len() as f64),
        rr_std: relative_range(&stds),
        rr_std_predictive: relative_range(&stds_pred),
    })
}

/// Mean and twice the sample std of a metric across replications,
/// computed over the replications where the metric is present.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub two_std: f64,
    pub count: usize,
}

pub fn aggregate<'a>(values: impl Iterator<Item = Option<&'a f64>>) -> Option<Aggregate> {
    let present: Vec<f64> = values.flatten().copied().collect();
    if present.is_empty() {
        return None;
    }
    let (mean, std) = mean_and_std(&present);
    Some(Aggregate {
        mean,
        two_std: 2.0 * std,
        count: present.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_matches_one_line_reimplementation() {
        let p = [1.0, -2.0, 3.5, 0.0, 10.0];
        let a = [0.5, -1.0, 3.5, -2.0, 12.5];
        let direct: f64 =
            p.iter().zip(&a).map(|(x, y): (&f64, &f64)| (x - y).abs()).sum::<f64>()
                / p.len() as f64;
        assert!((mae(&p, &a).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn relative_range_matches_one_line_reimplementation() {
        let v = [2.0, 3.0, 5.0, 4.0];
        let direct = (5.0 - 2.0) / (14.0 / 4.0);
        assert!((relative_range(&v).unwrap() - direct).abs() <= 1e-12);
    }

    #[test]
    fn empty_sets_yield_absent_metrics() {
        assert!(mae(&[], &[]).is_none());
        assert!(relative_range(&[]).is_none());
        assert!(aggregate([None, None].into_iter()).is_none());
    }

    #[test]
    fn aggregate_skips_missing_values() {
        let vals = [Some(1.0), None, Some(3.0)];
        let agg = aggregate(vals.iter().map(|v| v.as_ref())).unwrap();
        assert_eq!(agg.count, 2);
        assert!((agg.mean - 2.0).abs() <= 1e-12);
        let std = ((1.0f64 + 1.0) / 1.0).sqrt();
        assert!((agg.two_std - 2.0 * std).abs() <= 1e-12);
    }
}
