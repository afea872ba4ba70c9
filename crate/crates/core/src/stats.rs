//! Sample statistics: block binning and estimator summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorResult {
    pub name: String,
    pub mean: f64,
    pub stderr: f64,
    pub n_samples: usize,
    pub acceptance_rate: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (`n - 1` denominator); zero for fewer than two values.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Means of `n_bins` consecutive equal blocks.
pub fn bin_means(samples: &[f64], n_bins: usize) -> Result<Vec<f64>> {
    if n_bins == 0 || samples.len() % n_bins != 0 || samples.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} samples cannot be split into {n_bins} equal bins",
            samples.len()
        )));
    }
    let size = samples.len() / n_bins;
    Ok(samples.chunks(size).map(mean).collect())
}

/// `(mean, std(bins) / sqrt(n_bins))` from bin means.
pub fn binned_estimate(bins: &[f64]) -> (f64, f64) {
    (mean(bins), std_dev(bins) / (bins.len() as f64).sqrt())
}
