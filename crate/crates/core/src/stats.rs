//! Batch resampling error estimates.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Jackknife,
    Bootstrap,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub method: Method,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Leave-one-out error of the mean of per-batch estimates,
/// `sqrt((n-1)/n Σ (θ_(i) - θ̄)²)`.
pub fn jackknife(batches: &[f64]) -> Result<Estimate> {
    let n = batches.len();
    if n < 2 {
        return Err(Error::TooFewBatches(n));
    }
    let total: f64 = batches.iter().sum();
    let m = total / n as f64;
    let ss: f64 = batches
        .iter()
        .map(|x| {
            let loo = (total - x) / (n - 1) as f64;
            (loo - m).powi(2)
        })
        .sum();
    Ok(Estimate { mean: m, std_error: ((n - 1) as f64 / n as f64 * ss).sqrt(), method: Method::Jackknife })
}

/// Standard deviation of `n_resamples` resampled batch means.
pub fn bootstrap(batches: &[f64], n_resamples: usize, seed: u64) -> Result<Estimate> {
    let n = batches.len();
    if n < 2 {
        return Err(Error::TooFewBatches(n));
    }
    if n_resamples == 0 {
        return Err(Error::invalid("bootstrap needs at least one resample"));
    }
    if n_resamples == 1 {
        warn!("a single bootstrap resample gives a degenerate error of 0");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let means: Vec<f64> = (0..n_resamples)
        .map(|_| (0..n).map(|_| batches[rng.random_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    let mm = mean(&means);
    let var = means.iter().map(|x| (x - mm).powi(2)).sum::<f64>() / means.len() as f64;
    Ok(Estimate { mean: mean(batches), std_error: var.sqrt(), method: Method::Bootstrap })
}

/// Per-batch ratio estimates with empty batches removed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimates {
    pub values: Vec<f64>,
    /// Accepted counts of the kept batches.
    pub accepted: Vec<usize>,
    pub dropped: usize,
}

/// `sum / count` per batch; batches with no accepted shots are dropped.
pub fn ratio_estimator(sums: &[f64], counts: &[usize]) -> Result<RatioEstimates> {
    if sums.len() != counts.len() {
        return Err(Error::Dimension { expected: sums.len(), got: counts.len() });
    }
    let mut out = RatioEstimates { values: Vec::new(), accepted: Vec::new(), dropped: 0 };
    for (&s, &c) in sums.iter().zip(counts) {
        if c == 0 {
            out.dropped += 1;
        } else {
            out.values.push(s / c as f64);
            out.accepted.push(c);
        }
    }
    if out.values.is_empty() {
        return Err(Error::NoAcceptedSamples);
    }
    if out.dropped > 0 {
        warn!("dropped {} batches without accepted shots", out.dropped);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jackknife_examples() {
        let e = jackknife(&[3.0; 5]).unwrap();
        assert_eq!((e.mean, e.std_error), (3.0, 0.0));
        let e = jackknife(&[0.0, 2.0]).unwrap();
        assert_eq!(e.mean, 1.0);
        assert!((e.std_error - 1.0).abs() < 1e-15);
        assert_eq!(jackknife(&[1.0]).unwrap_err(), Error::TooFewBatches(1));
    }

    #[test]
    fn jackknife_matches_standard_error_of_mean() {
        let v = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let m = mean(&v);
        let s2 = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
        let e = jackknife(&v).unwrap();
        assert!((e.std_error - (s2 / v.len() as f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_examples() {
        assert_eq!(bootstrap(&[2.0; 4], 100, 1).unwrap().std_error, 0.0);
        assert_eq!(bootstrap(&[1.0, 2.0, 3.0], 1, 1).unwrap().std_error, 0.0);
        let a = bootstrap(&[1.0, 2.0, 3.0], 50, 9).unwrap();
        let b = bootstrap(&[1.0, 2.0, 3.0], 50, 9).unwrap();
        assert_eq!(a, b);
        assert!(bootstrap(&[1.0], 10, 1).is_err());
    }

    #[test]
    fn ratio_examples() {
        let r = ratio_estimator(&[3.0, 5.0], &[3, 5]).unwrap();
        assert_eq!(r.values, vec![1.0, 1.0]);
        let r = ratio_estimator(&[2.0, 0.0, 4.0], &[4, 0, 4]).unwrap();
        assert_eq!(r.values, vec![0.5, 1.0]);
        assert_eq!(r.dropped, 1);
        assert_eq!(ratio_estimator(&[0.0], &[0]).unwrap_err(), Error::NoAcceptedSamples);
    }
}
