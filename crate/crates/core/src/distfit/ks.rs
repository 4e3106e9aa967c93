use super::family::{Family, Model};
use super::DistError;
use crate::scalar::Scalar;

/// Two-sided Kolmogorov–Smirnov distance between the sample's empirical CDF and `cdf`.
/// `sorted` must be ascending.
pub fn ks_sorted<S: Scalar, F: Fn(S) -> S>(sorted: &[S], cdf: F) -> S {
    let n = S::from_count(sorted.len());
    let mut d = S::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let above = S::from_count(i + 1) / n - f;
        let below = f - S::from_count(i) / n;
        d = d.max(above).max(below);
    }
    d.min(S::one())
}

pub fn sort_samples<S: Scalar>(samples: &[S]) -> Vec<S> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// KS statistic of `samples` against `family` with `params`.
pub fn ks_statistic<S: Scalar>(samples: &[S], family: Family, params: &[S]) -> Result<S, DistError> {
    if samples.is_empty() {
        return Err(DistError::TooFewSamples { got: 0, need: 1 });
    }
    let model = Model::new(family, params)?;
    let sorted = sort_samples(samples);
    Ok(ks_sorted(&sorted, |x| model.cdf(x)))
}
