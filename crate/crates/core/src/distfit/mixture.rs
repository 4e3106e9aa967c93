use super::family::Model;
use super::fit::DistributionFit;
use super::quadrature::integrate_range;
use super::DistError;
use crate::scalar::Scalar;

/// Weighted combination of per-class fits describing the pooled runtime distribution.
#[derive(Debug, Clone)]
pub struct MixtureModel<S> {
    components: Vec<(S, DistributionFit<S>)>,
    models: Vec<Model<S>>,
}

const WEIGHT_SUM_TOLERANCE: f64 = 1e-6;

impl<S: Scalar> MixtureModel<S> {
    pub fn components(&self) -> &[(S, DistributionFit<S>)] {
        &self.components
    }

    pub fn pdf(&self, x: S) -> S {
        self.components
            .iter()
            .zip(&self.models)
            .map(|((w, _), m)| *w * m.pdf(x))
            .sum()
    }

    pub fn cdf(&self, x: S) -> S {
        self.components
            .iter()
            .zip(&self.models)
            .map(|((w, _), m)| *w * m.cdf(x))
            .sum()
    }

    pub fn mean_numeric(&self, tol: S) -> S {
        let (lo, hi) = self.support();
        integrate_range(|x| x * self.pdf(x), lo, hi, tol)
    }

    /// Union of component supports.
    pub fn support(&self) -> (S, S) {
        self.models
            .iter()
            .fold((S::infinity(), S::neg_infinity()), |(lo, hi), m| {
                let (a, b) = m.support();
                (lo.min(a), hi.max(b))
            })
    }

    /// Numerical integral of the mixture density, summed per component support.
    pub fn total_mass(&self, tol: S) -> S {
        self.models
            .iter()
            .zip(&self.components)
            .map(|(m, (w, _))| {
                let (lo, hi) = m.support();
                *w * integrate_range(|x| m.pdf(x), lo, hi, tol)
            })
            .sum()
    }
}

/// Builds the class-weighted mixture; `class_weights[i]` weights `per_class_fits[i]`.
pub fn overall_mixture<S: Scalar>(
    per_class_fits: &[DistributionFit<S>],
    class_weights: &[S],
) -> Result<MixtureModel<S>, DistError> {
    if per_class_fits.is_empty() || per_class_fits.len() != class_weights.len() {
        return Err(DistError::WeightMismatch(format!(
            "{} fits but {} weights",
            per_class_fits.len(),
            class_weights.len()
        )));
    }
    if class_weights.iter().any(|w| !w.is_finite() || *w < S::zero()) {
        return Err(DistError::WeightMismatch(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: S = class_weights.iter().copied().sum();
    if (total - S::one()).abs() > S::lit(WEIGHT_SUM_TOLERANCE) {
        return Err(DistError::WeightMismatch(format!("weights sum to {total}, not 1")));
    }
    let models = per_class_fits
        .iter()
        .map(|f| Model::new(f.family, &f.params))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MixtureModel {
        components: class_weights
            .iter()
            .copied()
            .zip(per_class_fits.iter().cloned())
            .collect(),
        models,
    })
}

#[cfg(test)]
mod tests {
    use super::super::family::Family;
    use super::*;

    fn fit(family: Family, params: Vec<f64>) -> DistributionFit<f64> {
        DistributionFit {
            family,
            params,
            log_likelihood: 0.0,
            ks_statistic: 0.0,
            sample_count: 100,
            initial_log_likelihood: 0.0,
        }
    }

    #[test]
    fn single_component_is_identity() {
        let f = fit(Family::Gamma, vec![2.0, 0.0, 3.0]);
        let mix = overall_mixture(std::slice::from_ref(&f), &[1.0]).unwrap();
        let m = f.model();
        for &x in &[0.5, 2.0, 9.0] {
            assert_eq!(mix.pdf(x), m.pdf(x));
            assert_eq!(mix.cdf(x), m.cdf(x));
        }
    }

    #[test]
    fn symmetric_pair_has_midpoint_mean() {
        let a = fit(Family::Normal, vec![-2.0, 1.0]);
        let b = fit(Family::Normal, vec![6.0, 1.0]);
        let mix = overall_mixture(&[a, b], &[0.5, 0.5]).unwrap();
        assert!((mix.mean_numeric(1e-10) - 2.0).abs() < 1e-6);
        assert!((mix.total_mass(1e-8) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn weight_problems_are_reported() {
        let a = fit(Family::Normal, vec![0.0, 1.0]);
        assert!(overall_mixture(std::slice::from_ref(&a), &[0.5, 0.5]).is_err());
        assert!(overall_mixture(std::slice::from_ref(&a), &[0.7]).is_err());
        assert!(overall_mixture(&[a.clone(), a], &[1.5, -0.5]).is_err());
    }
}
