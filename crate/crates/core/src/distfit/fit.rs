//! Maximum-likelihood fitting of the runtime families.
//!
//! Every family with free shape parameters is optimized with Nelder–Mead over an
//! unconstrained vector: positive quantities on a log scale, the Johnson-SB support
//! endpoints through a logistic band anchored just outside the sample range. Each
//! fit runs from three moment-based starting points and finishes with a restart
//! from the best vertex. Normal and Uniform have closed-form estimators.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::family::{Family, Model};
use super::ks::{ks_sorted, sort_samples};
use super::optimize::{nelder_mead, NelderMeadConfig};
use super::DistError;
use crate::scalar::Scalar;

pub const MIN_FIT_SAMPLES: usize = 30;

/// Fractional gap (of the sample range) between the sample extremes and the
/// initial Johnson-SB support endpoints.
const SB_ANCHOR_GAP: f64 = 0.05;
/// Johnson-SB endpoint gaps are confined to `[SB_MIN_GAP, SB_MAX_GAP] * range`.
const SB_MIN_GAP: f64 = 1e-4;
const SB_MAX_GAP: f64 = 1.0;
/// Floor on location gaps for the families with a lower endpoint.
const LOC_MIN_GAP: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct FitConfig<S> {
    pub optimizer: NelderMeadConfig<S>,
    /// Seed for the jitter applied to the secondary starting points.
    pub seed: u64,
}

impl<S: Scalar> Default for FitConfig<S> {
    fn default() -> Self {
        Self {
            optimizer: NelderMeadConfig::default(),
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistributionFit<S> {
    pub family: Family,
    pub params: Vec<S>,
    pub log_likelihood: S,
    pub ks_statistic: S,
    pub sample_count: usize,
    /// Log-likelihood at the best starting point, before optimization.
    pub initial_log_likelihood: S,
}

impl<S: Scalar> DistributionFit<S> {
    pub fn model(&self) -> Model<S> {
        Model::new(self.family, &self.params).expect("fitted parameters are valid")
    }
}

/// Summary of the sample the parametrizations are anchored to.
#[derive(Debug, Clone, Copy)]
struct Anchor<S> {
    min: S,
    max: S,
    range: S,
    mean: S,
    sd: S,
    skew: S,
}

impl<S: Scalar> Anchor<S> {
    fn new(sorted: &[S]) -> Self {
        let n = S::from_count(sorted.len());
        let min = sorted[0];
        let max = sorted[sorted.len() - 1];
        let mean = sorted.iter().copied().sum::<S>() / n;
        let (m2, m3) = sorted.iter().fold((S::zero(), S::zero()), |(a, b), &x| {
            let d = x - mean;
            (a + d * d, b + d * d * d)
        });
        let var = m2 / n;
        let sd = var.sqrt();
        let skew = if sd > S::zero() {
            (m3 / n) / (var * sd)
        } else {
            S::zero()
        };
        Self {
            min,
            max,
            range: max - min,
            mean,
            sd,
            skew,
        }
    }
}

fn logistic<S: Scalar>(t: S) -> S {
    S::one() / (S::one() + (-t).exp())
}

fn logit<S: Scalar>(p: S) -> S {
    (p / (S::one() - p)).ln()
}

fn sb_gap<S: Scalar>(t: S, range: S) -> S {
    let lo = S::lit(SB_MIN_GAP);
    let hi = S::lit(SB_MAX_GAP);
    range * (lo + (hi - lo) * logistic(t))
}

fn sb_gap_inv<S: Scalar>(gap: S, range: S) -> S {
    let lo = S::lit(SB_MIN_GAP);
    let hi = S::lit(SB_MAX_GAP);
    let frac = ((gap / range - lo) / (hi - lo))
        .max(S::lit(1e-9))
        .min(S::one() - S::lit(1e-9));
    logit(frac)
}

fn loc_from_gap<S: Scalar>(t: S, a: &Anchor<S>) -> S {
    a.min - a.range * (S::lit(LOC_MIN_GAP) + t.exp())
}

fn gap_param<S: Scalar>(loc: S, a: &Anchor<S>) -> S {
    let gap = ((a.min - loc) / a.range - S::lit(LOC_MIN_GAP)).max(S::lit(1e-12));
    gap.ln()
}

/// Maps an unconstrained vector to model parameters.
fn decode<S: Scalar>(family: Family, t: &[S], a: &Anchor<S>) -> Vec<S> {
    let r = a.range;
    match family {
        Family::Gamma | Family::ChiSquared | Family::InvertedWeibull => {
            vec![t[0].exp(), loc_from_gap(t[1], a), r * t[2].exp()]
        }
        Family::ExponentiatedWeibull => {
            vec![t[0].exp(), t[1].exp(), loc_from_gap(t[2], a), r * t[3].exp()]
        }
        Family::JohnsonSU => vec![t[0], t[1].exp(), a.mean + a.sd * t[2], a.sd * t[3].exp()],
        Family::JohnsonSB => {
            let xi = a.min - sb_gap(t[2], r);
            let upper = a.max + sb_gap(t[3], r);
            vec![t[0], t[1].exp(), xi, upper - xi]
        }
        Family::Normal | Family::Uniform => unreachable!("closed-form families are not decoded"),
    }
}

fn encode<S: Scalar>(family: Family, p: &[S], a: &Anchor<S>) -> Vec<S> {
    let r = a.range;
    match family {
        Family::Gamma | Family::ChiSquared | Family::InvertedWeibull => {
            vec![p[0].ln(), gap_param(p[1], a), (p[2] / r).ln()]
        }
        Family::ExponentiatedWeibull => {
            vec![p[0].ln(), p[1].ln(), gap_param(p[2], a), (p[3] / r).ln()]
        }
        Family::JohnsonSU => vec![p[0], p[1].ln(), (p[2] - a.mean) / a.sd, (p[3] / a.sd).ln()],
        Family::JohnsonSB => {
            let gap_lo = a.min - p[2];
            let gap_hi = p[2] + p[3] - a.max;
            vec![p[0], p[1].ln(), sb_gap_inv(gap_lo, r), sb_gap_inv(gap_hi, r)]
        }
        Family::Normal | Family::Uniform => unreachable!("closed-form families are not encoded"),
    }
}

fn mean_sd<S: Scalar>(xs: impl Iterator<Item = S> + Clone) -> (S, S) {
    let n = S::from_count(xs.clone().count());
    let mean = xs.clone().sum::<S>() / n;
    let var = xs.map(|x| (x - mean) * (x - mean)).sum::<S>() / n;
    (mean, var.sqrt())
}

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Three moment-based starting points in model-parameter space.
fn starting_points<S: Scalar>(family: Family, xs: &[S], a: &Anchor<S>) -> Vec<Vec<S>> {
    let r = a.range;
    let gap_fracs = [S::lit(0.05), S::lit(0.5), S::lit(2.0)];
    let pi = S::PI();
    let six_sqrt = S::lit(6.0).sqrt();
    match family {
        Family::Gamma | Family::ChiSquared => {
            let mut out = Vec::new();
            // skewness-matched three-parameter estimate
            if a.skew > S::lit(0.05) {
                let k = S::lit(4.0) / (a.skew * a.skew);
                let scale = a.sd * a.skew / S::lit(2.0);
                let loc = (a.mean - k * scale).min(a.min - S::lit(0.01) * r);
                out.push(vec![k, loc, scale]);
            }
            for &g in &gap_fracs {
                let loc = a.min - g * r;
                let (m, sd) = mean_sd(xs.iter().map(|&x| x - loc));
                let v = sd * sd;
                out.push(vec![m * m / v, loc, v / m]);
            }
            out.truncate(3);
            if family == Family::ChiSquared {
                for p in &mut out {
                    // df = 2k, scale = θ/2
                    p[0] *= S::lit(2.0);
                    p[2] /= S::lit(2.0);
                }
            }
            out
        }
        Family::InvertedWeibull => gap_fracs
            .iter()
            .map(|&g| {
                let loc = a.min - g * r;
                // ln(x - loc) is Gumbel(max) with location ln s and scale 1/c
                let (m, sd) = mean_sd(xs.iter().map(|&x| (x - loc).ln()));
                let beta = sd * six_sqrt / pi;
                vec![S::one() / beta, loc, (m - S::lit(EULER_GAMMA) * beta).exp()]
            })
            .collect(),
        Family::ExponentiatedWeibull => {
            let weibull = |g: S| {
                let loc = a.min - g * r;
                // ln(x - loc) is Gumbel(min) with location ln s and scale 1/c
                let (m, sd) = mean_sd(xs.iter().map(|&x| (x - loc).ln()));
                let beta = sd * six_sqrt / pi;
                (S::one() / beta, loc, (m + S::lit(EULER_GAMMA) * beta).exp())
            };
            let (c0, l0, s0) = weibull(gap_fracs[0]);
            let (c1, l1, s1) = weibull(gap_fracs[1]);
            vec![
                vec![S::one(), c0, l0, s0],
                vec![S::one(), c1, l1, s1],
                // larger exponent shifts mass right; compensate with a narrower scale
                vec![S::lit(3.0), c0, l0, s0 * S::lit(0.6)],
            ]
        }
        Family::JohnsonSU => {
            let median = xs_median(xs);
            [S::one(), S::lit(0.5), S::lit(2.0)]
                .iter()
                .map(|&f| {
                    let xi = median;
                    let lambda = a.sd * f;
                    let (m, sd) = mean_sd(xs.iter().map(|&x| ((x - xi) / lambda).asinh()));
                    let delta = S::one() / sd;
                    vec![-m * delta, delta, xi, lambda]
                })
                .collect()
        }
        Family::JohnsonSB => {
            let anchors = [
                (S::lit(SB_ANCHOR_GAP), S::lit(SB_ANCHOR_GAP)),
                (S::lit(0.01), S::lit(0.2)),
                (S::lit(0.2), S::lit(0.01)),
            ];
            anchors
                .iter()
                .map(|&(glo, ghi)| {
                    let xi = a.min - glo * r;
                    let lambda = a.max + ghi * r - xi;
                    let (m, sd) = mean_sd(xs.iter().map(|&x| {
                        let z = (x - xi) / lambda;
                        (z / (S::one() - z)).ln()
                    }));
                    let delta = S::one() / sd;
                    vec![-m * delta, delta, xi, lambda]
                })
                .collect()
        }
        Family::Normal | Family::Uniform => Vec::new(),
    }
}

fn xs_median<S: Scalar>(sorted: &[S]) -> S {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / S::lit(2.0)
    }
}

fn neg_log_likelihood<S: Scalar>(family: Family, params: &[S], xs: &[S]) -> S {
    match Model::new(family, params) {
        Ok(m) => {
            let ll = m.log_likelihood(xs);
            if ll.is_finite() {
                -ll
            } else {
                S::infinity()
            }
        }
        Err(_) => S::infinity(),
    }
}

/// Fits `family` to `samples` by maximum likelihood.
pub fn fit_mle<S: Scalar>(samples: &[S], family: Family) -> Result<DistributionFit<S>, DistError> {
    fit_mle_with(samples, family, &FitConfig::default())
}

pub fn fit_mle_with<S: Scalar>(
    samples: &[S],
    family: Family,
    cfg: &FitConfig<S>,
) -> Result<DistributionFit<S>, DistError> {
    if samples.len() < MIN_FIT_SAMPLES {
        return Err(DistError::TooFewSamples {
            got: samples.len(),
            need: MIN_FIT_SAMPLES,
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(DistError::NonFiniteSample);
    }
    let xs = sort_samples(samples);
    let anchor = Anchor::new(&xs);
    if anchor.range <= S::zero() {
        return Err(DistError::DegenerateSample);
    }

    let (params, initial_ll) = match family {
        Family::Normal => {
            let p = vec![anchor.mean, anchor.sd];
            let ll = -neg_log_likelihood(family, &p, &xs);
            (p, ll)
        }
        Family::Uniform => {
            let p = vec![anchor.min, anchor.max];
            let ll = -neg_log_likelihood(family, &p, &xs);
            (p, ll)
        }
        _ => optimize_family(family, &xs, &anchor, cfg)?,
    };

    let model = Model::new(family, &params)?;
    let log_likelihood = model.log_likelihood(&xs);
    let ks_statistic = ks_sorted(&xs, |x| model.cdf(x));
    Ok(DistributionFit {
        family,
        params,
        log_likelihood,
        ks_statistic,
        sample_count: xs.len(),
        initial_log_likelihood: initial_ll,
    })
}

fn optimize_family<S: Scalar>(
    family: Family,
    xs: &[S],
    anchor: &Anchor<S>,
    cfg: &FitConfig<S>,
) -> Result<(Vec<S>, S), DistError> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (family as u64).wrapping_mul(0x9e37_79b9));
    let objective = |t: &[S]| neg_log_likelihood(family, &decode(family, t, anchor), xs);

    let mut starts: Vec<Vec<S>> = starting_points(family, xs, anchor)
        .iter()
        .map(|p| encode(family, p, anchor))
        .filter(|t| t.iter().all(|v| v.is_finite()))
        .collect();
    for t in starts.iter_mut().skip(1) {
        for v in t.iter_mut() {
            let jitter: f64 = rng.random_range(-0.05..0.05);
            *v += S::lit(jitter);
        }
    }

    let initial = starts
        .iter()
        .map(|t| objective(t))
        .fold(S::infinity(), |acc, v| acc.min(v));
    if !initial.is_finite() {
        return Err(DistError::NoFeasibleStart(family));
    }

    let mut best: Option<(Vec<S>, S)> = None;
    let mut any_converged = false;
    for t0 in &starts {
        if !objective(t0).is_finite() {
            continue;
        }
        let m = nelder_mead(objective, t0, &cfg.optimizer);
        log::trace!(
            "{family}: start converged={} after {} iterations",
            m.converged,
            m.iterations
        );
        any_converged |= m.converged;
        if best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (mut t_best, mut v_best) = best.ok_or(DistError::NoFeasibleStart(family))?;
    // restart from the best vertex to escape premature simplex collapse
    let polish = nelder_mead(objective, &t_best, &cfg.optimizer);
    if polish.value <= v_best {
        t_best = polish.x;
        v_best = polish.value;
    }
    any_converged |= polish.converged;
    if !any_converged {
        return Err(DistError::NoConvergence {
            family,
            iterations: cfg.optimizer.max_iterations,
        });
    }
    debug_assert!(v_best <= initial);
    Ok((decode(family, &t_best, anchor), -initial))
}

/// Fits every candidate family and ranks the successes by ascending KS statistic,
/// breaking ties by higher log-likelihood.
pub fn select_best<S: Scalar>(samples: &[S], families: &[Family]) -> Result<Vec<DistributionFit<S>>, DistError> {
    select_best_with(samples, families, &FitConfig::default())
}

pub fn select_best_with<S: Scalar>(
    samples: &[S],
    families: &[Family],
    cfg: &FitConfig<S>,
) -> Result<Vec<DistributionFit<S>>, DistError> {
    let mut fits: Vec<DistributionFit<S>> = families
        .iter()
        .filter_map(|&f| match fit_mle_with(samples, f, cfg) {
            Ok(fit) => Some(fit),
            Err(e) => {
                log::debug!("fit of {f} failed: {e}");
                None
            }
        })
        .collect();
    if fits.is_empty() {
        return Err(DistError::AllFitsFailed);
    }
    rank_fits(&mut fits);
    Ok(fits)
}

pub fn rank_fits<S: Scalar>(fits: &mut [DistributionFit<S>]) {
    fits.sort_by(|a, b| {
        a.ks_statistic
            .partial_cmp(&b.ks_statistic)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(
                b.log_likelihood
                    .partial_cmp(&a.log_likelihood)
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
}
