//! Derivative-free Nelder–Mead simplex minimization over an unconstrained space.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy)]
pub struct NelderMeadConfig<S> {
    pub max_iterations: usize,
    /// Converged when the spread of simplex values is below `rel_tolerance * (|f_best| + 1)`.
    pub rel_tolerance: S,
    pub initial_step: S,
}

impl<S: Scalar> Default for NelderMeadConfig<S> {
    fn default() -> Self {
        Self {
            max_iterations: 2000,
            rel_tolerance: S::lit(1e-8),
            initial_step: S::lit(0.25),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum<S> {
    pub x: Vec<S>,
    pub value: S,
    pub iterations: usize,
    pub converged: bool,
}

fn eval<S: Scalar, F: FnMut(&[S]) -> S>(f: &mut F, x: &[S]) -> S {
    let v = f(x);
    if v.is_nan() {
        S::infinity()
    } else {
        v
    }
}

/// Minimizes `f` starting from `x0`. Non-finite objective values are treated as `+inf`,
/// so the returned value is never worse than `f(x0)`.
pub fn nelder_mead<S, F>(mut f: F, x0: &[S], cfg: &NelderMeadConfig<S>) -> Minimum<S>
where
    S: Scalar,
    F: FnMut(&[S]) -> S,
{
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (S::one(), S::lit(2.0), S::lit(0.5), S::lit(0.5));

    let mut simplex: Vec<(Vec<S>, S)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(&mut f, x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        let step = if x[i].abs() > S::one() {
            cfg.initial_step * x[i].abs()
        } else {
            cfg.initial_step
        };
        x[i] += step;
        let v = eval(&mut f, &x);
        simplex.push((x, v));
    }

    let mut centroid = vec![S::zero(); n];
    let mut trial = vec![S::zero(); n];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < cfg.max_iterations {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        let best = simplex[0].1;
        let worst = simplex[n].1;
        if best.is_finite() && (worst - best).abs() <= cfg.rel_tolerance * (best.abs() + S::one()) {
            converged = true;
            break;
        }
        iterations += 1;

        centroid.iter_mut().for_each(|c| *c = S::zero());
        for (x, _) in &simplex[..n] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c += xi;
            }
        }
        let nf = S::from_count(n);
        centroid.iter_mut().for_each(|c| *c /= nf);

        let along = |coef: S, out: &mut Vec<S>, worst_x: &[S]| {
            for i in 0..n {
                out[i] = centroid[i] + coef * (centroid[i] - worst_x[i]);
            }
        };

        let worst_x = simplex[n].0.clone();
        along(alpha, &mut trial, &worst_x);
        let fr = eval(&mut f, &trial);
        let second_worst = simplex[n - 1].1;

        if fr < best {
            let reflected = trial.clone();
            along(gamma, &mut trial, &worst_x);
            let fe = eval(&mut f, &trial);
            simplex[n] = if fe < fr { (trial.clone(), fe) } else { (reflected, fr) };
            continue;
        }
        if fr < second_worst {
            simplex[n] = (trial.clone(), fr);
            continue;
        }
        // contraction, outside if the reflection improved on the worst point
        let (coef, reference) = if fr < worst { (rho, fr) } else { (-rho, worst) };
        along(coef, &mut trial, &worst_x);
        let fc = eval(&mut f, &trial);
        if fc < reference {
            simplex[n] = (trial.clone(), fc);
            continue;
        }
        // shrink toward the best vertex
        let best_x = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for i in 0..n {
                x[i] = best_x[i] + sigma * (x[i] - best_x[i]);
            }
            *v = eval(&mut f, x);
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        let rosen = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let cfg = NelderMeadConfig {
            rel_tolerance: 1e-14,
            ..Default::default()
        };
        let m = nelder_mead(rosen, &[-1.2, 1.0], &cfg);
        assert!(m.converged);
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m.x);
    }

    #[test]
    fn never_returns_worse_than_start() {
        let f = |x: &[f64]| {
            if x[0] > 0.3 {
                f64::NAN
            } else {
                (x[0] - 0.2).powi(2) + x[1].abs()
            }
        };
        let start = [0.0, 0.5];
        let m = nelder_mead(f, &start, &NelderMeadConfig::default());
        assert!(m.value <= f(&start));
    }

    #[test]
    fn reports_iteration_cap() {
        let f = |x: &[f64]| (x[0] - 1e6).powi(2) + (x[1] + 3e5).powi(2);
        let cfg = NelderMeadConfig {
            max_iterations: 5,
            ..Default::default()
        };
        let m = nelder_mead(f, &[0.0, 0.0], &cfg);
        assert!(!m.converged);
        assert_eq!(m.iterations, 5);
    }
}
