//! Special functions: log-gamma, regularized incomplete gamma, error function and
//! the standard normal distribution with its inverse.

use crate::scalar::Scalar;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_SERIES_TERMS: usize = 1000;

/// Natural log of the gamma function for `x > 0` (Lanczos approximation).
pub fn ln_gamma<S: Scalar>(x: S) -> S {
    if x < S::lit(0.5) {
        // reflection: Γ(x)Γ(1-x) = π / sin(πx)
        let pi = S::PI();
        return (pi / (pi * x).sin().abs()).ln() - ln_gamma(S::one() - x);
    }
    let x = x - S::one();
    let mut acc = S::lit(LANCZOS[0]);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        acc += S::lit(c) / (x + S::from_count(i));
    }
    let t = x + S::lit(LANCZOS_G + 0.5);
    S::lit(0.5) * (S::TAU()).ln() + (x + S::lit(0.5)) * t.ln() - t + acc.ln()
}

fn tiny<S: Scalar>() -> S {
    S::min_positive_value() / S::epsilon()
}

/// ln of the prefactor x^a e^{-x} / Γ(a) shared by both incomplete-gamma expansions.
fn ln_prefactor<S: Scalar>(a: S, x: S) -> S {
    a * x.ln() - x - ln_gamma(a)
}

fn lower_series<S: Scalar>(a: S, x: S) -> S {
    let mut ap = a;
    let mut del = S::one() / a;
    let mut sum = del;
    for _ in 0..MAX_SERIES_TERMS {
        ap += S::one();
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * S::epsilon() {
            break;
        }
    }
    sum * ln_prefactor(a, x).exp()
}

fn upper_continued_fraction<S: Scalar>(a: S, x: S) -> S {
    let fpmin = tiny::<S>();
    let mut b = x + S::one() - a;
    let mut c = S::one() / fpmin;
    let mut d = S::one() / b;
    let mut h = d;
    for i in 1..MAX_SERIES_TERMS {
        let i = S::from_count(i);
        let an = -i * (i - a);
        b += S::lit(2.0);
        d = an * d + b;
        if d.abs() < fpmin {
            d = fpmin;
        }
        c = b + an / c;
        if c.abs() < fpmin {
            c = fpmin;
        }
        d = S::one() / d;
        let del = d * c;
        h *= del;
        if (del - S::one()).abs() < S::epsilon() {
            break;
        }
    }
    h * ln_prefactor(a, x).exp()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p<S: Scalar>(a: S, x: S) -> S {
    if x <= S::zero() {
        return S::zero();
    }
    if x.is_infinite() {
        return S::one();
    }
    if x < a + S::one() {
        lower_series(a, x)
    } else {
        S::one() - upper_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), accurate in the upper tail.
pub fn gamma_q<S: Scalar>(a: S, x: S) -> S {
    if x <= S::zero() {
        return S::one();
    }
    if x.is_infinite() {
        return S::zero();
    }
    if x < a + S::one() {
        S::one() - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

/// Inverse of P(a, ·): the x with P(a, x) = p.
pub fn gamma_p_inv<S: Scalar>(a: S, p: S) -> S {
    let one = S::one();
    if p <= S::zero() {
        return S::zero();
    }
    if p >= one {
        return S::infinity();
    }
    let half = S::lit(0.5);
    let a1 = a - one;
    let gln = ln_gamma(a);
    let (lna1, afac) = if a > one {
        let lna1 = a1.ln();
        (lna1, (a1 * (lna1 - one) - gln).exp())
    } else {
        (S::zero(), S::zero())
    };

    let mut x = if a > one {
        let pp = if p < half { p } else { one - p };
        let t = (S::lit(-2.0) * pp.ln()).sqrt();
        let mut z = (S::lit(2.30753) + t * S::lit(0.27061)) / (one + t * (S::lit(0.99229) + t * S::lit(0.04481))) - t;
        if p < half {
            z = -z;
        }
        let base = one - one / (S::lit(9.0) * a) - z / (S::lit(3.0) * a.sqrt());
        (a * base * base * base).max(S::lit(1e-3))
    } else {
        let t = one - a * (S::lit(0.253) + a * S::lit(0.12));
        if p < t {
            (p / t).powf(one / a)
        } else {
            one - (one - (p - t) / (one - t)).ln()
        }
    };

    let tol = S::epsilon().sqrt() * S::lit(1e-3);
    for _ in 0..100 {
        if x <= S::zero() {
            return S::zero();
        }
        let err = gamma_p(a, x) - p;
        let dens = if a > one {
            (-(x - a1) + a1 * (x.ln() - lna1)).exp() * afac
        } else {
            (-x + a1 * x.ln() - gln).exp()
        };
        if dens <= S::zero() || !dens.is_finite() {
            break;
        }
        let u = err / dens;
        let step = u / (one - half * one.min(u * (a1 / x - one)));
        let prev = x;
        x -= step;
        if x <= S::zero() {
            x = half * prev;
        }
        if (x - prev).abs() < tol * x.max(tiny::<S>()) {
            break;
        }
    }
    x
}

/// Complementary error function.
pub fn erfc<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        S::lit(2.0) - erfc(-x)
    } else {
        gamma_q(S::lit(0.5), x * x)
    }
}

/// Error function.
pub fn erf<S: Scalar>(x: S) -> S {
    if x < S::zero() {
        -erf(-x)
    } else {
        gamma_p(S::lit(0.5), x * x)
    }
}

/// ln of the standard normal density.
#[inline]
pub fn ln_std_normal_pdf<S: Scalar>(z: S) -> S {
    -S::lit(0.5) * z * z - S::lit(0.5) * S::TAU().ln()
}

#[inline]
pub fn std_normal_pdf<S: Scalar>(z: S) -> S {
    ln_std_normal_pdf(z).exp()
}

/// Standard normal CDF Φ(z).
pub fn std_normal_cdf<S: Scalar>(z: S) -> S {
    S::lit(0.5) * erfc(-z / S::SQRT_2())
}

/// Inverse standard normal CDF, Acklam's rational approximation polished by one Halley step.
pub fn std_normal_quantile<S: Scalar>(p: S) -> S {
    if p <= S::zero() {
        return S::neg_infinity();
    }
    if p >= S::one() {
        return S::infinity();
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let horner = |coef: &[f64], t: S| coef.iter().fold(S::zero(), |acc, &c| acc * t + S::lit(c));
    let p_low = S::lit(0.02425);
    let one = S::one();
    let x = if p < p_low {
        let q = (S::lit(-2.0) * p.ln()).sqrt();
        horner(&C, q) / (horner(&D, q) * q + one)
    } else if p <= one - p_low {
        let q = p - S::lit(0.5);
        let r = q * q;
        horner(&A, r) * q / (horner(&B, r) * r + one)
    } else {
        let q = (S::lit(-2.0) * (one - p).ln()).sqrt();
        -horner(&C, q) / (horner(&D, q) * q + one)
    };
    let e = std_normal_cdf(x) - p;
    let u = e * S::TAU().sqrt() * (x * x / S::lit(2.0)).exp();
    let refined = x - u / (one + x * u / S::lit(2.0));
    if refined.is_finite() {
        refined
    } else {
        x
    }
}
