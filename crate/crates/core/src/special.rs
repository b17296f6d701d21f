//! Special functions needed by the samplers and the analysis layer.
//!
//! `libm` provides `erfc` and `lgamma`; the regularized incomplete gamma and
//! beta functions and the log-space normal probabilities are implemented here.

use core::f64::consts::{FRAC_1_SQRT_2, LN_2, PI};

const EPS: f64 = 1e-15;
const MAX_ITER: usize = 10_000;

/// Scaled complementary error function `exp(x^2) * erfc(x)`.
pub fn erfcx(x: f64) -> f64 {
    if x < 25.0 {
        libm::exp(x * x) * libm::erfc(x)
    } else {
        // Asymptotic series; the terms shrink quickly for x >= 25.
        let x2 = x * x;
        let series = 1.0 - 1.0 / (2.0 * x2) + 3.0 / (4.0 * x2 * x2) - 15.0 / (8.0 * x2 * x2 * x2);
        series / (x * libm::sqrt(PI))
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    libm::exp(-0.5 * x * x) / libm::sqrt(2.0 * PI)
}

/// `log Phi(x)`, accurate far into the lower tail.
pub fn ln_normal_cdf(x: f64) -> f64 {
    if x > 0.0 {
        libm::log1p(-0.5 * libm::erfc(x * FRAC_1_SQRT_2))
    } else {
        let t = -x * FRAC_1_SQRT_2;
        -t * t - LN_2 + libm::log(erfcx(t))
    }
}

/// `log(Phi(upper) - Phi(lower))` for `lower < upper`.
pub fn ln_normal_prob(lower: f64, upper: f64) -> f64 {
    if lower > 0.0 {
        let pa = ln_normal_cdf(-lower);
        let pb = ln_normal_cdf(-upper);
        pa + libm::log1p(-libm::exp(pb - pa))
    } else if upper < 0.0 {
        let pa = ln_normal_cdf(lower);
        let pb = ln_normal_cdf(upper);
        pb + libm::log1p(-libm::exp(pa - pb))
    } else {
        let pa = 0.5 * libm::erfc(-lower * FRAC_1_SQRT_2);
        let pb = 0.5 * libm::erfc(upper * FRAC_1_SQRT_2);
        libm::log1p(-pa - pb)
    }
}

/// Standard normal quantile (Acklam's rational approximation, one Halley step).
pub fn normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
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
    let low = 0.024_25;
    let x = if p < low {
        let q = libm::sqrt(-2.0 * libm::log(p));
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = libm::sqrt(-2.0 * libm::log1p(-p));
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let e = normal_cdf(x) - p;
    let u = e * libm::sqrt(2.0 * PI) * libm::exp(0.5 * x * x);
    x - u / (1.0 + 0.5 * x * u)
}

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// Regularized lower incomplete gamma function `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma function `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_continued_fraction(a, x)
    }
}

/// `log Q(a, x)`, finite even when `Q` underflows.
pub fn ln_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        libm::log1p(-gamma_series(a, x))
    } else {
        ln_gamma_continued_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * libm::exp(-x + a * libm::log(x) - ln_gamma(a))
}

fn ln_gamma_continued_fraction(a: f64, x: f64) -> f64 {
    // Modified Lentz evaluation of the continued fraction for Q(a, x).
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    -x + a * libm::log(x) - ln_gamma(a) + libm::log(h)
}

fn gamma_continued_fraction(a: f64, x: f64) -> f64 {
    libm::exp(ln_gamma_continued_fraction(a, x))
}

/// Regularized incomplete beta function `I_x(a, b)`.
pub fn beta_inc(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * libm::log(x)
        + b * libm::log1p(-x);
    let front = libm::exp(ln_front);
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(a, b, x) / a
    } else {
        1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b
    }
}

fn beta_continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    let tiny = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < tiny {
        d = tiny;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = 1.0 + aa / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Two-sided p-value of a Student-t statistic with `df` degrees of freedom.
pub fn student_t_two_sided_p(t: f64, df: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    beta_inc(0.5 * df, 0.5, df / (df + t * t))
}

pub(crate) const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_cdf_reference_values() {
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-14);
        assert!((normal_cdf(-1.959_963_984_540_054) - 0.025).abs() < 1e-14);
    }

    #[test]
    fn ln_normal_cdf_deep_tail() {
        // Mills-ratio expansion: log Phi(-x) ~ -x^2/2 - log(x sqrt(2 pi)) - 1/x^2.
        let x: f64 = 40.0;
        let approx = -0.5 * x * x - libm::log(x * SQRT_2PI) - 1.0 / (x * x) + 2.5 / (x * x * x * x);
        assert!((ln_normal_cdf(-x) - approx).abs() < 1e-6);
        assert!((ln_normal_cdf(0.3) - libm::log(normal_cdf(0.3))).abs() < 1e-14);
    }

    #[test]
    fn ln_normal_prob_matches_direct_difference() {
        for &(a, b) in &[(-1.0, 2.0), (0.5, 1.5), (-3.0, -0.2), (-0.1, 0.1)] {
            let direct = libm::log(normal_cdf(b) - normal_cdf(a));
            assert!((ln_normal_prob(a, b) - direct).abs() < 1e-12, "{a} {b}");
        }
        // Far tail interval where the direct difference underflows.
        let lp = ln_normal_prob(50.0, 51.0);
        assert!((lp - ln_normal_cdf(-50.0)).abs() < 1e-9);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-10, 0.001, 0.16, 0.5, 0.84, 0.999] {
            assert!((normal_cdf(normal_quantile(p)) - p).abs() < 1e-13 * (1.0 + 1.0 / p));
        }
    }

    #[test]
    fn incomplete_gamma_reference_values() {
        // P(1, x) = 1 - exp(-x); P(0.5, x) = erf(sqrt(x)).
        assert!((gamma_p(1.0, 2.0) - (1.0 - libm::exp(-2.0))).abs() < 1e-14);
        assert!((gamma_p(0.5, 3.0) - libm::erf(libm::sqrt(3.0))).abs() < 1e-14);
        assert!((gamma_q(3.0, 20.0) - libm::exp(-20.0) * (1.0 + 20.0 + 200.0)).abs() < 1e-20);
        let lq = ln_gamma_q(2.0, 800.0);
        assert!((lq - (-800.0 + libm::log(801.0))).abs() < 1e-10);
    }

    #[test]
    fn incomplete_beta_reference_values() {
        // I_x(1, b) = 1 - (1 - x)^b and I_x(a, 1) = x^a.
        assert!((beta_inc(1.0, 3.0, 0.2) - (1.0 - 0.8f64.powi(3))).abs() < 1e-14);
        assert!((beta_inc(2.5, 1.0, 0.7) - libm::pow(0.7, 2.5)).abs() < 1e-14);
        // t with 1 df is Cauchy: P(|T| > 1) = 0.5.
        assert!((student_t_two_sided_p(1.0, 1.0) - 0.5).abs() < 1e-13);
        // Critical value of t(10) at 5% two-sided.
        assert!((student_t_two_sided_p(2.228_138_851_986_273_5, 10.0) - 0.05).abs() < 1e-10);
    }
}
