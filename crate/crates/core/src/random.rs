//! Random streams and the univariate samplers used by the Gibbs steps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::special::{gamma_q, ln_gamma_q, normal_quantile};

/// Sub-stream identifiers. Every (seed, sweep, step) triple gets its own
/// non-overlapping ChaCha20 block range, so results do not depend on how many
/// numbers earlier steps consumed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Step {
    Initialization = 0,
    Loadings = 1,
    LogVolatility = 2,
    InitialVolatility = 3,
    Horseshoe = 4,
    VarCoefficients = 5,
    Impact = 6,
    Shrinkage = 7,
    Factors = 8,
    Simulation = 9,
}

/// Generator type behind every random stream.
pub type StepRng = ChaCha20Rng;

/// Generator for one Gibbs step of one sweep of one chain.
pub fn step_rng(seed: u64, sweep: u64, step: Step) -> StepRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(step as u64);
    rng.set_word_pos((sweep as u128) << 40);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Uniform on the open interval (0, 1).
pub fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Gamma(shape, 1) draw.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::NonPositiveShape(shape));
    }
    let dist = Gamma::new(shape, 1.0).map_err(|_| Error::NonPositiveShape(shape))?;
    Ok(dist.sample(rng))
}

/// Inverse-gamma draw with density proportional to `x^(-shape-1) exp(-scale/x)`.
pub fn inverse_gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, scale: f64) -> Result<f64> {
    let g = gamma(rng, shape)?;
    Ok(scale / g)
}

/// Inverse-gamma draw truncated to `(0, upper]`.
///
/// Equivalent to a Gamma(shape, 1) draw `g` truncated to `g >= scale / upper`,
/// returned as `scale / g`. Plain rejection is used when the truncation keeps at
/// least 5% of the mass; otherwise the truncated gamma tail is inverted
/// numerically on the log scale.
pub fn truncated_inverse_gamma<R: Rng + ?Sized>(
    rng: &mut R,
    shape: f64,
    scale: f64,
    upper: f64,
) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::NonPositiveShape(shape));
    }
    let lower = scale / upper;
    if gamma_q(shape, lower) > 0.05 {
        loop {
            let g = gamma(rng, shape)?;
            if g >= lower && g > 0.0 {
                return Ok(scale / g);
            }
        }
    }
    let ln_tail = ln_gamma_q(shape, lower);
    let target = ln_tail + libm::log(open_uniform(rng));
    // Q(shape, .) is decreasing: find g >= lower with ln Q(shape, g) = target.
    let mut lo = lower;
    let mut hi = lower.max(1.0);
    while ln_gamma_q(shape, hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ln_gamma_q(shape, mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(scale / (0.5 * (lo + hi)))
}

/// Standard normal truncated to `[lower, upper]`.
///
/// Tail regions use Rayleigh proposals, central regions use normal or
/// inverse-CDF sampling depending on the interval width.
pub fn truncated_standard_normal<R: Rng + ?Sized>(rng: &mut R, lower: f64, upper: f64) -> f64 {
    const TAIL: f64 = 0.66;
    if lower > TAIL {
        normal_tail(rng, lower, upper)
    } else if upper < -TAIL {
        -normal_tail(rng, -upper, -lower)
    } else if upper - lower > 2.0 {
        loop {
            let x = standard_normal(rng);
            if x >= lower && x <= upper {
                return x;
            }
        }
    } else {
        let pl = 0.5 * libm::erfc(lower * core::f64::consts::FRAC_1_SQRT_2);
        let pu = 0.5 * libm::erfc(upper * core::f64::consts::FRAC_1_SQRT_2);
        let u: f64 = rng.random();
        let p = pl - (pl - pu) * u;
        (-normal_quantile(p)).clamp(lower, upper)
    }
}

/// Normal truncated to `[lower, upper]` with `0 < lower`, via Rayleigh proposals.
fn normal_tail<R: Rng + ?Sized>(rng: &mut R, lower: f64, upper: f64) -> f64 {
    let c = 0.5 * lower * lower;
    let f = libm::expm1(c - 0.5 * upper * upper);
    loop {
        let u: f64 = rng.random();
        let x = c - libm::log1p(u * f);
        let v: f64 = rng.random();
        if v * v * x <= c {
            return libm::sqrt(2.0 * x);
        }
    }
}

/// Index drawn with probability proportional to `weights` (non-negative).
pub fn categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}
