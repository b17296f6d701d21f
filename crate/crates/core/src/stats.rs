//! Descriptive statistics on slices.

use alloc::vec::Vec;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Sample variance with the `n - 1` denominator. Deviations are taken from
/// the first element before centering, so constant data give exactly zero.
pub fn variance(x: &[f64]) -> f64 {
    let Some(&first) = x.first() else { return f64::NAN };
    let shifted: Vec<f64> = x.iter().map(|v| v - first).collect();
    let m = mean(&shifted);
    shifted.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

pub fn std_dev(x: &[f64]) -> f64 {
    libm::sqrt(variance(x))
}

/// Pearson correlation; NaN when either input is constant.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / libm::sqrt(sxx * syy)
}

/// Quantile of already sorted data by linear interpolation between order
/// statistics (the "type 7" definition).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n as f64 - 1.0) * p;
    let lo = libm::floor(h) as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s: Vec<f64> = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

/// 16th, 50th and 84th percentiles.
pub fn central_band(x: &[f64]) -> [f64; 3] {
    let mut s: Vec<f64> = x.to_vec();
    s.sort_by(f64::total_cmp);
    [quantile_sorted(&s, 0.16), quantile_sorted(&s, 0.5), quantile_sorted(&s, 0.84)]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn type7_quantiles() {
        let x = [3.0, 1.0, 2.0, 4.0];
        assert_eq!(quantile(&x, 0.5), 2.5);
        assert!((quantile(&x, 0.16) - 1.48).abs() < 1e-12);
        assert_eq!(quantile(&x, 1.0), 4.0);
    }

    #[test]
    fn sample_moments() {
        let x = [1.0, 2.0, 3.0];
        assert_eq!(variance(&x), 1.0);
        assert!((correlation(&x, &[2.0, 4.0, 6.5]) - 0.997_948_7).abs() < 1e-6);
    }
}
