//! Column-by-column sampling of the zero- and sign-restricted impact matrix.
//!
//! For column `i` the matrix is partitioned around the pivot `b_ii`:
//! `b12` is the rest of row `i`, `w` the rest of column `i` and `B22` the
//! remaining block. The column is reparameterized as `(u, w)` with
//! `u = b_ii - b12' B22^-1 w`, so that `det B = det(B22) * u` and the
//! likelihood factors into a Gaussian kernel in `w` given `u` and a
//! one-dimensional kernel in `u` given `w`.

use alloc::vec;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{inverse, residuals, SvarLayout};
use crate::error::{Error, Result};
use crate::linalg::precision_moments;
use crate::model::{Restriction, ScaleProposal, VarParameters};
use crate::random::open_uniform;
use crate::svar::tmvn::sample_truncated_mvn;

/// Acceptance bookkeeping for one impact column.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ColumnDiagnostics {
    pub direction_proposals: u64,
    pub direction_accepted: u64,
    pub scale_proposals: u64,
    pub scale_accepted: u64,
}

impl ColumnDiagnostics {
    pub fn direction_rate(&self) -> f64 {
        self.direction_accepted as f64 / (self.direction_proposals.max(1)) as f64
    }

    pub fn scale_rate(&self) -> f64 {
        self.scale_accepted as f64 / (self.scale_proposals.max(1)) as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ImpactDiagnostics {
    pub columns: Vec<ColumnDiagnostics>,
}

/// Minimum number of proposals before a column can be declared stuck.
const STUCK_AFTER: u64 = 100_000;
const STUCK_RATE: f64 = 1e-4;

/// One Gibbs pass over all impact columns given the VAR coefficients.
pub fn sample_impact_matrix<R: Rng + ?Sized>(
    rng: &mut R,
    y: &DMatrix<f64>,
    layout: &SvarLayout,
    var: &mut VarParameters,
    diagnostics: &mut ImpactDiagnostics,
) -> Result<()> {
    let n = layout.system;
    if diagnostics.columns.len() != n {
        diagnostics.columns = vec![ColumnDiagnostics::default(); n];
    }
    let resid = residuals(y, &var.coefficients, layout.lags);
    for i in 0..n {
        sample_column(rng, &resid, layout, &mut var.impact, i, &mut diagnostics.columns[i])?;
    }
    Ok(())
}

fn sample_column<R: Rng + ?Sized>(
    rng: &mut R,
    resid: &DMatrix<f64>,
    layout: &SvarLayout,
    b: &mut DMatrix<f64>,
    i: usize,
    diag: &mut ColumnDiagnostics,
) -> Result<()> {
    let pattern = &layout.pattern;
    let ColumnStatistics { others, b22_inv, g, sum_a2, sum_av, observations: t_obs } = column_statistics(resid, b, i)?;
    let m = others.len();

    let pivot = pattern.tag(i, i);
    let (pivot_mean, pivot_var) = pattern.prior(i, i);
    let free: Vec<usize> = (0..m).filter(|&k| pattern.tag(others[k], i) != Restriction::Zero).collect();
    let mut w = DVector::from_fn(m, |k, _| b[(others[k], i)]);
    let mut u = b[(i, i)] - g.dot(&w);

    if !free.is_empty() {
        let kf = free.len();
        let ms = DMatrix::from_fn(m, kf, |r, c| b22_inv[(r, free[c])]);
        let gs = DVector::from_fn(kf, |c, _| g[free[c]]);
        let mut precision = (ms.transpose() * &ms) * (sum_a2 / (u * u)) + (&gs * gs.transpose()) / pivot_var;
        let mut linear = (ms.transpose() * &sum_av) / u - &gs * ((u - pivot_mean) / pivot_var);
        let mut lower = Vec::with_capacity(kf);
        let mut upper = Vec::with_capacity(kf);
        for (c, &k) in free.iter().enumerate() {
            let (mean, var) = pattern.prior(others[k], i);
            precision[(c, c)] += 1.0 / var;
            linear[c] += mean / var;
            let (lo, hi) = pattern.tag(others[k], i).interval();
            lower.push(lo);
            upper.push(hi);
        }
        let (mean, cov) = precision_moments(precision, &linear, "impact column")?;
        let (proposal, _) = sample_truncated_mvn(rng, &mean, &cov, &lower, &upper).map_err(|e| match e {
            Error::StuckRegion { .. } => Error::StuckRegion { column: i, rate: 0.0 },
            other => other,
        })?;
        diag.direction_proposals += 1;
        let mut trial = w.clone();
        for (c, &k) in free.iter().enumerate() {
            trial[k] = proposal[c];
        }
        if pivot.admits(u + g.dot(&trial)) {
            diag.direction_accepted += 1;
            w = trial;
        }
        check_stuck(i, diag.direction_proposals, diag.direction_rate())?;
    }

    let offset = g.dot(&w);
    let (gamma1, gamma2) = scale_terms(&b22_inv, sum_a2, &sum_av, &w);
    let kernel = ScaleKernel {
        observations: t_obs as f64,
        gamma1,
        gamma2,
        offset,
        prior_mean: pivot_mean,
        prior_variance: pivot_var,
        restriction: pivot,
    };
    let (next, accepted) = kernel.step(rng, u, layout.scale_proposal)?;
    diag.scale_proposals += 1;
    if accepted {
        diag.scale_accepted += 1;
        u = next;
    }
    check_stuck(i, diag.scale_proposals, diag.scale_rate())?;

    b[(i, i)] = u + offset;
    for (k, &row) in others.iter().enumerate() {
        b[(row, i)] = w[k];
    }
    Ok(())
}

/// Sufficient statistics of column `i` of the impact matrix given the other
/// columns, in the parameterization `b_ii = u + g'w` where `w` holds the
/// off-pivot entries of the column.
struct ColumnStatistics {
    others: Vec<usize>,
    b22_inv: DMatrix<f64>,
    g: DVector<f64>,
    sum_a2: f64,
    sum_av: DVector<f64>,
    observations: usize,
}

fn column_statistics(resid: &DMatrix<f64>, b: &DMatrix<f64>, i: usize) -> Result<ColumnStatistics> {
    let n = b.nrows();
    let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
    let m = others.len();
    let b22 = DMatrix::from_fn(m, m, |a, c| b[(others[a], others[c])]);
    let b22_inv = if m > 0 { inverse(&b22, "impact sub-block")? } else { DMatrix::zeros(0, 0) };
    let b12 = DVector::from_fn(m, |a, _| b[(i, others[a])]);
    // g'w is the part of b_ii explained by w.
    let g = b22_inv.transpose() * &b12;

    // a_t = y_1t - b12' B22^-1 y_-1t and v_t = B22^-1 y_-1t.
    let t_obs = resid.nrows();
    let y_rest = DMatrix::from_fn(t_obs, m, |t, a| resid[(t, others[a])]);
    let v = &y_rest * b22_inv.transpose();
    let a = DVector::from_fn(t_obs, |t, _| resid[(t, i)] - v.row(t).dot(&b12.transpose()));
    let sum_a2 = a.dot(&a);
    let sum_av = v.transpose() * &a;
    Ok(ColumnStatistics { others, b22_inv, g, sum_a2, sum_av, observations: t_obs })
}

/// Coefficients of `1/u` and `1/u^2` in the column log likelihood.
fn scale_terms(b22_inv: &DMatrix<f64>, sum_a2: f64, sum_av: &DVector<f64>, w: &DVector<f64>) -> (f64, f64) {
    let mw = b22_inv * w;
    (-2.0 * sum_av.dot(&mw), (1.0 + mw.dot(&mw)) * sum_a2)
}

fn check_stuck(column: usize, proposals: u64, rate: f64) -> Result<()> {
    if proposals >= STUCK_AFTER && rate < STUCK_RATE {
        return Err(Error::StuckRegion { column, rate });
    }
    Ok(())
}

/// Conditional kernel of the pivot scalar `u`:
/// `|u|^-T exp(-(gamma1/u + gamma2/u^2)/2) exp(-(u + offset - mean)^2 / (2 var))`
/// restricted to `u + offset` lying in the pivot's admissible region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleKernel {
    pub observations: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub offset: f64,
    pub prior_mean: f64,
    pub prior_variance: f64,
    pub restriction: Restriction,
}

impl ScaleKernel {
    pub fn log_likelihood(&self, u: f64) -> f64 {
        -self.observations * libm::log(u.abs()) - 0.5 * (self.gamma1 / u + self.gamma2 / (u * u))
    }

    pub fn log_prior(&self, u: f64) -> f64 {
        let d = u + self.offset - self.prior_mean;
        -0.5 * d * d / self.prior_variance
    }

    pub fn admits(&self, u: f64) -> bool {
        u != 0.0 && self.restriction.admits(u + self.offset)
    }

    pub fn log_target(&self, u: f64) -> f64 {
        if self.admits(u) {
            self.log_likelihood(u) + self.log_prior(u)
        } else {
            f64::NEG_INFINITY
        }
    }

    /// Admissible `u` interval implied by the pivot restriction.
    fn bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.restriction.interval();
        (lo - self.offset, hi - self.offset)
    }

    /// Build the discretized proposal for the chosen kernel.
    pub fn proposal(&self, kind: ScaleProposal) -> Result<PiecewiseExponential> {
        let include_prior = kind == ScaleProposal::FullConditional;
        let f = |u: f64| {
            if !self.admits(u) {
                f64::NEG_INFINITY
            } else if include_prior {
                self.log_likelihood(u) + self.log_prior(u)
            } else {
                self.log_likelihood(u)
            }
        };
        let magnitude = libm::sqrt((self.gamma2 / self.observations.max(1.0)).abs())
            .max(libm::sqrt(self.prior_variance))
            .max((self.prior_mean - self.offset).abs())
            .max(1e-300);
        let (lo, hi) = self.bounds();
        let mut sides = Vec::new();
        if lo < 0.0 {
            sides.push((-1.0, (-hi).max(0.0), -lo));
        }
        if hi > 0.0 {
            sides.push((1.0, lo.max(0.0), hi));
        }
        PiecewiseExponential::build(&f, &sides, magnitude)
    }

    /// One independence Metropolis-Hastings update of `u`.
    pub fn step<R: Rng + ?Sized>(&self, rng: &mut R, current: f64, kind: ScaleProposal) -> Result<(f64, bool)> {
        let q = self.proposal(kind)?;
        let candidate = q.sample(rng);
        let log_q_current = q.log_density(current);
        if !log_q_current.is_finite() {
            // The current value lies where the target has negligible mass
            // (only possible right after initialization): move.
            return Ok((candidate, true));
        }
        let log_ratio = self.log_target(candidate) - self.log_target(current) + log_q_current - q.log_density(candidate);
        let accept = log_ratio >= 0.0 || libm::log(open_uniform(rng)) < log_ratio;
        Ok(if accept { (candidate, true) } else { (current, false) })
    }
}

/// Density on a grid whose log is linear within each cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseExponential {
    knots: Vec<f64>,
    log_heights: Vec<f64>,
    cumulative: Vec<f64>,
    log_total: f64,
}

/// Coarse scan resolution and fine grid size per side.
const SCAN_POINTS: usize = 400;
const CELLS: usize = 800;
/// Log-density drop below the maximum beyond which mass is ignored.
const LOG_DROP: f64 = 60.0;

struct Side {
    sign: f64,
    start: f64,
    end: f64,
    mode: f64,
    peak: f64,
}

impl PiecewiseExponential {
    /// `sides` lists `(sign, a, b)`: the magnitude interval `(a, b)` of `u`
    /// on the negative (`sign = -1`) or positive side.
    fn build(f: &dyn Fn(f64) -> f64, sides: &[(f64, f64, f64)], magnitude: f64) -> Result<Self> {
        let mut found = Vec::new();
        for &(sign, a, b) in sides {
            let g = |m: f64| f(sign * m);
            let start = if a > 0.0 { a } else { magnitude * 1e-8 };
            let end = if b.is_finite() { b } else { magnitude * 1e8 };
            if !(end > start) {
                continue;
            }
            let ratio = libm::pow(end / start, 1.0 / (SCAN_POINTS - 1) as f64);
            let mut points = Vec::with_capacity(SCAN_POINTS);
            let mut m = start;
            for k in 0..SCAN_POINTS {
                points.push(if k == SCAN_POINTS - 1 { end } else { m });
                m *= ratio;
            }
            let (best, peak) = points
                .iter()
                .map(|m| g(*m))
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |acc, (k, v)| if v > acc.1 { (k, v) } else { acc });
            if !peak.is_finite() {
                continue;
            }
            // Golden-section refinement inside the bracketing coarse cells.
            let (mut lo, mut hi) = (points[best.saturating_sub(1)], points[(best + 1).min(SCAN_POINTS - 1)]);
            let phi = 0.618_033_988_749_894_8;
            let mut x1 = hi - phi * (hi - lo);
            let mut x2 = lo + phi * (hi - lo);
            let (mut f1, mut f2) = (g(x1), g(x2));
            for _ in 0..80 {
                if f1 >= f2 {
                    hi = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = hi - phi * (hi - lo);
                    f1 = g(x1);
                } else {
                    lo = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = lo + phi * (hi - lo);
                    f2 = g(x2);
                }
            }
            let (mode, value) = [(points[best], peak), (x1, f1), (x2, f2)]
                .into_iter()
                .fold((points[best], peak), |acc, c| if c.1 > acc.1 { c } else { acc });
            found.push(Side { sign, start, end, mode, peak: value });
        }
        let fmax = found.iter().fold(f64::NEG_INFINITY, |m, s| m.max(s.peak));
        if !fmax.is_finite() {
            return Err(Error::SingularPosterior("impact scale kernel has no admissible mass".into()));
        }
        let mut pieces: Vec<(f64, Vec<f64>)> = Vec::new();
        for side in &found {
            if side.peak < fmax - LOG_DROP {
                continue;
            }
            let g = |m: f64| f(side.sign * m);
            let (m1, m2) = side.support(&g, fmax);
            let grid: Vec<f64> = if m2 / m1 > 10.0 {
                let ratio = libm::pow(m2 / m1, 1.0 / CELLS as f64);
                let mut m = m1;
                (0..=CELLS)
                    .map(|k| {
                        let v = if k == CELLS { m2 } else { m };
                        m *= ratio;
                        v
                    })
                    .collect()
            } else {
                (0..=CELLS).map(|k| m1 + (m2 - m1) * k as f64 / CELLS as f64).collect()
            };
            let mut us: Vec<f64> = grid.iter().map(|m| side.sign * m).collect();
            if side.sign < 0.0 {
                us.reverse();
            }
            pieces.push((side.sign, us));
        }
        // Negative side first so that knots increase.
        pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut knots = Vec::new();
        let mut log_heights = Vec::new();
        for (_, us) in pieces {
            if !knots.is_empty() {
                // Separate sides by a zero-mass gap.
                knots.push(f64::NAN);
                log_heights.push(f64::NEG_INFINITY);
            }
            for u in us {
                let v = f(u);
                knots.push(u);
                log_heights.push(if v.is_finite() { v - fmax } else { -1e4 });
            }
        }
        let mut cumulative = Vec::with_capacity(knots.len());
        let mut total = 0.0;
        cumulative.push(0.0);
        for k in 0..knots.len() - 1 {
            total += cell_mass(knots[k], knots[k + 1], log_heights[k], log_heights[k + 1]);
            cumulative.push(total);
        }
        if !(total > 0.0) {
            return Err(Error::SingularPosterior("impact scale proposal has zero mass".into()));
        }
        Ok(PiecewiseExponential { knots, log_heights, cumulative, log_total: libm::log(total) })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().unwrap();
        let target = open_uniform(rng) * total;
        let k = self.cumulative.partition_point(|c| *c < target).clamp(1, self.knots.len() - 1) - 1;
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let (f0, f1) = (self.log_heights[k], self.log_heights[k + 1]);
        let width = x1 - x0;
        let slope = (f1 - f0) / width;
        let v = open_uniform(rng);
        let x = if (slope * width).abs() < 1e-12 {
            x0 + v * width
        } else if slope < 0.0 {
            x0 + libm::log1p(v * libm::expm1(slope * width)) / slope
        } else {
            x1 + libm::log1p(v * libm::expm1(-slope * width)) / slope
        };
        x.clamp(x0, x1)
    }

    /// Log density of the proposal; `-inf` outside the grid.
    pub fn log_density(&self, x: f64) -> f64 {
        // Knots are increasing within each side; the sides are split by a NaN.
        let split = self.knots.iter().position(|k| k.is_nan()).unwrap_or(self.knots.len());
        let range = if x < 0.0 && split < self.knots.len() || split == self.knots.len() {
            0..split
        } else {
            split + 1..self.knots.len()
        };
        let knots = &self.knots[range.clone()];
        if knots.len() < 2 || x < knots[0] || x > knots[knots.len() - 1] {
            return f64::NEG_INFINITY;
        }
        let k = knots.partition_point(|v| *v <= x).clamp(1, knots.len() - 1) - 1 + range.start;
        let (x0, x1) = (self.knots[k], self.knots[k + 1]);
        let (f0, f1) = (self.log_heights[k], self.log_heights[k + 1]);
        f0 + (f1 - f0) * (x - x0) / (x1 - x0) - self.log_total
    }
}

impl Side {
    /// Magnitude interval around the mode where the kernel is within
    /// `LOG_DROP` of the overall maximum, found by walking outwards with
    /// geometrically growing steps starting from the local curvature scale.
    fn support(&self, g: &dyn Fn(f64) -> f64, fmax: f64) -> (f64, f64) {
        let m = self.mode;
        let h = 1e-4 * m;
        let curvature = (g(m + h) - 2.0 * self.peak + g(m - h)) / (h * h);
        let scale = if curvature < 0.0 && curvature.is_finite() {
            (1.0 / libm::sqrt(-curvature)).clamp(1e-6 * m, m)
        } else {
            0.1 * m
        };
        let mut step = scale;
        let mut right = m;
        while right < self.end && g(right) > fmax - LOG_DROP {
            right += step;
            step *= 1.5;
        }
        let mut step = scale;
        let mut left = m;
        while left > self.start && g(left) > fmax - LOG_DROP {
            left -= step;
            step *= 1.5;
        }
        (left.max(self.start), right.min(self.end))
    }
}

fn cell_mass(x0: f64, x1: f64, f0: f64, f1: f64) -> f64 {
    if x0.is_nan() || x1.is_nan() || !(f0.is_finite() && f1.is_finite()) {
        return 0.0;
    }
    let width = x1 - x0;
    let top = f0.max(f1);
    let delta = (f1 - f0).abs();
    let shape = if delta < 1e-12 { 1.0 } else { -libm::expm1(-delta) / delta };
    width * libm::exp(top) * shape
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{step_rng, Step};

    fn kernel(restriction: Restriction) -> ScaleKernel {
        ScaleKernel {
            observations: 12.0,
            gamma1: 3.0,
            gamma2: 20.0,
            offset: 0.4,
            prior_mean: 0.0,
            prior_variance: 2.0,
            restriction,
        }
    }

    /// Full Gaussian log likelihood of residuals with impact matrix `b`.
    fn full_log_likelihood(resid: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        let b_inv = b.clone().try_inverse().unwrap();
        let eps = resid * b_inv.transpose();
        resid.nrows() as f64 * libm::log(b_inv.determinant().abs()) - 0.5 * eps.norm_squared()
    }

    #[test]
    fn factored_kernel_matches_full_likelihood() {
        use crate::random::standard_normal;
        let mut rng = step_rng(17, 0, Step::Impact);
        let (n, t_obs) = (4, 25);
        let resid = DMatrix::from_fn(t_obs, n, |_, _| standard_normal(&mut rng));
        let mut b = DMatrix::from_fn(n, n, |_, _| 0.3 * standard_normal(&mut rng));
        b += DMatrix::identity(n, n);
        for i in 0..n {
            let stats = column_statistics(&resid, &b, i).unwrap();
            let eval = |w: &DVector<f64>, u: f64| {
                let (gamma1, gamma2) = scale_terms(&stats.b22_inv, stats.sum_a2, &stats.sum_av, w);
                let factored = -(t_obs as f64) * libm::log(u.abs()) - 0.5 * (gamma1 / u + gamma2 / (u * u));
                let mut trial = b.clone();
                trial[(i, i)] = u + stats.g.dot(w);
                for (k, &row) in stats.others.iter().enumerate() {
                    trial[(row, i)] = w[k];
                }
                (factored, full_log_likelihood(&resid, &trial))
            };
            // The two agree up to a constant that does not involve column i.
            let w0 = DVector::from_fn(n - 1, |k, _| b[(stats.others[k], i)]);
            let (f0, l0) = eval(&w0, b[(i, i)] - stats.g.dot(&w0));
            for _ in 0..100 {
                let w = DVector::from_fn(n - 1, |_, _| standard_normal(&mut rng));
                let u = 0.2 + standard_normal(&mut rng).abs();
                let (f, l) = eval(&w, u);
                let (lhs, rhs) = (f - f0, l - l0);
                assert!((lhs - rhs).abs() <= 1e-8 * rhs.abs().max(1.0), "column {i}: {lhs} vs {rhs}");
            }
        }
    }

    /// Reference moments by trapezoidal integration of the target kernel.
    fn reference_mean(k: &ScaleKernel) -> f64 {
        let (mut mass, mut first) = (0.0, 0.0);
        let n = 400_000;
        for s in [-1.0, 1.0] {
            for j in 1..n {
                let u = s * 20.0 * j as f64 / n as f64;
                let p = libm::exp(k.log_target(u) + 40.0);
                mass += p;
                first += p * u;
            }
        }
        first / mass
    }

    #[test]
    fn proposal_density_integrates_to_one() {
        let k = kernel(Restriction::Free);
        let q = k.proposal(ScaleProposal::FullConditional).unwrap();
        let n = 400_000;
        let mut total = 0.0;
        let h = 40.0 / n as f64;
        for j in 0..n {
            let u = -20.0 + (j as f64 + 0.5) * h;
            total += libm::exp(q.log_density(u)) * h;
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }

    #[test]
    fn metropolis_chain_matches_target_moments() {
        for restriction in [Restriction::Free, Restriction::Positive, Restriction::Negative] {
            for kind in [ScaleProposal::FullConditional, ScaleProposal::Likelihood] {
                let k = kernel(restriction);
                let expected = reference_mean(&k);
                let mut rng = step_rng(9, 0, Step::Simulation);
                let mut u = if restriction == Restriction::Negative { -1.0 } else { 1.0 };
                let n = 20_000;
                let mut s = 0.0;
                let mut accepted = 0;
                for _ in 0..n {
                    let (next, acc) = k.step(&mut rng, u, kind).unwrap();
                    u = next;
                    accepted += acc as usize;
                    assert!(k.admits(u));
                    s += u;
                }
                let mean = s / n as f64;
                assert!((mean - expected).abs() < 0.05 * (1.0 + expected.abs()), "{restriction:?} {kind:?}: {mean} vs {expected}");
                if kind == ScaleProposal::FullConditional {
                    assert!(accepted as f64 / n as f64 > 0.95);
                }
            }
        }
    }
}
