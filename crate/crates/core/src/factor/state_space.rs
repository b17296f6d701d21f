//! Linear Gaussian state space with lag-block states, some observation rows
//! measured without noise, forward filtering and backward sampling.

use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{draw_mvn, solve_psd, symmetrize};

/// `beta_t = (s_t, s_{t-1}, ..., s_{t-d+1})` with `s_t` of size `block_size`.
///
/// Transition: `beta_t = F beta_{t-1} + (c_t, 0, ..., 0) + (e_t, 0, ..., 0)`
/// with `e_t ~ N(0, Q)`. Observation row `j` at time `t`:
/// `x_jt = H_j beta_t + noise`, noise variance `noise_variance[(t, j)]`.
/// Rows listed in `exact_rows` are noise-free copies of one state component.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    pub block_size: usize,
    pub blocks: usize,
    pub observation: DMatrix<f64>,
    pub transition: DMatrix<f64>,
    /// `T x block_size` transition intercepts (row `t` applies to `beta_t`).
    pub intercepts: DMatrix<f64>,
    pub innovation_covariance: DMatrix<f64>,
    pub noise_variance: DMatrix<f64>,
    /// `T x rows`; NaN marks an unused entry.
    pub data: DMatrix<f64>,
    /// For every observation row, the state component it copies exactly.
    pub exact_rows: Vec<Option<usize>>,
    /// First filtered period; observations of earlier periods are absorbed
    /// into `beta_start` through the lag blocks.
    pub start: usize,
    pub prior_mean: DVector<f64>,
    pub prior_covariance: DMatrix<f64>,
}

/// Filtered moments `beta_{t|t}`, `V_{t|t}` for `t = start..T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutput {
    pub means: Vec<DVector<f64>>,
    pub covariances: Vec<DMatrix<f64>>,
}

impl StateSpace {
    pub fn dim(&self) -> usize {
        self.block_size * self.blocks
    }

    pub fn periods(&self) -> usize {
        self.data.nrows()
    }

    /// Observation matrix acting on a window `shift` periods later, i.e.
    /// observations of period `t - shift` expressed through `beta_t`.
    fn shifted_observation(&self, shift: usize) -> DMatrix<f64> {
        let m = self.dim();
        let offset = shift * self.block_size;
        DMatrix::from_fn(self.observation.nrows(), m, |j, c| if c >= offset { self.observation[(j, c - offset)] } else { 0.0 })
    }

    fn update(&self, mean: &mut DVector<f64>, cov: &mut DMatrix<f64>, period: usize, shift: usize) -> Result<()> {
        let h = self.shifted_observation(shift);
        let noisy: Vec<usize> = (0..h.nrows())
            .filter(|&j| self.exact_rows[j].is_none() && self.data[(period, j)].is_finite())
            .collect();
        if !noisy.is_empty() {
            let ho = DMatrix::from_fn(noisy.len(), h.ncols(), |a, c| h[(noisy[a], c)]);
            let hv = &ho * &*cov;
            let mut s = &hv * ho.transpose();
            for (a, &j) in noisy.iter().enumerate() {
                s[(a, a)] += self.noise_variance[(period, j)];
            }
            let innovation = DVector::from_fn(noisy.len(), |a, _| self.data[(period, noisy[a])]) - &ho * &*mean;
            // K = V H' S^-1, computed as (S^-1 H V)'.
            let gain_t = solve_psd(&s, &hv);
            *mean += gain_t.transpose() * innovation;
            *cov -= gain_t.transpose() * hv;
            symmetrize(cov);
        }
        for (j, exact) in self.exact_rows.iter().enumerate() {
            let (Some(c), true) = (exact, self.data[(period, j)].is_finite()) else { continue };
            let c = c + shift * self.block_size;
            if c >= self.dim() {
                continue;
            }
            let value = self.data[(period, j)];
            let v = cov[(c, c)];
            if v > 0.0 {
                let col = cov.column(c).into_owned();
                *mean += &col * ((value - mean[c]) / v);
                *cov -= (&col * col.transpose()) / v;
            }
            mean[c] = value;
            cov.row_mut(c).fill(0.0);
            cov.column_mut(c).fill(0.0);
            symmetrize(cov);
        }
        Ok(())
    }

    fn predict(&self, mean: &DVector<f64>, cov: &DMatrix<f64>, t: usize) -> (DVector<f64>, DMatrix<f64>) {
        let mut m = &self.transition * mean;
        for k in 0..self.block_size {
            m[k] += self.intercepts[(t, k)];
        }
        let mut v = &self.transition * cov * self.transition.transpose();
        for a in 0..self.block_size {
            for b in 0..self.block_size {
                v[(a, b)] += self.innovation_covariance[(a, b)];
            }
        }
        symmetrize(&mut v);
        (m, v)
    }

    /// Forward recursion. Observations of periods `0..=start` update the
    /// initial window; later periods are predicted and updated in turn.
    pub fn filter(&self) -> Result<FilterOutput> {
        let mut mean = self.prior_mean.clone();
        let mut cov = self.prior_covariance.clone();
        for period in 0..=self.start {
            self.update(&mut mean, &mut cov, period, self.start - period)?;
        }
        check_finite(&mean, &cov, self.start)?;
        let mut means = alloc::vec![mean.clone()];
        let mut covariances = alloc::vec![cov.clone()];
        for t in self.start + 1..self.periods() {
            let (m, v) = self.predict(&mean, &cov, t);
            mean = m;
            cov = v;
            self.update(&mut mean, &mut cov, t, 0)?;
            check_finite(&mean, &cov, t)?;
            means.push(mean.clone());
            covariances.push(cov.clone());
        }
        Ok(FilterOutput { means, covariances })
    }

    /// Backward sampling of `beta_T, ..., beta_start` given the filter output.
    /// Only the oldest block of each `beta_t` is new relative to `beta_{t+1}`;
    /// the other blocks are copied, and exactly known components keep their
    /// filtered (observed) values.
    pub fn sample_backward<R: Rng + ?Sized>(&self, rng: &mut R, filtered: &FilterOutput) -> Result<Vec<DVector<f64>>> {
        let n = filtered.means.len();
        let m = self.dim();
        let r = self.block_size;
        let mut draws = alloc::vec![DVector::zeros(m); n];
        draws[n - 1] = draw_subset(rng, &filtered.means[n - 1], &filtered.covariances[n - 1], &(0..m).collect::<Vec<_>>());
        for k in (0..n - 1).rev() {
            let t = self.start + k;
            let mean = &filtered.means[k];
            let cov = &filtered.covariances[k];
            let (pred_mean, pred_cov) = self.predict(mean, cov, t + 1);
            let next = &draws[k + 1];
            let stochastic: Vec<usize> = (0..m).filter(|&c| pred_cov[(c, c)] > 0.0).collect();
            let mut beta = mean.clone();
            let fresh: Vec<usize> = ((self.blocks - 1) * r..m).collect();
            if !stochastic.is_empty() {
                let fj = DMatrix::from_fn(stochastic.len(), m, |a, c| self.transition[(stochastic[a], c)]);
                let pj = DMatrix::from_fn(stochastic.len(), stochastic.len(), |a, b| pred_cov[(stochastic[a], stochastic[b])]);
                let gap = DVector::from_fn(stochastic.len(), |a, _| next[stochastic[a]] - pred_mean[stochastic[a]]);
                let vf = cov * fj.transpose();
                let gain_t = solve_psd(&pj, &vf.transpose());
                let cond_mean = mean + gain_t.transpose() * gap;
                let mut cond_cov = cov - gain_t.transpose() * vf.transpose();
                symmetrize(&mut cond_cov);
                beta = draw_subset(rng, &cond_mean, &cond_cov, &fresh);
                for &c in &fresh {
                    if cov[(c, c)] <= 0.0 {
                        beta[c] = mean[c];
                    }
                }
            }
            for c in 0..(self.blocks - 1) * r {
                beta[c] = next[c + r];
            }
            draws[k] = beta;
        }
        Ok(draws)
    }

    /// State component `component` (within a block) at every period
    /// `0..T`, read from the sampled windows.
    pub fn component_path(&self, draws: &[DVector<f64>], component: usize) -> Vec<f64> {
        (0..self.periods())
            .map(|tau| {
                if tau >= self.start {
                    draws[tau - self.start][component]
                } else {
                    draws[0][(self.start - tau) * self.block_size + component]
                }
            })
            .collect()
    }
}

/// Mean with the components in `subset` drawn jointly from their marginal
/// (components with zero variance keep the mean).
fn draw_subset<R: Rng + ?Sized>(rng: &mut R, mean: &DVector<f64>, cov: &DMatrix<f64>, subset: &[usize]) -> DVector<f64> {
    let active: Vec<usize> = subset.iter().copied().filter(|&c| cov[(c, c)] > 0.0).collect();
    let mut out = mean.clone();
    if active.is_empty() {
        return out;
    }
    let sub_mean = DVector::from_fn(active.len(), |a, _| mean[active[a]]);
    let sub_cov = DMatrix::from_fn(active.len(), active.len(), |a, b| cov[(active[a], active[b])]);
    let draw = draw_mvn(rng, &sub_mean, &sub_cov);
    for (a, &c) in active.iter().enumerate() {
        out[c] = draw[a];
    }
    out
}

fn check_finite(mean: &DVector<f64>, cov: &DMatrix<f64>, t: usize) -> Result<()> {
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::FilterDivergence(t));
    }
    Ok(())
}
