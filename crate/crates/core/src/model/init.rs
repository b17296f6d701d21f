use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::{Block, FactorLoadings, LogVolatility, McmcState, Model, VarParameters};
use crate::error::{Error, Result};
use crate::linalg::least_squares;
use crate::stats;
use crate::svar::compute_minnesota_scales;

/// First principal component of a panel after standardizing each column,
/// signed to correlate positively with column 0 and mapped onto the scale of
/// column 0 by a least-squares fit with intercept.
pub fn pca_factor(panel: &DMatrix<f64>) -> Result<Vec<f64>> {
    let (t, n) = panel.shape();
    let mut z = panel.clone();
    for j in 0..n {
        let col: Vec<f64> = panel.column(j).iter().copied().collect();
        let sd = stats::std_dev(&col);
        if !(sd > 0.0 && sd.is_finite()) {
            return Err(Error::DegenerateData(alloc::format!("series {j} has zero variance")));
        }
        let mean = stats::mean(&col);
        for s in 0..t {
            z[(s, j)] = (panel[(s, j)] - mean) / sd;
        }
    }
    let corr = z.transpose() * &z / (t as f64 - 1.0);
    let eig = SymmetricEigen::new(corr);
    let top = eig.eigenvalues.imax();
    let loading = eig.eigenvectors.column(top).into_owned();
    let mut pc: Vec<f64> = (&z * loading).iter().copied().collect();
    let lead: Vec<f64> = panel.column(0).iter().copied().collect();
    if stats::correlation(&pc, &lead) < 0.0 {
        pc.iter_mut().for_each(|v| *v = -*v);
    }
    let x = DMatrix::from_fn(t, 2, |s, c| if c == 0 { 1.0 } else { pc[s] });
    let beta = least_squares(&x, &DVector::from_column_slice(&lead))?;
    Ok(pc.iter().map(|p| beta[0] + beta[1] * p).collect())
}

/// Deterministic starting point of the sampler.
///
/// Factors come from [`pca_factor`]; log volatilities start at
/// `log(var(x_i)) + 1`; loadings on the contemporaneous factor come from a
/// single regression per series, every other loading and the VAR
/// coefficients start at zero; the impact matrix starts at
/// [`proxy_starting_impact`] (or the pattern's starting matrix when that
/// fails) and both shrinkage parameters at 1.
pub fn initialize_state(model: &Model) -> Result<McmcState> {
    let d = &model.dims;
    let data = &model.data;
    let t = data.periods();
    let mut factors = DMatrix::zeros(t, 2);
    let mut loadings = [FactorLoadings::normalized(d), FactorLoadings::normalized(d)];
    let mut volatility = Vec::with_capacity(d.series());
    for block in Block::BOTH {
        let panel = data.panel(block);
        let f = pca_factor(panel)?;
        factors.set_column(block.index(), &DVector::from_column_slice(&f));
        let ff: f64 = f[d.factor_lags..].iter().map(|v| v * v).sum();
        for i in 0..d.series_per_block {
            let col: Vec<f64> = panel.column(i).iter().copied().collect();
            volatility.push(LogVolatility::constant(libm::log(stats::variance(&col)) + 1.0, t));
            if i > 0 {
                let fx: f64 = (d.factor_lags..t).map(|s| f[s] * col[s]).sum();
                loadings[block.index()].factor[(i, 0)] = fx / ff;
            }
        }
    }
    let y = model.var_observations(&factors);
    let endogenous = y.columns(0, d.endogenous).into_owned();
    let minnesota_scale = compute_minnesota_scales(&endogenous, d.var_lags)?;
    let var = VarParameters {
        coefficients: DMatrix::zeros(d.var_regressors(), d.system),
        impact: proxy_starting_impact(model, &y).unwrap_or_else(|| model.svar.pattern.starting_matrix()),
        kappa: [1.0, 1.0],
    };
    Ok(McmcState {
        loadings,
        volatility,
        factor_prior_mean: factors.clone(),
        factors,
        var,
        minnesota_scale,
    })
}

/// Impact matrix implied by least-squares residuals and the instruments.
///
/// With `m_j = phi_j eps_j + noise`, the covariance of the endogenous
/// residuals with `m_j` is `phi_j b_j`, and `b_j' S_rr^-1 b_j = 1`, so
/// `phi_j = sqrt(c' S_rr^-1 c)` and `b_j = c / phi_j`. The other columns
/// span the remaining covariance. Signs of each column are chosen to break
/// as few sign restrictions as possible and the rest are nudged into their
/// admissible region. Returns `None` when the construction fails, for
/// example with weak instruments or a singular result.
pub fn proxy_starting_impact(model: &Model, y: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let d = &model.dims;
    let (r, k, n) = (d.endogenous, d.instruments, d.system);
    let pattern = &model.svar.pattern;
    let lags = d.var_lags;
    let rows = y.nrows() - lags;
    // Endogenous equations on a constant and endogenous lags; instruments on a constant.
    let x = DMatrix::from_fn(rows, 1 + r * lags, |s, c| {
        if c == 0 {
            1.0
        } else {
            y[(lags + s - ((c - 1) / r + 1), (c - 1) % r)]
        }
    });
    let mut resid = DMatrix::zeros(rows, n);
    for j in 0..n {
        let target = DVector::from_fn(rows, |s, _| y[(lags + s, j)]);
        if j < r {
            let beta = least_squares(&x, &target).ok()?;
            resid.set_column(j, &(&target - &x * beta));
        } else {
            let mean = target.mean();
            resid.set_column(j, &target.map(|v| v - mean));
        }
    }
    let sigma = resid.transpose() * &resid / rows as f64;
    let s_rr = sigma.view((0, 0), (r, r)).into_owned();
    let s_rr_inv = s_rr.clone().try_inverse()?;

    let mut b = DMatrix::zeros(n, n);
    let mut explained = DMatrix::zeros(r, r);
    for j in 0..k {
        let c = sigma.view((0, r + j), (r, 1)).into_owned();
        let phi = libm::sqrt((c.transpose() * &s_rr_inv * &c)[(0, 0)]);
        if !(phi > 0.0) {
            return None;
        }
        let col = &c / phi;
        explained += &col * col.transpose();
        b.view_mut((0, j), (r, 1)).copy_from(&col);
        b[(r + j, j)] = phi;
        b[(r + j, r + j)] = libm::sqrt((sigma[(r + j, r + j)] - phi * phi).max(0.0)).max(1e-3 * phi);
    }
    let rest = SymmetricEigen::new(&s_rr - explained);
    let mut order: Vec<usize> = (0..r).collect();
    order.sort_by(|a, c| rest.eigenvalues[*c].total_cmp(&rest.eigenvalues[*a]));
    let floor = 1e-6 * s_rr.trace();
    for (slot, &e) in order.iter().take(r - k).enumerate() {
        let scale = libm::sqrt(rest.eigenvalues[e].max(floor));
        for i in 0..r {
            b[(i, k + slot)] = rest.eigenvectors[(i, e)] * scale;
        }
    }

    for j in 0..n {
        let violations = |b: &DMatrix<f64>| (0..n).filter(|&i| !pattern.tag(i, j).admits(b[(i, j)])).count();
        let mut flipped = b.clone();
        flipped.column_mut(j).neg_mut();
        if violations(&flipped) < violations(&b) {
            b = flipped;
        }
        let size = b.column(j).amax();
        for i in 0..n {
            let tag = pattern.tag(i, j);
            if !tag.admits(b[(i, j)]) {
                b[(i, j)] = match tag {
                    super::Restriction::Zero => 0.0,
                    _ => tag.sign() * 1e-3 * size,
                };
            }
        }
    }
    let det = b.clone().lu().determinant();
    (det.is_finite() && det != 0.0 && pattern.admits(&b)).then_some(b)
}
