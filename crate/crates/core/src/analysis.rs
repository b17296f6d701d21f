//! Impulse responses, country decompositions and the summary statistics
//! built from posterior draws.

use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Block, ChannelScale, FactorLoadings, ModelSpec, VarParameters};
use crate::special::student_t_two_sided_p;
use crate::stats;

pub const DEFAULT_HORIZON: usize = 36;
/// Policy-rate response on impact after normalization (percentage points).
pub const POLICY_IMPACT_TARGET: f64 = -0.25;

/// Which variable is normalized and how channel responses return to
/// original units.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfSetup {
    pub variables: Vec<String>,
    pub policy_variable: usize,
    pub target: f64,
    pub horizon: usize,
    pub shock: usize,
    /// One scale per channel (variables `2..`); factors are left as they are.
    pub channel_scale: Vec<ChannelScale>,
}

impl IrfSetup {
    pub fn new(spec: &ModelSpec, channel_scale: Vec<ChannelScale>) -> Self {
        IrfSetup {
            variables: spec.endogenous_names(),
            policy_variable: spec.policy_rate_variable(),
            target: POLICY_IMPACT_TARGET,
            horizon: DEFAULT_HORIZON,
            shock: 0,
            channel_scale,
        }
    }

    fn unit(&self, variable: usize) -> f64 {
        if variable >= 2 {
            self.channel_scale.get(variable - 2).map_or(1.0, |s| s.std_dev)
        } else {
            1.0
        }
    }
}

/// Normalized responses of the endogenous variables, one `(H + 1) x r`
/// matrix per draw, channels in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct IrfSet {
    pub setup: IrfSetup,
    pub responses: Vec<DMatrix<f64>>,
    pub destandardized: bool,
}

impl IrfSet {
    pub fn draws(&self) -> usize {
        self.responses.len()
    }

    /// Response of `variable` in every draw at `horizon`.
    pub fn cell(&self, variable: usize, horizon: usize) -> Vec<f64> {
        self.responses.iter().map(|r| r[(horizon, variable)]).collect()
    }

    /// Response on the model (standardized) scale.
    pub fn model_scale(&self, draw: usize) -> DMatrix<f64> {
        let mut m = self.responses[draw].clone();
        if self.destandardized {
            for j in 0..m.ncols() {
                let unit = self.setup.unit(j);
                m.column_mut(j).unscale_mut(unit);
            }
        }
        m
    }
}

/// Unnormalized responses of all `n` VAR variables to a unit structural
/// shock, from iterating the lag polynomial on the impact column.
pub fn impulse_path(var: &VarParameters, shock: usize, horizon: usize) -> DMatrix<f64> {
    let n = var.impact.nrows();
    let lags = var.lags();
    let lag_matrices: Vec<DMatrix<f64>> = (1..=lags).map(|l| var.lag_matrix(l)).collect();
    let mut path = DMatrix::zeros(horizon + 1, n);
    path.set_row(0, &var.impact.column(shock).transpose());
    for h in 1..=horizon {
        let mut next = DVector::zeros(n);
        for (l, a) in lag_matrices.iter().enumerate().take(h) {
            next += a * path.row(h - l - 1).transpose();
        }
        path.set_row(h, &next.transpose());
    }
    path
}

/// Responses of every draw, scaled so the policy rate moves by the target on
/// impact.
pub fn compute_irfs<'a, I>(draws: I, setup: &IrfSetup) -> Result<IrfSet>
where
    I: IntoIterator<Item = &'a VarParameters>,
{
    let r = setup.variables.len();
    let mut responses = Vec::new();
    for var in draws {
        if var.impact.nrows() < r || setup.shock >= var.impact.ncols() {
            return Err(Error::DimensionMismatch("impact matrix smaller than the variable list".into()));
        }
        let path = impulse_path(var, setup.shock, setup.horizon);
        let mut out = path.columns(0, r).into_owned();
        for j in 0..r {
            let unit = setup.unit(j);
            out.column_mut(j).scale_mut(unit);
        }
        let impact = out[(0, setup.policy_variable)];
        if impact == 0.0 || !impact.is_finite() {
            return Err(Error::ZeroImpact);
        }
        out.scale_mut(setup.target / impact);
        // Exact by construction, not just up to rounding.
        out[(0, setup.policy_variable)] = setup.target;
        responses.push(out);
    }
    if responses.is_empty() {
        return Err(Error::EmptyDraws);
    }
    Ok(IrfSet { setup: setup.clone(), responses, destandardized: true })
}

/// Per-draw `(H + 1) x (countries + 1)` responses of one panel, split into
/// the part running through the block factor and the part running through
/// the channels.
#[derive(Debug, Clone, PartialEq)]
pub struct CountryResponses {
    pub block: Block,
    pub total: Vec<DMatrix<f64>>,
    pub common: Vec<DMatrix<f64>>,
    pub channel: Vec<DMatrix<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountryIrf {
    pub output: CountryResponses,
    pub inflation: CountryResponses,
}

impl CountryIrf {
    pub fn block(&self, block: Block) -> &CountryResponses {
        match block {
            Block::Output => &self.output,
            Block::Inflation => &self.inflation,
        }
    }
}

/// Country responses implied by the factor and channel responses and the
/// loadings of the same draws.
pub fn decompose_country_responses(irf: &IrfSet, loadings: &[[FactorLoadings; 2]]) -> Result<CountryIrf> {
    if loadings.len() != irf.draws() {
        return Err(Error::DrawMismatch(alloc::format!("{} response draws, {} loading draws", irf.draws(), loadings.len())));
    }
    let mut blocks = Block::BOTH.map(|block| CountryResponses { block, total: Vec::new(), common: Vec::new(), channel: Vec::new() });
    for (draw, pair) in loadings.iter().enumerate() {
        let model = irf.model_scale(draw);
        let rows = model.nrows();
        let nz = model.ncols().saturating_sub(2);
        for (b, out) in blocks.iter_mut().enumerate() {
            let l = &pair[b];
            let countries = l.factor.nrows();
            if l.channel.ncols() != l.factor.ncols() * nz {
                return Err(Error::DimensionMismatch("channel loadings do not match the responses".into()));
            }
            let mut common = DMatrix::zeros(rows, countries);
            let mut channel = DMatrix::zeros(rows, countries);
            for i in 0..countries {
                for h in 0..rows {
                    for p in 0..l.factor.ncols().min(h + 1) {
                        common[(h, i)] += l.factor[(i, p)] * model[(h - p, b)];
                        for k in 0..nz {
                            channel[(h, i)] += l.channel[(i, p * nz + k)] * model[(h - p, 2 + k)];
                        }
                    }
                }
            }
            out.total.push(&common + &channel);
            out.common.push(common);
            out.channel.push(channel);
        }
    }
    let [output, inflation] = blocks;
    Ok(CountryIrf { output, inflation })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Benchmark {
    /// Cross-country mean response.
    CountryMean,
    /// Response of the euro-area aggregate (column 0).
    Aggregate,
}

/// Posterior median and 68% band of one statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub q16: f64,
    pub q50: f64,
    pub q84: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Self {
        let [q16, q50, q84] = stats::central_band(values);
        Band { q16, q50, q84 }
    }
}

/// Cross-country standard deviation over the absolute benchmark for one
/// draw's responses at one horizon; `responses[0]` is the aggregate.
pub fn dispersion_ratio(responses: &[f64], benchmark: Benchmark) -> Option<f64> {
    let countries = &responses[1..];
    let reference = match benchmark {
        Benchmark::CountryMean => stats::mean(countries),
        Benchmark::Aggregate => responses[0],
    };
    (reference != 0.0).then(|| stats::std_dev(countries) / reference.abs())
}

/// Coefficient of variation of country responses (columns `1..` of each
/// draw) at the given horizons, summarized over draws.
pub fn coefficient_of_variation(responses: &[DMatrix<f64>], horizons: &[usize], benchmark: Benchmark) -> Result<Vec<(usize, Band)>> {
    let first = responses.first().ok_or(Error::EmptyDraws)?;
    if first.ncols() < 3 {
        return Err(Error::InsufficientCountries { needed: 2, got: first.ncols().saturating_sub(1) });
    }
    let mut out = Vec::with_capacity(horizons.len());
    for &h in horizons {
        let mut values = Vec::with_capacity(responses.len());
        for draw in responses {
            if h >= draw.nrows() || draw.ncols() != first.ncols() {
                return Err(Error::DimensionMismatch(alloc::format!("horizon {h} or country count out of range")));
            }
            let row: Vec<f64> = draw.row(h).iter().copied().collect();
            values.push(dispersion_ratio(&row, benchmark).ok_or(Error::ZeroBenchmark(h))?);
        }
        out.push((h, Band::of(&values)));
    }
    Ok(out)
}

/// Fitted common component of one series and its R-squared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureFit {
    pub fitted: Vec<f64>,
    /// `1 - SSR/SST`, not clamped: a fit worse than the mean is negative.
    pub r_squared: f64,
}

/// Median over draws of `loading * factor_t`, compared with the series.
pub fn exposure_fit(series: &[f64], loading_draws: &[f64], factor_draws: &[Vec<f64>]) -> Result<ExposureFit> {
    if loading_draws.is_empty() {
        return Err(Error::EmptyDraws);
    }
    if loading_draws.len() != factor_draws.len() {
        return Err(Error::DrawMismatch(alloc::format!("{} loadings, {} factor paths", loading_draws.len(), factor_draws.len())));
    }
    if factor_draws.iter().any(|f| f.len() != series.len()) {
        return Err(Error::DimensionMismatch("factor paths and series differ in length".into()));
    }
    let fitted: Vec<f64> = (0..series.len())
        .map(|t| {
            let cell: Vec<f64> = loading_draws.iter().zip(factor_draws).map(|(l, f)| l * f[t]).collect();
            stats::quantile(&cell, 0.5)
        })
        .collect();
    let mean = stats::mean(series);
    let ssr: f64 = series.iter().zip(&fitted).map(|(x, f)| (x - f) * (x - f)).sum();
    let sst: f64 = series.iter().map(|x| (x - mean) * (x - mean)).sum();
    Ok(ExposureFit { fitted, r_squared: 1.0 - ssr / sst })
}

/// Horizon and value of the largest entry of the pointwise posterior median.
pub fn peak_of_median(paths: &[Vec<f64>]) -> Result<(usize, f64)> {
    let len = paths.first().ok_or(Error::EmptyDraws)?.len();
    let mut best = (0, f64::NEG_INFINITY);
    for h in 0..len {
        let cell: Vec<f64> = paths.iter().map(|p| p[h]).collect();
        let m = stats::quantile(&cell, 0.5);
        if m > best.1 {
            best = (h, m);
        }
    }
    Ok(best)
}

/// A correlation with its two-sided p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub r: f64,
    pub p_value: f64,
}

impl Correlation {
    fn with_df(r: f64, df: f64) -> Self {
        let t = if r.abs() >= 1.0 { f64::INFINITY } else { r * libm::sqrt(df / (1.0 - r * r)) };
        Correlation { r, p_value: student_t_two_sided_p(t, df) }
    }

    /// `***` below 0.01, `**` below 0.05, `*` below 0.1.
    pub fn stars(&self) -> &'static str {
        match self.p_value {
            p if p < 0.01 => "***",
            p if p < 0.05 => "**",
            p if p < 0.1 => "*",
            _ => "",
        }
    }
}

/// Peak responses per country, split as in [`CountryResponses`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakResponses {
    pub total: Vec<f64>,
    pub common: Vec<f64>,
    pub channel: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub characteristic: String,
    pub total: Correlation,
    pub common: Correlation,
    pub channel: Correlation,
    /// Characteristic against the channel peaks with the common peaks
    /// partialled out of the latter.
    pub semi_partial: Correlation,
}

/// Semi-partial correlation of `y` with `x` after removing `z` from `x`,
/// from the three pairwise correlations.
pub fn semi_partial(r_xy: f64, r_yz: f64, r_xz: f64) -> f64 {
    (r_xy - r_yz * r_xz) / libm::sqrt(1.0 - r_xz * r_xz)
}

/// Correlations of country characteristics with peak responses.
pub fn correlation_table(peaks: &PeakResponses, characteristics: &[(String, Vec<f64>)]) -> Result<Vec<CorrelationRow>> {
    let n = peaks.total.len();
    if n < 4 {
        return Err(Error::InsufficientCountries { needed: 4, got: n });
    }
    let all = [&peaks.total, &peaks.common, &peaks.channel];
    if all.iter().any(|v| v.len() != n) || characteristics.iter().any(|(_, c)| c.len() != n) {
        return Err(Error::DimensionMismatch("every column needs one value per country".into()));
    }
    if characteristics.iter().any(|(_, c)| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::InvalidInput("characteristics must be complete".into()));
    }
    let corr = |a: &[f64], b: &[f64], what: &str| {
        let r = stats::correlation(a, b);
        if r.is_finite() {
            Ok(r)
        } else {
            Err(Error::ZeroVariance(alloc::format!("{what} is constant across countries")))
        }
    };
    let r_xz = corr(&peaks.channel, &peaks.common, "a peak column")?;
    if r_xz.abs() >= 1.0 - 1e-12 {
        return Err(Error::PerfectCollinearity("channel and common peaks are collinear".into()));
    }
    let df = n as f64 - 2.0;
    characteristics
        .iter()
        .map(|(name, c)| {
            let r_total = corr(&peaks.total, c, name)?;
            let r_common = corr(&peaks.common, c, name)?;
            let r_channel = corr(&peaks.channel, c, name)?;
            Ok(CorrelationRow {
                characteristic: name.clone(),
                total: Correlation::with_df(r_total, df),
                common: Correlation::with_df(r_common, df),
                channel: Correlation::with_df(r_channel, df),
                semi_partial: Correlation::with_df(semi_partial(r_channel, r_common, r_xz), df - 1.0),
            })
        })
        .collect()
}

/// Quantiles of one cell; the band is always reported, `extra` holds any
/// additional requested levels in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub band: Band,
    pub extra: Vec<f64>,
}

pub fn summarize(values: &[f64], quantiles: &[f64]) -> Result<Summary> {
    if values.is_empty() {
        return Err(Error::EmptyDraws);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p| stats::quantile_sorted(&sorted, p);
    Ok(Summary {
        band: Band { q16: q(0.16), q50: q(0.5), q84: q(0.84) },
        extra: quantiles.iter().map(|&p| q(p)).collect(),
    })
}

/// Band of every variable and horizon of an [`IrfSet`], variable-major.
pub fn summarize_irfs(irf: &IrfSet) -> Vec<(usize, usize, Band)> {
    let mut out = Vec::new();
    for v in 0..irf.setup.variables.len() {
        for h in 0..=irf.setup.horizon {
            out.push((v, h, Band::of(&irf.cell(v, h))));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_var(a: f64, b: f64) -> VarParameters {
        VarParameters {
            coefficients: DMatrix::from_column_slice(2, 1, &[0.0, a]),
            impact: DMatrix::from_element(1, 1, b),
            kappa: [1.0, 1.0],
        }
    }

    fn scalar_setup(horizon: usize) -> IrfSetup {
        IrfSetup {
            variables: alloc::vec!["rate".into()],
            policy_variable: 0,
            target: POLICY_IMPACT_TARGET,
            horizon,
            shock: 0,
            channel_scale: Vec::new(),
        }
    }

    #[test]
    fn geometric_decay() {
        let irf = compute_irfs([&scalar_var(0.5, 1.3)], &scalar_setup(10)).unwrap();
        for h in 0..=10 {
            assert!((irf.responses[0][(h, 0)] + 0.25 * libm::pow(0.5, h as f64)).abs() < 1e-15);
        }
    }

    #[test]
    fn irf_errors() {
        let none: [&VarParameters; 0] = [];
        assert_eq!(compute_irfs(none, &scalar_setup(3)), Err(Error::EmptyDraws));
        assert_eq!(compute_irfs([&scalar_var(0.5, 0.0)], &scalar_setup(3)), Err(Error::ZeroImpact));
    }

    #[test]
    fn cov_small_cases() {
        let same = DMatrix::from_row_slice(1, 4, &[1.0, 2.0, 2.0, 2.0]);
        assert_eq!(coefficient_of_variation(&[same], &[0], Benchmark::CountryMean).unwrap()[0].1.q50, 0.0);
        let spread = DMatrix::from_row_slice(1, 4, &[9.0, 1.0, 2.0, 3.0]);
        let v = coefficient_of_variation(core::slice::from_ref(&spread), &[0], Benchmark::CountryMean).unwrap();
        assert!((v[0].1.q50 - 0.5).abs() < 1e-15);
        let v = coefficient_of_variation(&[spread], &[0], Benchmark::Aggregate).unwrap();
        assert!((v[0].1.q50 - 1.0 / 9.0).abs() < 1e-15);
        let zero = DMatrix::from_row_slice(1, 4, &[0.0, -1.0, 0.0, 1.0]);
        assert_eq!(coefficient_of_variation(&[zero], &[0], Benchmark::CountryMean), Err(Error::ZeroBenchmark(0)));
    }

    #[test]
    fn summary_cases() {
        assert_eq!(summarize(&[3.0, 1.0, 2.0], &[]).unwrap().band.q50, 2.0);
        let s = summarize(&[4.0; 5], &[0.05, 0.95]).unwrap();
        assert_eq!((s.band.q16, s.band.q84, s.extra.clone()), (4.0, 4.0, alloc::vec![4.0, 4.0]));
    }

    #[test]
    fn perfect_correlation_gets_three_stars() {
        let x = alloc::vec![1.0, 2.0, 4.0, 3.0, 6.0];
        let peaks = PeakResponses { total: x.clone(), common: alloc::vec![0.3, 0.1, 0.5, 0.2, 0.2], channel: x.clone() };
        let rows = correlation_table(&peaks, &[("x".into(), x)]).unwrap();
        assert!((rows[0].total.r - 1.0).abs() < 1e-12);
        assert_eq!(rows[0].total.stars(), "***");
    }
}
