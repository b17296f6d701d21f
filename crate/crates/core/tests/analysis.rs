use favar_core::analysis::{
    correlation_table, decompose_country_responses, exposure_fit, impulse_path, semi_partial, summarize, IrfSet, IrfSetup,
    PeakResponses,
};
use favar_core::model::{FactorLoadings, VarParameters};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

fn setup(variables: usize, horizon: usize) -> IrfSetup {
    IrfSetup {
        variables: (0..variables).map(|k| format!("v{k}")).collect(),
        policy_variable: variables - 1,
        target: -0.25,
        horizon,
        shock: 0,
        channel_scale: Vec::new(),
    }
}

#[test]
fn impulse_path_is_the_difference_of_two_simulations() {
    let n = 3;
    let lags = 2;
    let mut coefficients = DMatrix::zeros(1 + n * lags, n);
    let values = [0.5, -0.1, 0.2, 0.1, 0.3, 0.05, -0.2, 0.1, 0.4, 0.1, 0.0, -0.1, 0.05, 0.1, 0.0, -0.05, 0.1, 0.1];
    for (k, v) in values.iter().enumerate() {
        coefficients[(1 + k / n, k % n)] = *v;
    }
    coefficients.row_mut(0).copy_from_slice(&[0.3, -0.2, 0.1]);
    let impact = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.4, 0.9, 0.0, -0.3, 0.2, 0.7]);
    let var = VarParameters { coefficients, impact, kappa: [1.0, 1.0] };

    let periods = 40;
    let start = 10;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let shocks: Vec<DVector<f64>> =
        (0..periods).map(|_| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))).collect();
    let simulate = |extra: f64| {
        let mut y = vec![DVector::zeros(n); periods];
        for t in lags..periods {
            let mut next = DVector::from_fn(n, |j, _| var.coefficients[(0, j)]);
            for l in 1..=lags {
                for j in 0..n {
                    for i in 0..n {
                        next[j] += var.coefficients[(1 + (l - 1) * n + i, j)] * y[t - l][i];
                    }
                }
            }
            let mut e = shocks[t].clone();
            if t == start {
                e[0] += extra;
            }
            y[t] = next + &var.impact * e;
        }
        y
    };
    let base = simulate(0.0);
    let hit = simulate(1.0);
    let path = impulse_path(&var, 0, periods - start - 1);
    for h in 0..periods - start {
        for j in 0..n {
            let diff = hit[start + h][j] - base[start + h][j];
            assert!((diff - path[(h, j)]).abs() < 1e-10, "h {h}, variable {j}");
        }
    }
}

fn unscaled_set(factor_path: &[[f64; 2]]) -> IrfSet {
    let rows = factor_path.len();
    let responses = DMatrix::from_fn(rows, 3, |h, j| if j < 2 { factor_path[h][j] } else { 0.1 * h as f64 });
    IrfSet { setup: setup(3, rows - 1), responses: vec![responses], destandardized: false }
}

fn loadings(factor: DMatrix<f64>, channel: DMatrix<f64>) -> [FactorLoadings; 2] {
    let f = FactorLoadings { factor, channel };
    [f.clone(), f]
}

#[test]
fn muted_channels_leave_only_the_common_part() {
    let irf = unscaled_set(&[[1.0, 0.3], [0.5, 0.2], [0.25, 0.1]]);
    let l = loadings(DMatrix::from_column_slice(2, 1, &[1.0, 2.0]), DMatrix::zeros(2, 1));
    let out = decompose_country_responses(&irf, &[l]).unwrap();
    let output = &out.output;
    for h in 0..3 {
        // Unit loading reproduces the factor response, a loading of two doubles it.
        assert_eq!(output.common[0][(h, 0)], irf.responses[0][(h, 0)]);
        assert_eq!(output.common[0][(h, 1)], 2.0 * irf.responses[0][(h, 0)]);
        assert_eq!(output.channel[0][(h, 1)], 0.0);
        assert_eq!(output.total[0][(h, 1)], output.common[0][(h, 1)]);
        assert_eq!(out.inflation.common[0][(h, 1)], 2.0 * irf.responses[0][(h, 1)]);
    }
    assert_eq!(output.common[0][(0, 1)], 2.0);
    assert_eq!(output.common[0][(1, 1)], 1.0);
}

#[test]
fn lagged_loadings_and_channels_add_up() {
    let irf = unscaled_set(&[[1.0, 0.0], [0.5, 0.0], [0.25, 0.0]]);
    let l = loadings(DMatrix::from_row_slice(1, 2, &[1.0, 0.5]), DMatrix::from_row_slice(1, 2, &[2.0, -1.0]));
    let out = decompose_country_responses(&irf, &[l]).unwrap();
    let expected_common = [1.0, 0.5 + 0.5, 0.25 + 0.25];
    let expected_channel = [0.0, 0.2, 0.4 - 0.1];
    for h in 0..3 {
        assert!((out.output.common[0][(h, 0)] - expected_common[h]).abs() < 1e-15);
        assert!((out.output.channel[0][(h, 0)] - expected_channel[h]).abs() < 1e-15);
        assert!((out.output.total[0][(h, 0)] - expected_common[h] - expected_channel[h]).abs() < 1e-15);
    }
}

#[test]
fn exposure_of_an_exact_factor_model_is_complete() {
    let factor: Vec<f64> = (0..30).map(|t| (t as f64 * 0.7).sin()).collect();
    let series: Vec<f64> = factor.iter().map(|f| 1.5 * f).collect();
    let fit = exposure_fit(&series, &[1.5, 1.5, 1.5], &vec![factor.clone(); 3]).unwrap();
    assert!((fit.r_squared - 1.0).abs() < 1e-12);

    // Zero-mean series orthogonal to the factor.
    let orthogonal: Vec<f64> = (0..30).map(|t| if t % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let flat: Vec<f64> = vec![0.0; 30];
    let step: Vec<f64> = (0..30).map(|t| if t < 15 { 1.0 } else { -1.0 }).collect();
    assert!(exposure_fit(&orthogonal, &[1.0], &[flat]).unwrap().r_squared <= 0.0);
    assert!(exposure_fit(&orthogonal, &[0.8], &[step]).unwrap().r_squared <= 0.0);
}

#[test]
fn correlations_match_direct_formulas() {
    let common = vec![0.9, 1.4, -0.2, 0.3, 1.1, 0.6, -0.5, 0.8, 1.9, 0.1];
    let channel = vec![0.2, -0.4, 0.7, 0.1, -0.3, 0.5, 0.9, -0.1, 0.0, 0.4];
    let total: Vec<f64> = common.iter().zip(&channel).map(|(a, b)| a + b).collect();
    let openness = vec![3.0, 1.0, 4.0, 1.5, 5.0, 9.0, 2.0, 6.0, 5.5, 3.5];
    let peaks = PeakResponses { total: total.clone(), common: common.clone(), channel: channel.clone() };
    let rows = correlation_table(&peaks, &[("openness".into(), openness.clone())]).unwrap();
    let row = &rows[0];
    assert!((row.total.r - pearson(&total, &openness)).abs() < 1e-12);
    assert!((row.common.r - pearson(&common, &openness)).abs() < 1e-12);
    assert!((row.channel.r - pearson(&channel, &openness)).abs() < 1e-12);

    // Semi-partial: correlation with the part of the channel peaks that the
    // common peaks do not explain.
    let (mc, mz) = (common.iter().sum::<f64>() / 10.0, channel.iter().sum::<f64>() / 10.0);
    let slope = common.iter().zip(&channel).map(|(c, z)| (c - mc) * (z - mz)).sum::<f64>()
        / common.iter().map(|c| (c - mc) * (c - mc)).sum::<f64>();
    let residual: Vec<f64> = common.iter().zip(&channel).map(|(c, z)| z - mz - slope * (c - mc)).collect();
    assert!((row.semi_partial.r - pearson(&residual, &openness)).abs() < 1e-12);
    assert!(row.total.p_value > 0.0 && row.total.p_value < 1.0);
}

#[test]
fn semi_partial_with_orthogonal_control_is_pearson() {
    let channel = vec![1.0, 2.0, 3.0, 4.0];
    let common = vec![1.0, -1.0, -1.0, 1.0];
    assert_eq!(pearson(&channel, &common), 0.0);
    let characteristic = vec![2.0, 0.5, 3.5, 1.0];
    let total: Vec<f64> = channel.iter().zip(&common).map(|(a, b)| a + b).collect();
    let peaks = PeakResponses { total, common, channel: channel.clone() };
    let row = &correlation_table(&peaks, &[("c".into(), characteristic)]).unwrap()[0];
    assert_eq!(row.semi_partial.r, row.channel.r);
    assert_eq!(semi_partial(0.3, 0.8, 0.0), 0.3);
}

#[test]
fn too_few_countries_are_rejected() {
    let peaks = PeakResponses { total: vec![1.0, 2.0, 3.0], common: vec![1.0, 0.0, 1.0], channel: vec![0.0, 2.0, 2.0] };
    assert!(correlation_table(&peaks, &[("c".into(), vec![1.0, 2.0, 0.0])]).is_err());
}

#[test]
fn summaries_of_simple_samples() {
    let s = summarize(&[3.0, 1.0, 2.0], &[]).unwrap();
    assert_eq!(s.band.q50, 2.0);
    let c = summarize(&[4.0; 7], &[0.05, 0.95]).unwrap();
    assert_eq!((c.band.q16, c.band.q50, c.band.q84), (4.0, 4.0, 4.0));
    assert_eq!(c.extra, vec![4.0, 4.0]);
    assert!(summarize(&[], &[]).is_err());
}

#[test]
fn normal_sample_band_matches_normal_quantiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let draws: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let s = summarize(&draws, &[]).unwrap();
    assert!((s.band.q16 + 0.9945).abs() < 0.01);
    assert!((s.band.q84 - 0.9945).abs() < 0.01);
    assert!(s.band.q50.abs() < 0.01);
}
