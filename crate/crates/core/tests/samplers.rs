use favar_core::factor::state_space::StateSpace;
use favar_core::model::{ImpactPattern, Restriction, ScaleProposal, VarParameters};
use favar_core::svar::{
    compute_minnesota_scales, sample_impact_matrix, sample_shrinkage, sample_var_coefficients, shrinkage_statistics,
    ImpactDiagnostics, SvarLayout,
};
use favar_core::Error;
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Monte Carlo standard error of a mean from 100 batch means.
fn batch_se(x: &[f64]) -> f64 {
    let size = x.len() / 100;
    let means: Vec<f64> = x.chunks_exact(size).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let m = means.iter().sum::<f64>() / means.len() as f64;
    let var = means.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / (means.len() as f64 - 1.0);
    (var / means.len() as f64).sqrt()
}

fn layout(system: usize, lags: usize, pattern: ImpactPattern) -> SvarLayout {
    SvarLayout {
        system,
        endogenous: system,
        lags,
        own_lag_mean: vec![0.0; system],
        constant_variance: 100.0,
        kappa_max: 10.0,
        pattern,
        scale_proposal: ScaleProposal::FullConditional,
    }
}

#[test]
fn minnesota_scales_of_known_processes() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let t = 5000;
    let mut y = DMatrix::zeros(t, 2);
    y[(0, 1)] = 1.0;
    for s in 0..t {
        y[(s, 0)] = 2.0f64.sqrt() * normal(&mut rng);
        if s > 0 {
            y[(s, 1)] = 0.5 + 0.8 * y[(s - 1, 1)];
        }
    }
    let scales = compute_minnesota_scales(&y, 1).unwrap();
    assert!((scales[0] / 2.0 - 1.0).abs() < 0.1);
    assert!(scales[1] < 1e-10);
    assert!(compute_minnesota_scales(&y, 0).is_err());
}

#[test]
fn dogmatic_prior_pins_the_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut l = layout(2, 2, ImpactPattern::new(2));
    l.own_lag_mean = vec![0.0, 1.0];
    l.constant_variance = 1e-14;
    let y = DMatrix::from_fn(200, 2, |_, _| normal(&mut rng));
    let mut var = VarParameters { coefficients: DMatrix::zeros(5, 2), impact: DMatrix::identity(2, 2), kappa: [1e-14, 1e-14] };
    for _ in 0..20 {
        sample_var_coefficients(&mut rng, &y, &l, &mut var, &[1.0, 1.0]).unwrap();
        for row in 0..5 {
            for i in 0..2 {
                let prior_mean = if i == 1 && row == l.lag_row(1, 1) { 1.0 } else { 0.0 };
                assert!((var.coefficients[(row, i)] - prior_mean).abs() < 1e-5);
            }
        }
    }
}

#[test]
fn shrinkage_statistics_by_hand() {
    let mut l = layout(2, 1, ImpactPattern::new(2));
    l.own_lag_mean = vec![0.0, 1.0];
    let coefficients = DMatrix::from_row_slice(3, 2, &[0.0, 0.0, 0.5, -0.3, 0.2, 0.9]);
    let (s1, s2) = shrinkage_statistics(&l, &coefficients, [0.5, 2.0], &[1.0, 4.0]);
    // Own: 0.5^2 + 0.1^2. Cross: 4 * 0.2^2 + 0.3^2 / 4.
    assert!((s1 - (0.26 + 0.1825 / 2.0)).abs() < 1e-15);
    assert!((s2 - 0.1825 / 0.5).abs() < 1e-15);

    // Two variables with one lag leave the cross-term shape at zero.
    let mut kappa = [1.0, 1.0];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let result = sample_shrinkage(&mut rng, &l, &coefficients, &mut kappa, &[1.0, 4.0]);
    assert!(matches!(result, Err(Error::NonPositiveShape(s)) if s == 0.0));
}

#[test]
fn scalar_impact_matches_numerical_posterior() {
    let (mean, variance) = (0.5, 0.3);
    let mut pattern = ImpactPattern::new(1);
    pattern.set(0, 0, Restriction::Positive, mean, variance);
    let l = layout(1, 1, pattern);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y = DMatrix::from_fn(41, 1, |_, _| 1.3 * normal(&mut rng));
    let sum_sq: f64 = y.rows(1, 40).iter().map(|v| v * v).sum();

    // Density of b > 0 proportional to b^-T exp(-S / 2b^2) times the prior.
    let log_target = |b: f64| -40.0 * b.ln() - sum_sq / (2.0 * b * b) - (b - mean) * (b - mean) / (2.0 * variance);
    let step = 1e-4;
    let grid: Vec<f64> = (1..60_000).map(|k| k as f64 * step).collect();
    let peak = grid.iter().map(|&b| log_target(b)).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = grid.iter().map(|&b| (log_target(b) - peak).exp()).collect();
    let total: f64 = weights.iter().sum();
    let exact_mean = grid.iter().zip(&weights).map(|(b, w)| b * w).sum::<f64>() / total;
    let exact_second = grid.iter().zip(&weights).map(|(b, w)| b * b * w).sum::<f64>() / total;

    let mut var = VarParameters { coefficients: DMatrix::zeros(2, 1), impact: DMatrix::identity(1, 1), kappa: [1.0, 1.0] };
    let mut diagnostics = ImpactDiagnostics::default();
    let draws: Vec<f64> = (0..40_000)
        .map(|_| {
            sample_impact_matrix(&mut rng, &y, &l, &mut var, &mut diagnostics).unwrap();
            var.impact[(0, 0)]
        })
        .collect();
    assert!(draws.iter().all(|b| *b > 0.0));
    let first: f64 = draws.iter().sum::<f64>() / draws.len() as f64;
    let squares: Vec<f64> = draws.iter().map(|b| b * b).collect();
    let second = squares.iter().sum::<f64>() / squares.len() as f64;
    assert!((first - exact_mean).abs() < 3.0 * batch_se(&draws), "mean {first} vs {exact_mean}");
    assert!((second - exact_second).abs() < 3.0 * batch_se(&squares), "second moment {second} vs {exact_second}");
}

#[test]
fn two_variable_impact_is_recovered() {
    let truth = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let t = 500;
    let mut y = DMatrix::zeros(t, 2);
    for s in 1..t {
        let e = DVector::from_fn(2, |_, _| normal(&mut rng));
        let u = &truth * e;
        for j in 0..2 {
            y[(s, j)] = 0.3 * y[(s - 1, j)] + u[j];
        }
    }
    let mut pattern = ImpactPattern::new(2);
    pattern.set(0, 0, Restriction::Positive, 0.0, 1.0);
    pattern.set(1, 0, Restriction::Positive, 0.0, 1.0);
    pattern.set(1, 1, Restriction::Positive, 0.0, 1.0);
    let l = layout(2, 1, pattern);
    let scale = compute_minnesota_scales(&y, 1).unwrap();
    let mut var = VarParameters { coefficients: DMatrix::zeros(3, 2), impact: l.pattern.starting_matrix(), kappa: [1.0, 1.0] };
    let mut diagnostics = ImpactDiagnostics::default();
    let mut sum = DMatrix::zeros(2, 2);
    let (burn_in, sweeps) = (1000, 10_000);
    for k in 0..sweeps {
        sample_var_coefficients(&mut rng, &y, &l, &mut var, &scale).unwrap();
        sample_impact_matrix(&mut rng, &y, &l, &mut var, &mut diagnostics).unwrap();
        assert!(l.pattern.admits(&var.impact));
        if k >= burn_in {
            sum += &var.impact;
        }
    }
    let posterior_mean = sum / (sweeps - burn_in) as f64;
    for (a, b) in posterior_mean.iter().zip(truth.iter()) {
        assert!((a - b).abs() < 0.1, "posterior mean {posterior_mean} vs {truth}");
    }
}

#[test]
fn noiseless_square_observation_pins_the_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let t = 6;
    let observation = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]);
    let data = DMatrix::from_fn(t, 2, |_, _| normal(&mut rng));
    let ss = StateSpace {
        block_size: 2,
        blocks: 1,
        observation: observation.clone(),
        transition: DMatrix::from_row_slice(2, 2, &[0.5, 0.1, 0.0, 0.3]),
        intercepts: DMatrix::zeros(t, 2),
        innovation_covariance: DMatrix::identity(2, 2),
        noise_variance: DMatrix::from_element(t, 2, 1e-12),
        data: data.clone(),
        exact_rows: vec![None, None],
        start: 0,
        prior_mean: DVector::zeros(2),
        prior_covariance: DMatrix::identity(2, 2),
    };
    let filtered = ss.filter().unwrap();
    let inverse = observation.try_inverse().unwrap();
    for s in 0..t {
        let expected = &inverse * data.row(s).transpose();
        assert!((&filtered.means[s] - expected).amax() < 1e-6, "period {s}");
    }
}
