use favar_core::gibbs::Sampler;
use favar_core::model::{
    initialize_state, simulate_dgp, validate_spec, McmcSettings, ModelSpec, Priors, Sign, SignRestriction, TrueParameters,
};
use favar_core::{stats, Error};
use nalgebra::DMatrix;

fn small_spec() -> ModelSpec {
    let mut spec = ModelSpec::baseline(2, vec!["policy_rate".into()]);
    spec.var_lags = 2;
    spec.mcmc = McmcSettings { total_iterations: 200, burn_in: 100, thinning: 2 };
    spec
}

fn invalid(result: Result<favar_core::model::Model, Error>) -> Vec<Error> {
    match result {
        Err(Error::Invalid(errors)) => errors,
        other => panic!("expected a validation failure, got {other:?}"),
    }
}

#[test]
fn baseline_bundle_validates() {
    let spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 1).unwrap();
    let model = validate_spec(&spec, &sim.data, &Priors::default()).unwrap();
    // Factors are growth rates, channels start from a random walk.
    assert_eq!(model.svar.own_lag_mean, vec![0.0, 0.0, 1.0]);
}

#[test]
fn burn_in_must_leave_draws() {
    let mut spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 1).unwrap();
    spec.mcmc.burn_in = spec.mcmc.total_iterations;
    let errors = invalid(validate_spec(&spec, &sim.data, &Priors::default()));
    assert!(errors.iter().any(|e| matches!(e, Error::InvalidMcmcSettings(_))));
}

#[test]
fn sign_on_instrument_row_is_rejected() {
    let mut spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 1).unwrap();
    // Variable 3 is the instrument, whose rows outside its own shocks are zero.
    spec.sign_restrictions.push(SignRestriction { variable: 3, sign: Sign::Positive });
    let errors = invalid(validate_spec(&spec, &sim.data, &Priors::default()));
    assert!(errors.iter().any(|e| matches!(e, Error::InvalidRestriction(_))));
}

#[test]
fn explosive_truth_is_rejected() {
    let spec = small_spec();
    let mut truth = TrueParameters::example(&spec);
    truth.var.coefficients[(1, 0)] = 1.2;
    assert!(matches!(simulate_dgp(&spec, &truth, 50, 1), Err(Error::ExplosiveVar(r)) if r > 1.0));
}

#[test]
fn white_noise_reduction() {
    let spec = small_spec();
    let d = spec.dims();
    let mut truth = TrueParameters::example(&spec);
    truth.var.coefficients.fill(0.0);
    truth.var.impact = DMatrix::identity(d.system, d.system);
    truth.volatility_innovation_sd = 0.0;
    let sim = simulate_dgp(&spec, &truth, 2000, 3).unwrap();
    for t in 0..2000 {
        assert_eq!(sim.factors[(t, 0)], sim.shocks[(t, 0)]);
        assert_eq!(sim.factors[(t, 1)], sim.shocks[(t, 1)]);
        assert_eq!(sim.data.channels[(t, 0)], sim.shocks[(t, 2)]);
    }
    for path in &sim.log_volatility {
        assert!(path.iter().all(|h| *h == path[0]));
    }
}

#[test]
fn noiseless_instrument_is_the_scaled_shock() {
    let spec = small_spec();
    let r = spec.dims().endogenous;
    let mut truth = TrueParameters::example(&spec);
    truth.var.impact[(r, r)] = 0.0;
    let sim = simulate_dgp(&spec, &truth, 300, 4).unwrap();
    let m: Vec<f64> = sim.data.instruments.column(0).iter().copied().collect();
    let eps: Vec<f64> = sim.shocks.column(0).iter().copied().collect();
    for t in 0..300 {
        assert_eq!(m[t], truth.var.impact[(r, 0)] * eps[t]);
    }
    assert!((stats::correlation(&m, &eps) - 1.0).abs() < 1e-12);
}

#[test]
fn simulated_shocks_have_identity_covariance() {
    let spec = small_spec();
    let n = spec.dims().system;
    let periods = 1_000_000;
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), periods, 5).unwrap();
    let t = periods as f64;
    for a in 0..n {
        for b in a..n {
            let products: Vec<f64> = (0..periods).map(|s| sim.shocks[(s, a)] * sim.shocks[(s, b)]).collect();
            let target = if a == b { 1.0 } else { 0.0 };
            // Var(e_a e_b) is 2 on the diagonal and 1 off it.
            let se = (if a == b { 2.0 } else { 1.0 } / t).sqrt();
            assert!((stats::mean(&products) - target).abs() < 3.0 * se, "entry ({a}, {b})");
        }
    }
}

#[test]
fn default_sample_spans_2003_to_2023() {
    let spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 252, 1).unwrap();
    assert_eq!(sim.data.dates.first().unwrap().label(), "2003-01");
    assert_eq!(sim.data.dates.last().unwrap().label(), "2023-12");
}

#[test]
fn initial_log_volatility_adds_one_to_log_variance() {
    let spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 6).unwrap();
    let model = validate_spec(&spec, &sim.data, &Priors::default()).unwrap();
    let state = initialize_state(&model).unwrap();
    let n = spec.dims().series_per_block;
    for (b, panel) in [&sim.data.output, &sim.data.inflation].into_iter().enumerate() {
        for i in 0..n {
            let col: Vec<f64> = panel.column(i).iter().copied().collect();
            let expected = stats::variance(&col).ln() + 1.0;
            assert!((state.volatility[b * n + i].initial - expected).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_series_cannot_start() {
    let spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 7).unwrap();
    let mut model = validate_spec(&spec, &sim.data, &Priors::default()).unwrap();
    model.data.output.column_mut(1).fill(2.0);
    assert!(matches!(initialize_state(&model), Err(Error::DegenerateData(_))));
}

#[test]
fn same_seed_gives_identical_states() {
    let spec = small_spec();
    let sim = simulate_dgp(&spec, &TrueParameters::example(&spec), 120, 8).unwrap();
    let model = validate_spec(&spec, &sim.data, &Priors::default()).unwrap();
    let mut a = Sampler::new(&model, 42).unwrap();
    let mut b = Sampler::new(&model, 42).unwrap();
    assert_eq!(a.state, b.state);
    for _ in 0..5 {
        a.sweep().unwrap();
        b.sweep().unwrap();
    }
    assert_eq!(a.state, b.state);
    let mut c = Sampler::new(&model, 43).unwrap();
    c.sweep().unwrap();
    assert_ne!(a.state.factors, c.state.factors);
}
