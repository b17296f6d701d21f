use favar_core::analysis::{coefficient_of_variation, compute_irfs, Benchmark, IrfSetup, POLICY_IMPACT_TARGET};
use favar_core::calendar::{Day, Month};
use favar_core::instrument::{build_rotational_instrument, AnnouncementPanel};
use favar_core::model::{ChannelScale, ModelSpec, VarParameters};
use favar_core::pipeline::{annual_growth, destandardize_z, standardize_z, GrowthMethod, RawSeries};
use nalgebra::DMatrix;
use proptest::collection::vec;
use proptest::prelude::*;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn matrix(rows: usize, cols: usize, lo: f64, hi: f64) -> impl Strategy<Value = DMatrix<f64>> {
    vec(lo..hi, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

fn three_variable_var() -> impl Strategy<Value = VarParameters> {
    (matrix(4, 3, -0.3, 0.3), matrix(3, 3, -1.0, 1.0), 0.2f64..2.0).prop_map(|(coefficients, mut impact, policy)| {
        impact[(2, 0)] = policy;
        VarParameters { coefficients, impact, kappa: [1.0, 1.0] }
    })
}

fn setup() -> IrfSetup {
    let spec = ModelSpec::baseline(2, vec!["policy_rate".into()]);
    let mut s = IrfSetup::new(&spec, vec![ChannelScale { mean: 1.0, std_dev: 0.7 }]);
    s.horizon = 12;
    s
}

fn day(k: usize) -> Day {
    Day::parse(&format!("{}-{:02}-10", 2001 + k / 12, k % 12 + 1)).unwrap()
}

proptest! {
    #[test]
    fn standardize_round_trip(block in matrix(20, 3, -50.0, 50.0)) {
        let (z, scales) = standardize_z(&block).unwrap();
        let back = destandardize_z(&z, &scales);
        for (a, b) in block.iter().zip(back.iter()) {
            prop_assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn growth_methods_agree_to_first_order(levels in vec(50.0f64..150.0, 13..40), ratios in vec(0.98f64..1.02, 40)) {
        // Each value is a small move away from the one twelve months earlier.
        let mut x = levels.clone();
        for t in 12..x.len() {
            x[t] = x[t - 12] * ratios[t];
        }
        let start = Month::new(2005, 1).unwrap();
        let series = RawSeries::monthly("x", start, x.clone());
        let standard = annual_growth(&series, GrowthMethod::Standard).unwrap().values;
        let log = annual_growth(&series, GrowthMethod::Log).unwrap().values;
        let symmetric = annual_growth(&series, GrowthMethod::Symmetric).unwrap().values;
        for k in 0..standard.len() {
            let g = ratios[k + 12] - 1.0;
            prop_assert!((standard[k] - log[k]).abs() <= 100.0 * g * g + 1e-12);
            prop_assert!((symmetric[k] - log[k]).abs() <= 100.0 * g * g + 1e-12);
        }
    }

    #[test]
    fn responses_ignore_shock_scale(var in three_variable_var(), c in prop_oneof![-5.0f64..-0.1, 0.1f64..5.0]) {
        let setup = setup();
        let base = compute_irfs([&var], &setup).unwrap();
        let mut scaled = var.clone();
        scaled.impact.column_mut(0).scale_mut(c);
        let again = compute_irfs([&scaled], &setup).unwrap();
        prop_assert_eq!(base.responses[0][(0, 2)], POLICY_IMPACT_TARGET);
        for (a, b) in base.responses[0].iter().zip(again.responses[0].iter()) {
            prop_assert!(close(*a, *b, 1e-10));
        }
    }

    #[test]
    fn dispersion_ignores_response_scale(
        draws in vec(matrix(3, 5, 0.5, 2.0), 3..12),
        c in prop_oneof![-4.0f64..-0.2, 0.2f64..4.0],
    ) {
        let scaled: Vec<DMatrix<f64>> = draws.iter().map(|d| d * c).collect();
        for benchmark in [Benchmark::CountryMean, Benchmark::Aggregate] {
            let a = coefficient_of_variation(&draws, &[0, 1, 2], benchmark).unwrap();
            let b = coefficient_of_variation(&scaled, &[0, 1, 2], benchmark).unwrap();
            for ((_, x), (_, y)) in a.iter().zip(&b) {
                prop_assert!(close(x.q16, y.q16, 1e-12) && close(x.q50, y.q50, 1e-12) && close(x.q84, y.q84, 1e-12));
            }
        }
    }

    #[test]
    fn instrument_parts_add_up_and_follow_event_order(
        level in vec(-1.0f64..1.0, 8..30),
        noise in vec(-0.3f64..0.3, 120),
        stock_noise in vec(-1.0f64..1.0, 30),
        shift in 1usize..7,
    ) {
        let n = level.len();
        let ois = DMatrix::from_fn(n, 4, |t, j| 0.05 * (level[t] * (1.0 - 0.1 * j as f64) + noise[4 * t + j]));
        let stock: Vec<f64> = (0..n).map(|t| -0.4 * level[t] + stock_noise[t]).collect();
        let panel = AnnouncementPanel::new((0..n).map(day).collect(), ois.clone(), stock.clone());
        let pair = build_rotational_instrument(&panel).unwrap();
        for t in 0..n {
            prop_assert!((pair.m[t] + pair.cbi[t] - pair.principal_component[t]).abs() <= 1e-10);
        }

        let order: Vec<usize> = (0..n).map(|k| (k + shift) % n).collect();
        let permuted = AnnouncementPanel::new(
            order.iter().map(|&k| day(k)).collect(),
            DMatrix::from_fn(n, 4, |a, j| ois[(order[a], j)]),
            order.iter().map(|&k| stock[k]).collect(),
        );
        let again = build_rotational_instrument(&permuted).unwrap();
        prop_assert!((again.gamma - pair.gamma).abs() <= 1e-12);
        for (a, &k) in order.iter().enumerate() {
            prop_assert!((again.m[a] - pair.m[k]).abs() <= 1e-10);
            prop_assert!((again.cbi[a] - pair.cbi[k]).abs() <= 1e-10);
        }
    }

    #[test]
    fn parameters_survive_json(var in three_variable_var(), kappa in (0.001f64..10.0, 0.001f64..10.0)) {
        let mut var = var;
        var.kappa = [kappa.0, kappa.1];
        let text = serde_json::to_string(&var).unwrap();
        let back: VarParameters = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, var);
    }
}

#[test]
fn specification_survives_json() {
    let spec = ModelSpec::baseline(4, vec!["policy_rate".into(), "spread".into()]);
    let text = serde_json::to_string(&spec).unwrap();
    let back: ModelSpec = serde_json::from_str(&text).unwrap();
    assert_eq!(back, spec);
}
