use alloc::vec::Vec;

use super::{DataSet, ImpactPattern, Model, ModelSpec, Priors};
use crate::error::{Error, Result};
use crate::svar::SvarLayout;

/// Check a specification against data and priors. All violations are
/// collected and returned together as [`Error::Invalid`].
pub fn validate_spec(spec: &ModelSpec, data: &DataSet, priors: &Priors) -> Result<Model> {
    let mut errors = Vec::new();
    let d = spec.dims();
    let t = data.periods();

    if spec.country_count == 0 {
        errors.push(Error::InsufficientCountries { needed: 1, got: 0 });
    }
    if d.channels == 0 {
        errors.push(Error::DimensionMismatch("at least one channel variable (the policy rate) is required".into()));
    } else if spec.policy_rate_index >= d.channels {
        errors.push(Error::DimensionMismatch(alloc::format!(
            "policy rate index {} but only {} channel variables",
            spec.policy_rate_index, d.channels
        )));
    }
    if d.instruments > d.endogenous {
        errors.push(Error::DimensionMismatch(alloc::format!(
            "{} instruments but only {} structural shocks",
            d.instruments, d.endogenous
        )));
    }
    if spec.var_lags == 0 {
        errors.push(Error::DimensionMismatch("the VAR needs at least one lag".into()));
    }
    let needed = (2 * spec.var_lags + 2).max(spec.factor_lags + 2);
    if t < needed {
        errors.push(Error::DimensionMismatch(alloc::format!("{t} periods but at least {needed} are needed")));
    }
    let shapes = [
        ("output panel", data.output.shape(), (t, d.series_per_block)),
        ("inflation panel", data.inflation.shape(), (t, d.series_per_block)),
        ("channels", data.channels.shape(), (t, d.channels)),
        ("instruments", data.instruments.shape(), (t, d.instruments)),
    ];
    let mut shapes_ok = true;
    for (name, got, want) in shapes {
        if got != want {
            shapes_ok = false;
            errors.push(Error::DimensionMismatch(alloc::format!(
                "{name} is {}x{} but {}x{} is required",
                got.0, got.1, want.0, want.1
            )));
        }
    }
    if data.series_names.len() != d.series_per_block && !data.series_names.is_empty() {
        errors.push(Error::DimensionMismatch(alloc::format!(
            "{} series names for {} series",
            data.series_names.len(),
            d.series_per_block
        )));
    }
    if data.channel_scale.len() != d.channels {
        errors.push(Error::DimensionMismatch("one channel scaling entry per channel is required".into()));
    }
    if shapes_ok {
        for (name, m) in [("output", &data.output), ("inflation", &data.inflation), ("channel", &data.channels), ("instrument", &data.instruments)] {
            for j in 0..m.ncols() {
                let col: Vec<f64> = m.column(j).iter().copied().collect();
                if col.iter().any(|v| !v.is_finite()) {
                    errors.push(Error::DegenerateData(alloc::format!("{name} column {j} has missing or non-finite values")));
                } else if t > 1 && crate::stats::variance(&col) <= 0.0 {
                    errors.push(Error::DegenerateData(alloc::format!("{name} column {j} is constant")));
                }
            }
        }
    }

    let m = &spec.mcmc;
    if m.thinning == 0 {
        errors.push(Error::InvalidMcmcSettings("thinning must be at least 1".into()));
    } else if m.burn_in >= m.total_iterations || m.retained() == 0 {
        errors.push(Error::InvalidMcmcSettings(alloc::format!(
            "{} iterations with burn-in {} and thinning {} retain no draws",
            m.total_iterations, m.burn_in, m.thinning
        )));
    }

    for (name, v) in [
        ("loading_variance", priors.loading_variance),
        ("channel_loading_variance", priors.channel_loading_variance),
        ("impact_variance", priors.impact_variance),
        ("relevance_variance", priors.relevance_variance),
        ("noise_variance", priors.noise_variance),
        ("constant_variance", priors.constant_variance),
        ("initial_log_volatility_variance", priors.initial_log_volatility_variance),
        ("factor_initial_variance", priors.factor_initial_variance),
        ("kappa_max", priors.kappa_max),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            errors.push(Error::InvalidPrior(alloc::format!("{name} must be positive and finite, got {v}")));
        }
    }

    let pattern = match ImpactPattern::from_spec(spec, priors) {
        Ok(p) => {
            errors.extend(p.check());
            Some(p)
        }
        Err(e) => {
            errors.extend(e);
            None
        }
    };

    let mut own_lag_mean = alloc::vec![1.0; d.endogenous];
    own_lag_mean[0] = 0.0;
    own_lag_mean[1] = 0.0;
    let layout = pattern.map(|pattern| SvarLayout {
        system: d.system,
        endogenous: d.endogenous,
        lags: spec.var_lags,
        own_lag_mean,
        constant_variance: priors.constant_variance,
        kappa_max: priors.kappa_max,
        pattern,
        scale_proposal: priors.scale_proposal,
    });
    if let Some(l) = &layout {
        let (a, b) = l.shrinkage_shapes();
        for s in [a, b] {
            if !(s > 0.0) && spec.var_lags > 0 {
                errors.push(Error::NonPositiveShape(s));
            }
        }
    }

    match (errors.is_empty(), layout) {
        (true, Some(svar)) => Ok(Model { spec: spec.clone(), data: data.clone(), priors: *priors, dims: d, svar }),
        _ => Err(Error::Invalid(errors)),
    }
}
