use serde::{Deserialize, Serialize};

/// How the proposal for the free scalar of each impact column is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleProposal {
    /// Discretized full conditional (likelihood times prior); acceptance then
    /// only corrects the discretization.
    FullConditional,
    /// Discretized likelihood kernel; the prior enters the acceptance ratio.
    Likelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Priors {
    /// Variance of the factor loadings.
    pub loading_variance: f64,
    /// Variance of the direct loadings on channel variables.
    pub channel_loading_variance: f64,
    /// Variance of the free entries of the structural impact block.
    pub impact_variance: f64,
    /// Variance of the instrument relevance coefficient.
    pub relevance_variance: f64,
    /// Variance of the instrument noise scale.
    pub noise_variance: f64,
    /// Variance of the VAR constants.
    pub constant_variance: f64,
    /// Variance of the initial log volatility.
    pub initial_log_volatility_variance: f64,
    /// Variance of the factors in the first VAR-lag periods.
    pub factor_initial_variance: f64,
    /// Upper truncation point of both Minnesota shrinkage parameters.
    pub kappa_max: f64,
    pub scale_proposal: ScaleProposal,
}

impl Default for Priors {
    fn default() -> Self {
        Priors {
            loading_variance: 10.0,
            channel_loading_variance: 10.0,
            impact_variance: 1.0,
            relevance_variance: 10.0,
            noise_variance: 0.01 * 0.01,
            constant_variance: 100.0 * 100.0,
            initial_log_volatility_variance: 10.0,
            factor_initial_variance: 10.0,
            kappa_max: 10.0,
            scale_proposal: ScaleProposal::FullConditional,
        }
    }
}
