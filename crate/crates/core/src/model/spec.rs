use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn as_f64(self) -> f64 {
        match self {
            Sign::Positive => 1.0,
            Sign::Negative => -1.0,
        }
    }
}

/// Impact-response sign of one endogenous variable to the monetary policy
/// shock. Endogenous variables are ordered output factor, inflation factor,
/// then the channel variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignRestriction {
    pub variable: usize,
    pub sign: Sign,
}

/// Factor block: the output or the inflation panel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Block {
    Output,
    Inflation,
}

impl Block {
    pub const BOTH: [Block; 2] = [Block::Output, Block::Inflation];

    pub fn index(self) -> usize {
        match self {
            Block::Output => 0,
            Block::Inflation => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Block::Output => "output",
            Block::Inflation => "inflation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcSettings {
    pub total_iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
}

impl McmcSettings {
    pub fn retained(&self) -> usize {
        if self.thinning == 0 || self.total_iterations < self.burn_in {
            0
        } else {
            (self.total_iterations - self.burn_in) / self.thinning
        }
    }

    /// Whether the 1-based sweep `s` is stored.
    pub fn keeps(&self, s: usize) -> bool {
        s > self.burn_in && (s - self.burn_in) % self.thinning == 0
    }
}

impl Default for McmcSettings {
    fn default() -> Self {
        McmcSettings { total_iterations: 18_000, burn_in: 3_000, thinning: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Countries besides the euro-area aggregate.
    pub country_count: usize,
    /// Names of the observed channel variables (policy rate among them).
    pub channel_names: Vec<String>,
    /// Lags of the factors (and channels) in the measurement equations.
    pub factor_lags: usize,
    /// Lags of the VAR.
    pub var_lags: usize,
    /// Whether country series load on the channel variables directly.
    pub country_channels: bool,
    /// Position of the policy rate among the channel variables.
    pub policy_rate_index: usize,
    /// Number of external instruments; instrument `j` is tied to shock `j`.
    pub instrument_count: usize,
    pub sign_restrictions: Vec<SignRestriction>,
    pub mcmc: McmcSettings,
}

impl ModelSpec {
    /// Baseline configuration: three channels with the policy rate first, one
    /// instrument, six VAR lags, contemporaneous loadings only, and the policy
    /// rate up / inflation factor down on impact.
    pub fn baseline(country_count: usize, channel_names: Vec<String>) -> Self {
        ModelSpec {
            country_count,
            channel_names,
            factor_lags: 0,
            var_lags: 6,
            country_channels: false,
            policy_rate_index: 0,
            instrument_count: 1,
            sign_restrictions: alloc::vec![
                SignRestriction { variable: 2, sign: Sign::Positive },
                SignRestriction { variable: 1, sign: Sign::Negative },
            ],
            mcmc: McmcSettings::default(),
        }
    }

    pub fn dims(&self) -> Dimensions {
        let channels = self.channel_names.len();
        let endogenous = 2 + channels;
        Dimensions {
            countries: self.country_count,
            series_per_block: self.country_count + 1,
            channels,
            instruments: self.instrument_count,
            endogenous,
            system: endogenous + self.instrument_count,
            factor_lags: self.factor_lags,
            var_lags: self.var_lags,
            state_blocks: self.var_lags.max(self.factor_lags + 1),
        }
    }

    /// Position of the policy rate in the VAR vector.
    pub fn policy_rate_variable(&self) -> usize {
        2 + self.policy_rate_index
    }

    /// Names of the endogenous VAR variables.
    pub fn endogenous_names(&self) -> Vec<String> {
        let mut v: Vec<String> = alloc::vec!["output_factor".into(), "inflation_factor".into()];
        v.extend(self.channel_names.iter().cloned());
        v
    }
}

/// Sizes derived from a [`ModelSpec`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dimensions {
    pub countries: usize,
    /// Euro-area aggregate plus countries.
    pub series_per_block: usize,
    pub channels: usize,
    pub instruments: usize,
    /// Factors plus channels.
    pub endogenous: usize,
    /// Endogenous variables plus instruments.
    pub system: usize,
    pub factor_lags: usize,
    pub var_lags: usize,
    /// Lag blocks in the factor state vector.
    pub state_blocks: usize,
}

impl Dimensions {
    pub fn series(&self) -> usize {
        2 * self.series_per_block
    }

    /// Regressors per VAR equation: constant plus all lagged variables.
    pub fn var_regressors(&self) -> usize {
        1 + self.system * self.var_lags
    }

    pub fn series_index(&self, block: super::Block, i: usize) -> usize {
        block.index() * self.series_per_block + i
    }
}
