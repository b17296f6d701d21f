//! Model specification, data, parameter state and their validation.

mod data;
mod pattern;
mod priors;
mod spec;
mod state;

pub use data::{ChannelScale, DataSet};
pub use pattern::{ImpactPattern, Restriction};
pub use priors::{Priors, ScaleProposal};
pub use spec::{Block, Dimensions, McmcSettings, ModelSpec, Sign, SignRestriction};
pub use state::{FactorLoadings, LogVolatility, McmcState, VarParameters, MIN_INNOVATION_VARIANCE};

mod init;
mod likelihood;
mod simulate;
mod validate;

pub use init::{initialize_state, pca_factor};
pub use likelihood::complete_data_log_likelihood;
pub use simulate::{companion_matrix, simulate_dgp, SimulatedData, TrueParameters};
pub use validate::validate_spec;

use alloc::vec::Vec;
use nalgebra::DMatrix;

use crate::svar::SvarLayout;

/// A specification, data set and prior that passed validation, together with
/// the derived structures the sampler needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub spec: ModelSpec,
    pub data: DataSet,
    pub priors: Priors,
    pub dims: Dimensions,
    pub svar: SvarLayout,
}

impl Model {
    /// `T x n` matrix of VAR variables: the two factors, the channels and
    /// the instruments.
    pub fn var_observations(&self, factors: &DMatrix<f64>) -> DMatrix<f64> {
        let d = &self.dims;
        let t = self.data.periods();
        DMatrix::from_fn(t, d.system, |s, j| {
            if j < 2 {
                factors[(s, j)]
            } else if j < d.endogenous {
                self.data.channels[(s, j - 2)]
            } else {
                self.data.instruments[(s, j - d.endogenous)]
            }
        })
    }

    /// Log-volatility states of one panel.
    pub fn block_volatility<'a>(&self, state: &'a McmcState, block: Block) -> &'a [LogVolatility] {
        let n = self.dims.series_per_block;
        &state.volatility[block.index() * n..(block.index() + 1) * n]
    }

    /// Measurement residuals `x_it - common_it` of one series (zero before
    /// the first period with a complete lag window).
    pub fn measurement_residuals(&self, state: &McmcState, block: Block, i: usize) -> Vec<f64> {
        let panel = self.data.panel(block);
        let factor = state.factor_column(block);
        let loadings = state.loadings(block);
        (0..self.data.periods())
            .map(|t| {
                if t < self.dims.factor_lags {
                    0.0
                } else {
                    panel[(t, i)] - loadings.predict(i, t, &factor, &self.data.channels)
                }
            })
            .collect()
    }
}
