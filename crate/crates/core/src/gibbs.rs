//! The full Gibbs sweep and chain driver.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::factor::{sample_factor_loadings, sample_factors, sample_stochastic_volatilities, sample_sv_horseshoe, sample_sv_initial};
use crate::model::{initialize_state, McmcState, Model};
use crate::random::{step_rng, Step};
use crate::svar::{sample_impact_matrix, sample_shrinkage, sample_var_coefficients, ImpactDiagnostics};

/// One chain: the model, its seed, the current state and the acceptance
/// bookkeeping of the impact step.
pub struct Sampler<'a> {
    pub model: &'a Model,
    pub seed: u64,
    pub state: McmcState,
    pub diagnostics: ImpactDiagnostics,
    /// Completed sweeps.
    pub sweeps: usize,
}

impl<'a> Sampler<'a> {
    pub fn new(model: &'a Model, seed: u64) -> Result<Self> {
        Ok(Self::from_state(model, seed, initialize_state(model)?))
    }

    pub fn from_state(model: &'a Model, seed: u64, state: McmcState) -> Self {
        Sampler { model, seed, state, diagnostics: ImpactDiagnostics::default(), sweeps: 0 }
    }

    /// Run steps 1 to 8 once: loadings, log volatilities, their initial
    /// values, horseshoe scales, VAR coefficients, impact matrix, shrinkage,
    /// factors. Each step draws from its own random stream.
    pub fn sweep(&mut self) -> Result<()> {
        let s = (self.sweeps + 1) as u64;
        let seed = self.seed;
        let model = self.model;
        let state = &mut self.state;

        sample_factor_loadings(&mut step_rng(seed, s, Step::Loadings), model, state)?;
        sample_stochastic_volatilities(&mut step_rng(seed, s, Step::LogVolatility), model, state)?;
        sample_sv_initial(&mut step_rng(seed, s, Step::InitialVolatility), model, state);
        sample_sv_horseshoe(&mut step_rng(seed, s, Step::Horseshoe), state)?;

        let y = model.var_observations(&state.factors);
        let layout = &model.svar;
        let scale = &state.minnesota_scale;
        sample_var_coefficients(&mut step_rng(seed, s, Step::VarCoefficients), &y, layout, &mut state.var, scale)?;
        sample_impact_matrix(&mut step_rng(seed, s, Step::Impact), &y, layout, &mut state.var, &mut self.diagnostics)?;
        let coefficients = state.var.coefficients.clone();
        sample_shrinkage(&mut step_rng(seed, s, Step::Shrinkage), layout, &coefficients, &mut state.var.kappa, scale)?;

        sample_factors(&mut step_rng(seed, s, Step::Factors), model, state)?;
        self.sweeps += 1;
        Ok(())
    }
}

/// Receiver of retained draws, called in sweep order.
pub trait DrawSink {
    fn accept(&mut self, sweep: usize, state: &McmcState) -> Result<()>;
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    /// 1-based sweep that produced the draw.
    pub sweep: usize,
    pub state: McmcState,
}

/// Retained draws kept in memory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PosteriorDraws {
    pub seed: u64,
    pub draws: Vec<Draw>,
}

impl PosteriorDraws {
    pub fn new(seed: u64) -> Self {
        PosteriorDraws { seed, draws: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &McmcState> {
        self.draws.iter().map(|d| &d.state)
    }
}

impl DrawSink for PosteriorDraws {
    fn accept(&mut self, sweep: usize, state: &McmcState) -> Result<()> {
        self.draws.push(Draw { sweep, state: state.clone() });
        Ok(())
    }
}

/// Summary of a finished chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub seed: u64,
    pub sweeps: usize,
    pub retained: usize,
    pub impact: ImpactDiagnostics,
}

/// Run the configured number of sweeps from the initial state, passing every
/// retained state to `sink`. `progress` is called after every sweep.
pub fn run_chain(
    model: &Model,
    seed: u64,
    sink: &mut dyn DrawSink,
    progress: &mut dyn FnMut(usize, &ImpactDiagnostics),
) -> Result<ChainReport> {
    let mut sampler = Sampler::new(model, seed)?;
    let settings = model.spec.mcmc;
    let mut retained = 0;
    for s in 1..=settings.total_iterations {
        sampler.sweep()?;
        if settings.keeps(s) {
            sink.accept(s, &sampler.state)?;
            retained += 1;
        }
        progress(s, &sampler.diagnostics);
    }
    Ok(ChainReport { seed, sweeps: sampler.sweeps, retained, impact: sampler.diagnostics })
}
