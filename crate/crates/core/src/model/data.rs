use alloc::string::String;
use alloc::vec::Vec;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::calendar::Month;

/// Estimation sample. Rows are months; the first column of each panel is the
/// euro-area aggregate. Channels are on the model (standardized) scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSet {
    pub dates: Vec<Month>,
    pub series_names: Vec<String>,
    #[serde(with = "crate::serde_matrix")]
    pub output: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub inflation: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub channels: DMatrix<f64>,
    #[serde(with = "crate::serde_matrix")]
    pub instruments: DMatrix<f64>,
    /// Mean and standard deviation that map channels back to original units.
    pub channel_scale: Vec<ChannelScale>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScale {
    pub mean: f64,
    pub std_dev: f64,
}

impl ChannelScale {
    pub const IDENTITY: ChannelScale = ChannelScale { mean: 0.0, std_dev: 1.0 };
}

impl DataSet {
    pub fn periods(&self) -> usize {
        self.dates.len()
    }

    pub fn panel(&self, block: super::Block) -> &DMatrix<f64> {
        match block {
            super::Block::Output => &self.output,
            super::Block::Inflation => &self.inflation,
        }
    }

    /// Standardize channel columns in place, recording the scaling.
    pub fn standardize_channels(&mut self) {
        self.channel_scale.clear();
        for j in 0..self.channels.ncols() {
            let col: Vec<f64> = self.channels.column(j).iter().copied().collect();
            let mean = crate::stats::mean(&col);
            let sd = crate::stats::std_dev(&col);
            for t in 0..self.channels.nrows() {
                self.channels[(t, j)] = (self.channels[(t, j)] - mean) / sd;
            }
            self.channel_scale.push(ChannelScale { mean, std_dev: sd });
        }
    }
}
