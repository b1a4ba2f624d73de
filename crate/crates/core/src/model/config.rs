use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sizes and optimizer settings of the encoder-decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Forward LSTM hidden size.
    pub n_h: usize,
    /// Backward LSTM hidden size.
    pub n_h2: usize,
    /// Decoder GRU hidden size; also the width of the attention output fed
    /// to the GRU.
    pub n_g: usize,
    /// Fixed path length.
    pub n_l: usize,
    pub d_w: usize,
    pub d_d: usize,
    pub d_p: usize,
    /// Cap on the number of encoder input paths per example.
    pub max_input_paths: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub clip_norm: f64,
    pub init_scale: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            n_h: 32,
            n_h2: 32,
            n_g: 64,
            n_l: 8,
            d_w: 50,
            d_d: 16,
            d_p: 16,
            max_input_paths: 8,
            learning_rate: 0.05,
            epochs: 30,
            batch_size: 1,
            seed: 42,
            clip_norm: 5.0,
            init_scale: 0.1,
        }
    }
}

impl ModelConfig {
    pub fn input_dim(&self) -> usize {
        self.d_w + self.d_d + self.d_p
    }

    /// Width of one Bi-LSTM output position.
    pub fn block_dim(&self) -> usize {
        self.n_h + self.n_h2
    }

    /// Dimension of a relation vector.
    pub fn relation_dim(&self) -> usize {
        self.block_dim() * self.n_l
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = [
            ("n_h", self.n_h),
            ("n_h2", self.n_h2),
            ("n_g", self.n_g),
            ("d_w", self.d_w),
            ("d_d", self.d_d),
            ("d_p", self.d_p),
            ("max_input_paths", self.max_input_paths),
            ("batch_size", self.batch_size),
        ];
        for (name, v) in sizes {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n_l < 2 {
            return Err(Error::Config("n_l must be at least 2".into()));
        }
        for (name, v) in [("learning_rate", self.learning_rate), ("clip_norm", self.clip_norm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be a positive number")));
            }
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(Error::Config("init_scale must be non-negative".into()));
        }
        Ok(())
    }
}
