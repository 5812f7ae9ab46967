use serde::{Deserialize, Serialize};

use crate::error::{Result, SocError};
use crate::textprep::{EMBED_DIM, MAX_LEN};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Head {
    /// Single tanh unit trained with squared error.
    Tanh,
    /// Two-way softmax (index 0 positive, index 1 negative) trained with
    /// cross-entropy.
    Softmax,
}

impl Head {
    pub fn outputs(self) -> usize {
        match self {
            Head::Tanh => 1,
            Head::Softmax => 2,
        }
    }
}

impl std::str::FromStr for Head {
    type Err = SocError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tanh" => Ok(Head::Tanh),
            "softmax" => Ok(Head::Softmax),
            other => Err(SocError::Input(format!("unknown head {other:?} (expected tanh or softmax)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub lstm_hidden: usize,
    pub dense_size: usize,
    pub dense_layers: usize,
    pub conv_kernel_widths: Vec<usize>,
    pub conv_filters_per_width: usize,
    pub head: Head,
    pub max_len: usize,
    pub embeddings_trainable: bool,
}

impl ModelConfig {
    /// Full-size network: d = 100, H = 64, two dense layers of 128, conv
    /// widths 3/4/5 with 64 filters each.
    pub fn standard(vocab_size: usize, head: Head) -> Self {
        Self {
            vocab_size,
            embed_dim: EMBED_DIM,
            lstm_hidden: 64,
            dense_size: 128,
            dense_layers: 2,
            conv_kernel_widths: vec![3, 4, 5],
            conv_filters_per_width: 64,
            head,
            max_len: MAX_LEN,
            embeddings_trainable: true,
        }
    }

    /// Small network for gradient checks and quick tests: d = 8, H = 8,
    /// widths 2/3 with 4 filters each, dense 16.
    pub fn micro(vocab_size: usize, head: Head) -> Self {
        Self {
            vocab_size,
            embed_dim: 8,
            lstm_hidden: 8,
            dense_size: 16,
            dense_layers: 2,
            conv_kernel_widths: vec![2, 3],
            conv_filters_per_width: 4,
            head,
            max_len: MAX_LEN,
            embeddings_trainable: true,
        }
    }

    /// Width of the concatenated pooled conv features.
    pub fn feature_dim(&self) -> usize {
        self.conv_kernel_widths.len() * self.conv_filters_per_width
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("lstm_hidden", self.lstm_hidden),
            ("dense_size", self.dense_size),
            ("conv_filters_per_width", self.conv_filters_per_width),
            ("max_len", self.max_len),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(SocError::Config(format!("{name} must be positive")));
            }
        }
        if self.vocab_size < 2 {
            return Err(SocError::Config("vocabulary must hold at least <pad> and <unk>".into()));
        }
        if self.conv_kernel_widths.is_empty() {
            return Err(SocError::Config("at least one conv kernel width is required".into()));
        }
        for &w in &self.conv_kernel_widths {
            if w == 0 || w > self.max_len {
                return Err(SocError::Config(format!(
                    "conv kernel width {w} must be in 1..={}",
                    self.max_len
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub max_epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 2048,
            max_epochs: 300,
            lr: crate::nncore::DEFAULT_LR,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(SocError::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(SocError::Config("max_epochs must be at least 1".into()));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(SocError::Config(format!("learning rate {} is invalid", self.lr)));
        }
        Ok(())
    }
}
