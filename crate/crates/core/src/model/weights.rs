use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::error::{Result, SocError};
use crate::nncore::{Parameter, Real, Tensor};
use crate::textprep::{EmbeddingTable, OOV_INIT_RANGE, PAD_INDEX};

/// Every trainable tensor of the network. Shapes are fully determined by
/// the [`ModelConfig`].
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights<F> {
    pub config: ModelConfig,
    /// `V x d`; row 0 (padding) is kept at zero.
    pub embedding: Parameter<F>,
    /// `4H x d`, gate blocks ordered input, forget, cell, output.
    pub lstm_w_input: Parameter<F>,
    /// `4H x H`
    pub lstm_w_hidden: Parameter<F>,
    pub lstm_bias: Parameter<F>,
    /// One `filters x (width * H)` bank per kernel width.
    pub conv_kernels: Vec<Parameter<F>>,
    pub conv_biases: Vec<Parameter<F>>,
    /// `out x in`
    pub dense_weights: Vec<Parameter<F>>,
    pub dense_biases: Vec<Parameter<F>>,
    pub head_weight: Parameter<F>,
    pub head_bias: Parameter<F>,
}

fn glorot<F: Real>(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Parameter<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    let data = (0..rows * cols)
        .map(|_| F::lit(rng.random_range(-limit..=limit)))
        .collect();
    Parameter::new(Tensor::new(&[rows, cols], data).expect("finite init"))
}

impl<F: Real> ModelWeights<F> {
    /// All-zero weights with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Result<Self> {
        config.validate()?;
        let (v, d, h) = (config.vocab_size, config.embed_dim, config.lstm_hidden);
        let nf = config.conv_filters_per_width;
        let mut dense_weights = Vec::new();
        let mut dense_biases = Vec::new();
        let mut fan_in = config.feature_dim();
        for _ in 0..config.dense_layers {
            dense_weights.push(Parameter::zeros(&[config.dense_size, fan_in]));
            dense_biases.push(Parameter::zeros(&[config.dense_size]));
            fan_in = config.dense_size;
        }
        let out = config.head.outputs();
        Ok(Self {
            embedding: Parameter::zeros(&[v, d]),
            lstm_w_input: Parameter::zeros(&[4 * h, d]),
            lstm_w_hidden: Parameter::zeros(&[4 * h, h]),
            lstm_bias: Parameter::zeros(&[4 * h]),
            conv_kernels: config
                .conv_kernel_widths
                .iter()
                .map(|&w| Parameter::zeros(&[nf, w * h]))
                .collect(),
            conv_biases: config.conv_kernel_widths.iter().map(|_| Parameter::zeros(&[nf])).collect(),
            dense_weights,
            dense_biases,
            head_weight: Parameter::zeros(&[out, fan_in]),
            head_bias: Parameter::zeros(&[out]),
            config: config.clone(),
        })
    }

    /// Seeded random initialisation: Glorot-uniform matrices, zero biases
    /// except a forget-gate bias of +1, and embeddings uniform in
    /// `[-0.05, 0.05]` with a zero pad row.
    pub fn init(config: &ModelConfig, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = config.embed_dim;
        let emb = w.embedding.value.data_mut();
        for row in 1..config.vocab_size {
            for v in &mut emb[row * d..(row + 1) * d] {
                *v = F::lit(rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE) as f64);
            }
        }
        let h = config.lstm_hidden;
        w.lstm_w_input = glorot(&mut rng, 4 * h, d);
        w.lstm_w_hidden = glorot(&mut rng, 4 * h, h);
        for b in &mut w.lstm_bias.value.data_mut()[h..2 * h] {
            *b = F::one();
        }
        for (k, &width) in w.conv_kernels.iter_mut().zip(&config.conv_kernel_widths) {
            *k = glorot(&mut rng, config.conv_filters_per_width, width * h);
        }
        for dw in &mut w.dense_weights {
            let (rows, cols) = (dw.value.shape()[0], dw.value.shape()[1]);
            *dw = glorot(&mut rng, rows, cols);
        }
        let (rows, cols) = (w.head_weight.value.shape()[0], w.head_weight.value.shape()[1]);
        w.head_weight = glorot(&mut rng, rows, cols);
        Ok(w)
    }

    /// Replaces the embedding matrix with a pre-trained table.
    pub fn set_embeddings(&mut self, table: &EmbeddingTable) -> Result<()> {
        if table.dim != self.config.embed_dim || table.rows() != self.config.vocab_size {
            return Err(SocError::Config(format!(
                "embedding table is {}x{}, model expects {}x{}",
                table.rows(),
                table.dim,
                self.config.vocab_size,
                self.config.embed_dim
            )));
        }
        let values = table.vectors.iter().map(|&v| F::lit(v as f64)).collect();
        let mut value = Tensor::new(&[table.rows(), table.dim], values)?;
        let d = table.dim;
        let pad = PAD_INDEX as usize;
        value.data_mut()[pad * d..(pad + 1) * d].fill(F::zero());
        self.embedding = Parameter::new(value);
        Ok(())
    }

    /// Tensor names in canonical order (the checkpoint and gradient order).
    pub fn names(&self) -> Vec<String> {
        let mut names = vec![
            "embedding".to_string(),
            "lstm.w_input".to_string(),
            "lstm.w_hidden".to_string(),
            "lstm.bias".to_string(),
        ];
        for w in &self.config.conv_kernel_widths {
            names.push(format!("conv{w}.kernel"));
            names.push(format!("conv{w}.bias"));
        }
        for i in 0..self.dense_weights.len() {
            names.push(format!("dense{i}.weight"));
            names.push(format!("dense{i}.bias"));
        }
        names.push("head.weight".to_string());
        names.push("head.bias".to_string());
        names
    }

    pub fn params(&self) -> Vec<&Parameter<F>> {
        let mut out = vec![&self.embedding, &self.lstm_w_input, &self.lstm_w_hidden, &self.lstm_bias];
        for (k, b) in self.conv_kernels.iter().zip(&self.conv_biases) {
            out.push(k);
            out.push(b);
        }
        for (w, b) in self.dense_weights.iter().zip(&self.dense_biases) {
            out.push(w);
            out.push(b);
        }
        out.push(&self.head_weight);
        out.push(&self.head_bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter<F>> {
        let mut out = vec![
            &mut self.embedding,
            &mut self.lstm_w_input,
            &mut self.lstm_w_hidden,
            &mut self.lstm_bias,
        ];
        for (k, b) in self.conv_kernels.iter_mut().zip(self.conv_biases.iter_mut()) {
            out.push(k);
            out.push(b);
        }
        for (w, b) in self.dense_weights.iter_mut().zip(self.dense_biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out.push(&mut self.head_weight);
        out.push(&mut self.head_bias);
        out
    }

    pub fn to_tensors(&self) -> Vec<Tensor<F>> {
        self.params().into_iter().map(|p| p.value.clone()).collect()
    }

    /// Rebuilds weights from tensors in canonical order, checking shapes.
    pub fn from_tensors(config: &ModelConfig, tensors: Vec<Tensor<F>>) -> Result<Self> {
        let mut w = Self::zeros(config)?;
        let names = w.names();
        let params = w.params_mut();
        if tensors.len() != params.len() {
            return Err(SocError::Shape(format!(
                "expected {} tensors, got {}",
                params.len(),
                tensors.len()
            )));
        }
        for ((p, t), name) in params.into_iter().zip(tensors).zip(names) {
            if p.value.shape() != t.shape() {
                return Err(SocError::Shape(format!(
                    "tensor {name} has shape {:?}, config requires {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            *p = Parameter::new(t);
        }
        Ok(w)
    }

    pub fn cast<G: Real>(&self) -> ModelWeights<G> {
        let tensors = self.params().iter().map(|p| p.value.cast::<G>()).collect();
        ModelWeights::from_tensors(&self.config, tensors).expect("same config, same shapes")
    }

    pub fn zero_grads(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.value.len()).sum()
    }
}
