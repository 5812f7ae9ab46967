use std::collections::BTreeMap;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use super::config::Head;
use super::weights::ModelWeights;
use super::SentimentScore;
use crate::error::{Result, SocError};
use crate::nncore::{
    conv1d_maxpool, conv1d_maxpool_backward, cross_entropy, cross_entropy_grad, dense, dense_backward,
    grad_check, l2_loss, l2_loss_grad, softmax, Activation, ConvPool, DenseOut, GradCheckReport, LstmCache,
    LstmCell, LstmGrads, Real, Tensor,
};
use crate::textprep::EncodedSequence;

/// Examples per gradient chunk. The partition is fixed so summation order
/// does not depend on the number of worker threads.
const GRAD_CHUNK: usize = 16;

/// An encoded text with its training target: `+1`/`-1` for binary data,
/// `0` for neutral (tanh head only).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    pub seq: EncodedSequence,
    pub target: f64,
}

/// Intermediate values of one forward pass, reused by the backward pass.
#[derive(Debug, Clone)]
pub struct ExampleCache<F> {
    /// `T x d`
    pub embedded: Vec<F>,
    pub lstm: LstmCache<F>,
    pub pools: Vec<ConvPool<F>>,
    pub features: Vec<F>,
    pub hidden: Vec<DenseOut<F>>,
    pub logits: DenseOut<F>,
    /// `[tanh score]` or `[p_positive, p_negative]`.
    pub output: Vec<F>,
}

impl<F: Real> ExampleCache<F> {
    pub fn score(&self) -> SentimentScore {
        if self.output.len() == 1 {
            SentimentScore::Tanh(self.output[0].as_f64())
        } else {
            SentimentScore::Softmax {
                positive: self.output[0].as_f64(),
                negative: self.output[1].as_f64(),
            }
        }
    }
}

fn lstm_cell<F: Real>(w: &ModelWeights<F>) -> Result<LstmCell<'_, F>> {
    LstmCell::new(
        w.lstm_w_input.value.data(),
        w.lstm_w_hidden.value.data(),
        w.lstm_bias.value.data(),
        w.config.embed_dim,
        w.config.lstm_hidden,
    )
}

fn check_sequence(seq: &EncodedSequence, vocab_size: usize, max_len: usize, example: usize) -> Result<()> {
    if seq.indices.len() != max_len {
        return Err(SocError::Input(format!(
            "example {example}: sequence has {} positions, model expects {max_len}",
            seq.indices.len()
        )));
    }
    if let Some((pos, &idx)) = seq.indices.iter().enumerate().find(|(_, &i)| i as usize >= vocab_size) {
        return Err(SocError::Input(format!(
            "example {example}, position {pos}: index {idx} is outside the vocabulary of size {vocab_size}"
        )));
    }
    Ok(())
}

/// Runs one sequence through the network.
pub fn forward_example<F: Real>(w: &ModelWeights<F>, seq: &EncodedSequence) -> Result<ExampleCache<F>> {
    forward_checked(w, seq, 0)
}

fn forward_checked<F: Real>(w: &ModelWeights<F>, seq: &EncodedSequence, example: usize) -> Result<ExampleCache<F>> {
    let cfg = &w.config;
    check_sequence(seq, cfg.vocab_size, cfg.max_len, example)?;
    let (d, h, steps) = (cfg.embed_dim, cfg.lstm_hidden, cfg.max_len);

    let table = w.embedding.value.data();
    let mut embedded = Vec::with_capacity(steps * d);
    for &idx in &seq.indices {
        let row = idx as usize * d;
        embedded.extend_from_slice(&table[row..row + d]);
    }

    let lstm = lstm_cell(w)?.forward_sequence(&embedded, steps)?;

    let mut pools = Vec::with_capacity(cfg.conv_kernel_widths.len());
    let mut features = Vec::with_capacity(cfg.feature_dim());
    for ((&width, kernel), bias) in cfg.conv_kernel_widths.iter().zip(&w.conv_kernels).zip(&w.conv_biases) {
        let pool = conv1d_maxpool(&lstm.hidden, steps, h, kernel.value.data(), bias.value.data(), width)?;
        features.extend_from_slice(&pool.pooled);
        pools.push(pool);
    }

    let mut hidden: Vec<DenseOut<F>> = Vec::with_capacity(w.dense_weights.len());
    for (dw, db) in w.dense_weights.iter().zip(&w.dense_biases) {
        let input = hidden.last().map_or(&features, |l| &l.out);
        let out = dense(input, dw.value.data(), db.value.data(), Activation::Selu)?;
        hidden.push(out);
    }
    let last = hidden.last().map_or(&features, |l| &l.out);
    let logits = dense(last, w.head_weight.value.data(), w.head_bias.value.data(), Activation::Identity)?;
    let output = match cfg.head {
        Head::Tanh => vec![logits.out[0].tanh()],
        Head::Softmax => softmax(&logits.out),
    };
    if output.iter().any(|v| !v.is_finite()) {
        return Err(SocError::NonFinite(format!("example {example}: network output {output:?}")));
    }
    Ok(ExampleCache {
        embedded,
        lstm,
        pools,
        features,
        hidden,
        logits,
        output,
    })
}

fn map_examples<T, R, G>(items: &[T], f: G) -> Vec<R>
where
    T: Sync,
    R: Send,
    G: Fn(usize, &T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, x)| f(i, x)).collect()
    }
}

/// Head output for every sequence in `batch`. Examples are independent.
pub fn forward<F: Real>(batch: &[EncodedSequence], w: &ModelWeights<F>) -> Result<Vec<SentimentScore>> {
    map_examples(batch, |i, seq| forward_checked(w, seq, i).map(|c| c.score()))
        .into_iter()
        .collect()
}

fn softmax_class(target: f64) -> usize {
    if target >= 0.0 {
        0
    } else {
        1
    }
}

/// Loss of one example and its gradient with respect to the logits.
fn example_loss<F: Real>(head: Head, cache: &ExampleCache<F>, target: f64) -> (F, Vec<F>) {
    match head {
        Head::Tanh => {
            let y = cache.output[0];
            let t = F::lit(target);
            let loss = l2_loss(y, t);
            (loss, vec![l2_loss_grad(y, t) * (F::one() - y * y)])
        }
        Head::Softmax => {
            let class = softmax_class(target);
            (cross_entropy(&cache.output, class), cross_entropy_grad(&cache.output, class))
        }
    }
}

/// Mean loss over `batch`.
pub fn loss<F: Real>(w: &ModelWeights<F>, batch: &[LabeledSequence]) -> Result<F> {
    if batch.is_empty() {
        return Err(SocError::Input("empty batch".into()));
    }
    let mut total = F::zero();
    for (i, ex) in batch.iter().enumerate() {
        let cache = forward_checked(w, &ex.seq, i)?;
        total += example_loss(w.config.head, &cache, ex.target).0;
    }
    Ok(total / F::lit(batch.len() as f64))
}

/// Gradient buffers mirroring [`ModelWeights`]. Embedding gradients are kept
/// sparse, one row per vocabulary index touched by the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub embedding_rows: BTreeMap<u32, Vec<F>>,
    pub lstm_w_input: Vec<F>,
    pub lstm_w_hidden: Vec<F>,
    pub lstm_bias: Vec<F>,
    pub conv_kernels: Vec<Vec<F>>,
    pub conv_biases: Vec<Vec<F>>,
    pub dense_weights: Vec<Vec<F>>,
    pub dense_biases: Vec<Vec<F>>,
    pub head_weight: Vec<F>,
    pub head_bias: Vec<F>,
}

impl<F: Real> Gradients<F> {
    pub fn zeros(w: &ModelWeights<F>) -> Self {
        let z = |p: &crate::nncore::Parameter<F>| vec![F::zero(); p.value.len()];
        Self {
            embedding_rows: BTreeMap::new(),
            lstm_w_input: z(&w.lstm_w_input),
            lstm_w_hidden: z(&w.lstm_w_hidden),
            lstm_bias: z(&w.lstm_bias),
            conv_kernels: w.conv_kernels.iter().map(z).collect(),
            conv_biases: w.conv_biases.iter().map(z).collect(),
            dense_weights: w.dense_weights.iter().map(z).collect(),
            dense_biases: w.dense_biases.iter().map(z).collect(),
            head_weight: z(&w.head_weight),
            head_bias: z(&w.head_bias),
        }
    }

    /// Dense buffers in canonical order, without the embedding.
    fn dense_buffers_mut(&mut self) -> Vec<&mut Vec<F>> {
        let mut out = vec![&mut self.lstm_w_input, &mut self.lstm_w_hidden, &mut self.lstm_bias];
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

    fn dense_buffers(&self) -> Vec<&Vec<F>> {
        let mut out = vec![&self.lstm_w_input, &self.lstm_w_hidden, &self.lstm_bias];
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

    pub fn add_assign(&mut self, other: &Gradients<F>) {
        for (row, g) in &other.embedding_rows {
            match self.embedding_rows.get_mut(row) {
                Some(mine) => mine.iter_mut().zip(g).for_each(|(a, &b)| *a += b),
                None => {
                    self.embedding_rows.insert(*row, g.clone());
                }
            }
        }
        for (mine, theirs) in self.dense_buffers_mut().into_iter().zip(other.dense_buffers()) {
            mine.iter_mut().zip(theirs).for_each(|(a, &b)| *a += b);
        }
    }

    pub fn scale(&mut self, factor: F) {
        for row in self.embedding_rows.values_mut() {
            row.iter_mut().for_each(|v| *v *= factor);
        }
        for buf in self.dense_buffers_mut() {
            buf.iter_mut().for_each(|v| *v *= factor);
        }
    }

    /// Dense gradient tensors in canonical parameter order, including the
    /// raw (unmasked) pad-row gradient.
    pub fn to_tensors(&self, w: &ModelWeights<F>) -> Vec<Tensor<F>> {
        let mut emb = Tensor::zeros(w.embedding.value.shape());
        let d = w.config.embed_dim;
        for (&row, g) in &self.embedding_rows {
            emb.data_mut()[row as usize * d..(row as usize + 1) * d].copy_from_slice(g);
        }
        let mut out = vec![emb];
        for (buf, p) in self.dense_buffers().into_iter().zip(w.params().into_iter().skip(1)) {
            out.push(Tensor::new(p.value.shape(), buf.clone()).expect("gradient shape"));
        }
        out
    }

    /// Copies the gradients into `w`'s parameter buffers. The pad row never
    /// receives a gradient.
    pub fn write_into(&self, w: &mut ModelWeights<F>) {
        let d = w.config.embed_dim;
        let pad = crate::textprep::PAD_INDEX;
        let emb_grad = w.embedding.grad.data_mut();
        emb_grad.fill(F::zero());
        for (&row, g) in &self.embedding_rows {
            if row == pad {
                continue;
            }
            emb_grad[row as usize * d..(row as usize + 1) * d].copy_from_slice(g);
        }
        for (p, buf) in w.params_mut().into_iter().skip(1).zip(self.dense_buffers()) {
            p.grad.data_mut().copy_from_slice(buf);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.embedding_rows.values().flatten().all(|v| v.is_finite())
            && self.dense_buffers().into_iter().flatten().all(|v| v.is_finite())
    }
}

/// Accumulates the gradient of one example's loss into `grads`.
fn backward_example<F: Real>(
    w: &ModelWeights<F>,
    seq: &EncodedSequence,
    cache: &ExampleCache<F>,
    d_logits: &[F],
    grads: &mut Gradients<F>,
) -> Result<()> {
    let cfg = &w.config;
    let (d, h, steps) = (cfg.embed_dim, cfg.lstm_hidden, cfg.max_len);

    let last_in = cache.hidden.last().map_or(&cache.features, |l| &l.out);
    let mut d_x = vec![F::zero(); last_in.len()];
    dense_backward(
        last_in,
        w.head_weight.value.data(),
        &cache.logits,
        Activation::Identity,
        d_logits,
        &mut grads.head_weight,
        &mut grads.head_bias,
        Some(&mut d_x),
    );

    for i in (0..cache.hidden.len()).rev() {
        let input = if i == 0 { &cache.features } else { &cache.hidden[i - 1].out };
        let mut d_in = vec![F::zero(); input.len()];
        dense_backward(
            input,
            w.dense_weights[i].value.data(),
            &cache.hidden[i],
            Activation::Selu,
            &d_x,
            &mut grads.dense_weights[i],
            &mut grads.dense_biases[i],
            Some(&mut d_in),
        );
        d_x = d_in;
    }

    let nf = cfg.conv_filters_per_width;
    let mut d_hidden = vec![F::zero(); steps * h];
    for (k, &width) in cfg.conv_kernel_widths.iter().enumerate() {
        conv1d_maxpool_backward(
            &cache.lstm.hidden,
            h,
            w.conv_kernels[k].value.data(),
            width,
            &cache.pools[k],
            &d_x[k * nf..(k + 1) * nf],
            &mut grads.conv_kernels[k],
            &mut grads.conv_biases[k],
            &mut d_hidden,
        );
    }

    let cell = lstm_cell(w)?;
    let mut lstm_grads = LstmGrads {
        w_input: std::mem::take(&mut grads.lstm_w_input),
        w_hidden: std::mem::take(&mut grads.lstm_w_hidden),
        bias: std::mem::take(&mut grads.lstm_bias),
    };
    let d_embedded = cell.backward_sequence(&cache.lstm, &cache.embedded, &d_hidden, &mut lstm_grads);
    grads.lstm_w_input = lstm_grads.w_input;
    grads.lstm_w_hidden = lstm_grads.w_hidden;
    grads.lstm_bias = lstm_grads.bias;

    for (t, &idx) in seq.indices.iter().enumerate() {
        let row = grads.embedding_rows.entry(idx).or_insert_with(|| vec![F::zero(); d]);
        row.iter_mut()
            .zip(&d_embedded[t * d..(t + 1) * d])
            .for_each(|(a, &b)| *a += b);
    }
    Ok(())
}

/// Mean loss over `batch` and its gradient with respect to every weight.
pub fn batch_loss_and_grads<F: Real>(w: &ModelWeights<F>, batch: &[&LabeledSequence]) -> Result<(F, Gradients<F>)> {
    if batch.is_empty() {
        return Err(SocError::Input("empty batch".into()));
    }
    let chunks: Vec<&[&LabeledSequence]> = batch.chunks(GRAD_CHUNK).collect();
    let partials = map_examples(&chunks, |ci, chunk| -> Result<(F, Gradients<F>)> {
        let mut grads = Gradients::zeros(w);
        let mut total = F::zero();
        for (j, ex) in chunk.iter().enumerate() {
            let cache = forward_checked(w, &ex.seq, ci * GRAD_CHUNK + j)?;
            let (l, d_logits) = example_loss(w.config.head, &cache, ex.target);
            total += l;
            backward_example(w, &ex.seq, &cache, &d_logits, &mut grads)?;
        }
        Ok((total, grads))
    });
    let mut iter = partials.into_iter();
    let (mut total, mut grads) = iter.next().expect("non-empty batch")?;
    for part in iter {
        let (l, g) = part?;
        total += l;
        grads.add_assign(&g);
    }
    let inv = F::one() / F::lit(batch.len() as f64);
    grads.scale(inv);
    Ok((total * inv, grads))
}

/// Finite-difference check of [`batch_loss_and_grads`] over every weight
/// tensor, in canonical order.
pub fn gradient_check(w: &ModelWeights<f64>, batch: &[LabeledSequence], epsilon: f64) -> Result<GradCheckReport> {
    let refs: Vec<&LabeledSequence> = batch.iter().collect();
    let (_, grads) = batch_loss_and_grads(w, &refs)?;
    let analytic = grads.to_tensors(w);
    let mut params = w.to_tensors();
    let mut failure = None;
    let report = grad_check(
        &mut params,
        &analytic,
        |p| {
            let perturbed = ModelWeights::from_tensors(&w.config, p.to_vec()).expect("same shapes");
            match loss(&perturbed, batch) {
                Ok(l) => l,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            }
        },
        epsilon,
    );
    match failure {
        Some(e) => Err(e),
        None => Ok(report),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::textprep::MAX_LEN;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_seq(rng: &mut ChaCha8Rng, vocab: usize) -> EncodedSequence {
        let len = rng.random_range(0..=MAX_LEN);
        let mut indices: Vec<u32> = (0..len).map(|_| rng.random_range(1..vocab as u32)).collect();
        indices.resize(MAX_LEN, 0);
        EncodedSequence {
            indices,
            true_length: len,
        }
    }

    #[test]
    fn zero_weights_give_neutral_outputs() {
        let seq = EncodedSequence {
            indices: vec![3; MAX_LEN],
            true_length: MAX_LEN,
        };
        let w = ModelWeights::<f64>::zeros(&ModelConfig::micro(10, Head::Tanh)).unwrap();
        assert_eq!(forward(std::slice::from_ref(&seq), &w).unwrap(), vec![SentimentScore::Tanh(0.0)]);
        let w = ModelWeights::<f64>::zeros(&ModelConfig::micro(10, Head::Softmax)).unwrap();
        assert_eq!(
            forward(&[seq], &w).unwrap(),
            vec![SentimentScore::Softmax {
                positive: 0.5,
                negative: 0.5
            }]
        );
    }

    #[test]
    fn out_of_vocabulary_index_names_position() {
        let w = ModelWeights::<f64>::init(&ModelConfig::micro(10, Head::Tanh), 0).unwrap();
        let mut indices = vec![0u32; MAX_LEN];
        indices[5] = 10;
        let err = forward(&[EncodedSequence { indices, true_length: 6 }], &w).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, SocError::Input(_)));
        assert!(msg.contains("position 5"), "{msg}");
    }

    #[test]
    fn batch_gradient_is_mean_of_example_gradients() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = ModelWeights::<f64>::init(&ModelConfig::micro(30, Head::Softmax), 4).unwrap();
        let batch: Vec<LabeledSequence> = (0..40)
            .map(|i| LabeledSequence {
                seq: random_seq(&mut rng, 30),
                target: if i % 2 == 0 { 1.0 } else { -1.0 },
            })
            .collect();
        let refs: Vec<&LabeledSequence> = batch.iter().collect();
        let (l, g) = batch_loss_and_grads(&w, &refs).unwrap();
        assert!((l - loss(&w, &batch).unwrap()).abs() < 1e-12);

        let mut sum = Gradients::zeros(&w);
        for ex in &batch {
            let (_, gi) = batch_loss_and_grads(&w, &[ex]).unwrap();
            sum.add_assign(&gi);
        }
        sum.scale(1.0 / 40.0);
        for (a, b) in g.to_tensors(&w).iter().zip(sum.to_tensors(&w)) {
            for (x, y) in a.data().iter().zip(b.data()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tanh_output_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut w = ModelWeights::<f64>::init(&ModelConfig::micro(20, Head::Tanh), 8).unwrap();
        for v in w.head_weight.value.data_mut() {
            *v *= 50.0;
        }
        let batch: Vec<EncodedSequence> = (0..20).map(|_| random_seq(&mut rng, 20)).collect();
        for s in forward(&batch, &w).unwrap() {
            let x = s.scalar();
            assert!((-1.0..=1.0).contains(&x));
        }
    }
}
