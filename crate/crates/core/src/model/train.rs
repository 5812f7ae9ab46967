use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Head, TrainConfig};
use super::network::{batch_loss_and_grads, forward, LabeledSequence};
use super::weights::ModelWeights;
use crate::error::{Result, SocError};
use crate::eval::{classify, SentimentClass};
use crate::nncore::{adam_update, AdamState, Real};
use crate::textprep::EncodedSequence;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-example training loss over the epoch.
    pub train_loss: f64,
    pub eval_accuracy: f64,
}

impl EpochRecord {
    pub const CSV_HEADER: &'static str = "epoch,train_loss,eval_accuracy";

    pub fn log_to_csv(log: &[EpochRecord]) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        for r in log {
            out.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.eval_accuracy));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    /// Weights after the epoch with the highest eval accuracy (earliest on ties).
    pub best_weights: ModelWeights<F>,
    pub best_epoch: usize,
    pub best_accuracy: f64,
    /// Optimizer steps taken when the best weights were recorded.
    pub best_step: u64,
    pub log: Vec<EpochRecord>,
}

/// Accuracy of `w` on `set`. Sets containing any neutral target are scored
/// with three-way bucketing, others with the binary decision.
pub fn accuracy<F: Real>(w: &ModelWeights<F>, set: &[LabeledSequence]) -> Result<f64> {
    if set.is_empty() {
        return Err(SocError::Input("cannot measure accuracy on an empty set".into()));
    }
    let ternary = set.iter().any(|ex| ex.target == 0.0);
    let seqs: Vec<EncodedSequence> = set.iter().map(|ex| ex.seq.clone()).collect();
    let scores = forward(&seqs, w)?;
    let correct = scores
        .iter()
        .zip(set)
        .filter(|(s, ex)| classify(s, ternary) == SentimentClass::from_target(ex.target))
        .count();
    Ok(correct as f64 / set.len() as f64)
}

/// Trains with seeded shuffled minibatches and Adam, keeping the weights of
/// the epoch with the best eval accuracy. An empty `eval_set` means the
/// training set is used for model selection.
pub fn train<F: Real>(
    initial: ModelWeights<F>,
    train_set: &[LabeledSequence],
    eval_set: &[LabeledSequence],
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<TrainOutcome<F>> {
    cfg.validate()?;
    if train_set.is_empty() {
        return Err(SocError::Input("training set is empty".into()));
    }
    let head = initial.config.head;
    for (i, ex) in train_set.iter().chain(eval_set).enumerate() {
        let ok = match head {
            Head::Softmax => ex.target == 1.0 || ex.target == -1.0,
            Head::Tanh => (-1.0..=1.0).contains(&ex.target),
        };
        if !ok {
            return Err(SocError::Input(format!(
                "example {i}: target {} is not valid for the {head:?} head",
                ex.target
            )));
        }
    }
    let eval_set = if eval_set.is_empty() { train_set } else { eval_set };

    let mut weights = initial;
    let trainable_embedding = weights.config.embeddings_trainable;
    let mut states: Vec<AdamState<F>> = weights
        .params()
        .into_iter()
        .map(|p| AdamState::for_parameter(p, cfg.lr))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut step: u64 = 0;
    let mut log = Vec::with_capacity(cfg.max_epochs);
    let mut best: Option<(ModelWeights<F>, usize, f64, u64)> = None;

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0f64;
        for (batch_idx, chunk) in order.chunks(cfg.batch_size).enumerate() {
            let batch: Vec<&LabeledSequence> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, grads) = batch_loss_and_grads(&weights, &batch)?;
            let loss = loss.as_f64();
            if !loss.is_finite() || !grads.all_finite() {
                return Err(SocError::Diverged {
                    step: step + 1,
                    epoch,
                    batch: batch_idx,
                    loss,
                });
            }
            loss_sum += loss * batch.len() as f64;
            grads.write_into(&mut weights);
            for (i, (param, state)) in weights.params_mut().into_iter().zip(states.iter_mut()).enumerate() {
                if i == 0 && !trainable_embedding {
                    continue;
                }
                adam_update(param, state);
            }
            step += 1;
        }
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            eval_accuracy: accuracy(&weights, eval_set)?,
        };
        on_epoch(&record);
        log.push(record);
        if best.as_ref().is_none_or(|b| record.eval_accuracy > b.2) {
            best = Some((weights.clone(), epoch, record.eval_accuracy, step));
        }
    }

    let (best_weights, best_epoch, best_accuracy, best_step) = best.expect("at least one epoch");
    Ok(TrainOutcome {
        best_weights,
        best_epoch,
        best_accuracy,
        best_step,
        log,
    })
}
