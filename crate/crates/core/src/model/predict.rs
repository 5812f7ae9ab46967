use serde::Serialize;

use super::checkpoint::Checkpoint;
use super::config::Head;
use super::network::forward_example;
use super::weights::ModelWeights;
use super::SentimentScore;
use crate::error::{Result, SocError};
use crate::eval::{binarize, bucketize, SentimentClass};
use crate::nncore::Real;
use crate::textprep::{encode_with_len, tokenize, TokenizerConfig, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub score: SentimentScore,
    /// Signed score in `[-1, 1]`, see [`SentimentScore::scalar`].
    pub scalar: f64,
    /// Three-way bucket for the tanh head, binary decision for softmax.
    pub label: SentimentClass,
}

/// A trained model bundled with the vocabulary and tokenizer it expects.
#[derive(Debug, Clone)]
pub struct Predictor<F> {
    pub weights: ModelWeights<F>,
    pub vocab: Vocabulary,
    pub tokenizer: TokenizerConfig,
}

impl<F: Real> Predictor<F> {
    pub fn new(weights: ModelWeights<F>, vocab: Vocabulary, tokenizer: TokenizerConfig) -> Result<Self> {
        if vocab.len() != weights.config.vocab_size {
            return Err(SocError::Config(format!(
                "vocabulary has {} entries, model expects {}",
                vocab.len(),
                weights.config.vocab_size
            )));
        }
        Ok(Self {
            weights,
            vocab,
            tokenizer,
        })
    }

    /// Refuses a vocabulary whose fingerprint differs from the one recorded
    /// in the checkpoint.
    pub fn from_checkpoint(ckpt: Checkpoint<F>, vocab: Vocabulary) -> Result<Self> {
        let found = vocab.fingerprint();
        if found != ckpt.vocab_sha256 {
            return Err(SocError::Config(format!(
                "vocabulary fingerprint {found} does not match checkpoint ({})",
                ckpt.vocab_sha256
            )));
        }
        Self::new(ckpt.weights, vocab, ckpt.tokenizer)
    }

    pub fn predict(&self, text: &str) -> Result<Prediction> {
        let tokens = tokenize(text, &self.tokenizer);
        let seq = encode_with_len(&tokens, &self.vocab, self.weights.config.max_len);
        let score = forward_example(&self.weights, &seq)?.score();
        let scalar = score.scalar();
        if !scalar.is_finite() {
            return Err(SocError::NonFinite(format!("score for {text:?} is {scalar}")));
        }
        let label = match self.weights.config.head {
            Head::Tanh => bucketize(scalar)?,
            Head::Softmax => binarize(&score),
        };
        Ok(Prediction { score, scalar, label })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModelConfig;
    use crate::textprep::build_vocab;

    fn vocab() -> Vocabulary {
        let corpus = vec![vec!["good".to_string(), "bad".to_string()]];
        build_vocab(&corpus, 1, None).unwrap()
    }

    #[test]
    fn predicts_within_range_and_labels_by_head() {
        let v = vocab();
        for head in [Head::Tanh, Head::Softmax] {
            let w = ModelWeights::<f32>::init(&ModelConfig::micro(v.len(), head), 4).unwrap();
            let p = Predictor::new(w, v.clone(), TokenizerConfig::default()).unwrap();
            let out = p.predict("Good, not BAD at all!").unwrap();
            assert!((-1.0..=1.0).contains(&out.scalar));
            if head == Head::Softmax {
                assert_ne!(out.label, SentimentClass::Neutral);
            }
        }
    }

    #[test]
    fn vocabulary_mismatch_is_rejected() {
        let v = vocab();
        let w = ModelWeights::<f32>::init(&ModelConfig::micro(v.len() + 1, Head::Tanh), 4).unwrap();
        assert!(Predictor::new(w.clone(), v.clone(), TokenizerConfig::default()).is_err());
        let ckpt = Checkpoint {
            weights: w,
            tokenizer: TokenizerConfig::default(),
            vocab_sha256: "0".repeat(64),
            step: 0,
        };
        assert!(Predictor::from_checkpoint(ckpt, v).is_err());
    }
}
