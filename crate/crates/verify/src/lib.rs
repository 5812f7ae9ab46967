//! Reference procedures shared by the acceptance suite: the desk-scale
//! Sentiment140 protocol and a literal re-computation of the token ranking.

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use soc_core::data::{self, LabeledExample};
use soc_core::model::{accuracy, train, Head, LabeledSequence, ModelConfig, ModelWeights, Predictor, TrainConfig};
use soc_core::rank::CommentRecord;
use soc_core::textprep::{build_vocab, encode_with_len, glove_words, load_glove, tokenize, TokenizerConfig, MAX_LEN};
use soc_core::Result;

#[derive(Debug, Clone)]
pub struct DeskScale {
    pub examples: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Use the small test architecture instead of the standard one.
    pub micro: bool,
}

impl Default for DeskScale {
    fn default() -> Self {
        Self {
            examples: 50_000,
            epochs: 4,
            batch_size: 64,
            lr: 1e-3,
            micro: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DeskResult {
    pub test_accuracy: f64,
    /// Scalar score of "Wow... Loved this place."
    pub wow_score: f64,
    /// Train, validation and test set sizes.
    pub sizes: (usize, usize, usize),
}

fn labelled(examples: &[LabeledExample], tokens: &[Vec<String>], vocab: &soc_core::textprep::Vocabulary) -> Vec<LabeledSequence> {
    examples
        .iter()
        .zip(tokens)
        .filter_map(|(e, t)| {
            e.target_for(Head::Softmax).map(|target| LabeledSequence {
                seq: encode_with_len(t, vocab, MAX_LEN),
                target,
            })
        })
        .collect()
}

/// Seeded subsample of a Sentiment140 CSV, split 80/10/10 into train,
/// validation (model selection) and held-out test; trains the softmax head
/// at 32-bit precision and reports held-out accuracy.
pub fn desk_scale_run(
    path: &Path,
    glove: Option<&Path>,
    p: &DeskScale,
    seed: u64,
    mut on_epoch: impl FnMut(usize, f64, f64),
) -> Result<DeskResult> {
    let (all, _) = data::load_sentiment140(path)?;
    let sample = data::subsample(&all, p.examples, seed);
    let (rest, test) = data::split_train_eval(&sample, 0.1, seed);
    let (train_ex, val) = data::split_train_eval(&rest, 1.0 / 9.0, seed + 1);

    let tok = TokenizerConfig::default();
    let toks = |ex: &[LabeledExample]| -> Vec<Vec<String>> { ex.iter().map(|e| tokenize(&e.text, &tok)).collect() };
    let train_tokens = toks(&train_ex);
    let pretrained = glove.map(glove_words).transpose()?;
    let vocab = build_vocab(&train_tokens, 1, pretrained.as_ref())?;

    let config = if p.micro {
        ModelConfig::micro(vocab.len(), Head::Softmax)
    } else {
        ModelConfig::standard(vocab.len(), Head::Softmax)
    };
    let mut weights = ModelWeights::<f32>::init(&config, seed)?;
    if let Some(g) = glove {
        weights.set_embeddings(&load_glove(g, config.embed_dim, &vocab, seed)?)?;
    }

    let train_set = labelled(&train_ex, &train_tokens, &vocab);
    let val_set = labelled(&val, &toks(&val), &vocab);
    let test_set = labelled(&test, &toks(&test), &vocab);
    let cfg = TrainConfig {
        batch_size: p.batch_size,
        max_epochs: p.epochs,
        lr: p.lr,
        seed,
    };
    let outcome = train(weights, &train_set, &val_set, &cfg, |r| {
        on_epoch(r.epoch, r.train_loss, r.eval_accuracy)
    })?;
    let test_accuracy = accuracy(&outcome.best_weights, &test_set)?;
    let predictor = Predictor::new(outcome.best_weights, vocab, tok)?;
    let wow_score = predictor.predict("Wow... Loved this place.")?.scalar;
    Ok(DeskResult {
        test_accuracy,
        wow_score,
        sizes: (train_set.len(), val_set.len(), test_set.len()),
    })
}

/// One row of a ranking: token, in-window count, weight, mean score and
/// adjusted score.
pub type RankRow = (String, u64, f64, f64, f64);

/// Ranking computed straight from the definition with nested loops over
/// every record. Every record must carry a score.
pub fn rank_by_definition(records: &[CommentRecord], start: NaiveDate, end: NaiveDate) -> Vec<RankRow> {
    let tokens: BTreeSet<&str> = records.iter().map(|r| r.token.as_str()).collect();
    let mut sums = Vec::new();
    for &t in &tokens {
        let mut m = 0u64;
        let mut sum = 0.0;
        for r in records {
            if r.token == t && r.day >= start && r.day <= end {
                m += 1;
                sum += r.score.expect("scored record");
            }
        }
        sums.push((t.to_string(), m, sum));
    }
    let mut max = 0u64;
    for s in &sums {
        max = max.max(s.1);
    }
    let mut rows: Vec<RankRow> = sums
        .into_iter()
        .map(|(t, m, sum)| {
            let w = if max == 0 { 0.0 } else { m as f64 / max as f64 };
            let orig = if m == 0 { 0.0 } else { sum / m as f64 };
            (t, m, w, orig, orig * w)
        })
        .collect();
    rows.sort_by(|a, b| b.4.partial_cmp(&a.4).expect("finite scores").then_with(|| a.0.cmp(&b.0)));
    rows
}
