//! WebAssembly bindings behind `www/index.html`.
//!
//! Every exported method returns plain strings (JSON on success, a message on
//! failure) so the same code paths are exercised by native tests.

use chrono::NaiveDate;
use serde_json::json;
use soc_core::eval::bucketize;
use soc_core::model::{Checkpoint, Predictor};
use soc_core::rank::{rank_tokens, CommentStore, Window};
use soc_core::textprep::{encode_with_len, tokenize, TokenizerConfig, Vocabulary};
use soc_core::SocError;
use wasm_bindgen::prelude::*;

type Outcome = Result<String, String>;

fn msg(e: SocError) -> String {
    e.to_string()
}

fn date(label: &str, raw: &str) -> Result<NaiveDate, String> {
    raw.trim()
        .parse()
        .map_err(|e| format!("{label} date {raw:?} is not YYYY-MM-DD ({e})"))
}

/// Page state: an optional model uploaded by the user.
#[wasm_bindgen]
#[derive(Default)]
pub struct Demo {
    predictor: Option<Predictor<f32>>,
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Demo {
        Demo::default()
    }

    #[wasm_bindgen(js_name = hasModel)]
    pub fn has_model(&self) -> bool {
        self.predictor.is_some()
    }

    /// Loads a checkpoint and its vocabulary file; returns a JSON summary.
    #[wasm_bindgen(js_name = loadModel)]
    pub fn load_model(&mut self, checkpoint: &[u8], vocab_tsv: &str) -> Outcome {
        let ckpt = Checkpoint::<f32>::from_bytes(checkpoint).map_err(msg)?;
        let vocab = Vocabulary::from_tsv(vocab_tsv, "vocabulary").map_err(msg)?;
        let step = ckpt.step;
        let predictor = Predictor::from_checkpoint(ckpt, vocab).map_err(msg)?;
        let c = &predictor.weights.config;
        let summary = json!({
            "head": format!("{:?}", c.head).to_lowercase(),
            "vocab_size": c.vocab_size,
            "embed_dim": c.embed_dim,
            "lstm_hidden": c.lstm_hidden,
            "step": step,
        });
        self.predictor = Some(predictor);
        Ok(summary.to_string())
    }

    /// Tokens and, when a model is loaded, their vocabulary indices.
    pub fn tokenize(&self, text: &str) -> String {
        let cfg = self.predictor.as_ref().map_or_else(TokenizerConfig::default, |p| p.tokenizer);
        let tokens = tokenize(text, &cfg);
        let indices = self.predictor.as_ref().map(|p| {
            let seq = encode_with_len(&tokens, &p.vocab, p.weights.config.max_len);
            seq.indices[..seq.true_length].to_vec()
        });
        json!({ "tokens": tokens, "indices": indices }).to_string()
    }

    /// Scores one text with the loaded model.
    pub fn score(&self, text: &str) -> Outcome {
        let p = self.predictor.as_ref().ok_or("load a checkpoint first")?;
        let pred = p.predict(text).map_err(msg)?;
        Ok(json!({ "score": pred.scalar, "bucket": pred.label }).to_string())
    }

    /// Ranks the tokens of a JSON-lines comment store over an inclusive
    /// window. Unscored comments need a loaded model.
    pub fn rank(&self, store_jsonl: &str, from: &str, to: &str) -> Outcome {
        let store = CommentStore::from_jsonl(store_jsonl.as_bytes(), "store").map_err(msg)?;
        let window = Window::new(date("from", from)?, date("to", to)?).map_err(msg)?;
        let entries = rank_tokens(&store, &window, |r| match &self.predictor {
            Some(p) => p.predict(&r.text).map(|x| x.scalar),
            None => Err(SocError::Input("comment has no score and no model is loaded".into())),
        })
        .map_err(msg)?;
        let rows: Vec<_> = entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                json!({
                    "rank": i + 1,
                    "token": e.token,
                    "M": e.count,
                    "W": e.weight,
                    "score_orig": e.score_orig,
                    "score_adj": e.score_adj,
                })
            })
            .collect();
        Ok(serde_json::Value::Array(rows).to_string())
    }
}

/// Bucket name for a score in `[-1, 1]`.
#[wasm_bindgen]
pub fn bucket(score: f64) -> Outcome {
    bucketize(score).map(|c| c.to_string()).map_err(msg)
}
