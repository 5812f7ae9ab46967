use serde_json::Value;
use soc_core::model::{Checkpoint, Head, ModelConfig, ModelWeights};
use soc_core::textprep::{build_vocab, TokenizerConfig};
use soc_demo::{bucket, Demo};

const STORE: &str = concat!(
    "{\"token\":\"BTC\",\"date\":\"2018-11-04\",\"text\":\"to the moon\",\"score\":0.8}\n",
    "{\"token\":\"BTC\",\"date\":\"2018-11-05\",\"text\":\"meh\",\"score\":0.0}\n",
    "{\"token\":\"ETH\",\"date\":\"2018-11-05\",\"text\":\"ok\",\"score\":0.5}\n",
    "{\"token\":\"ETH\",\"date\":\"2018-12-01\",\"text\":\"late\",\"score\":-1.0}\n",
);

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

/// A zero-weight model serialised the way the CLI writes it.
fn zero_model() -> (Vec<u8>, String) {
    let vocab = build_vocab([vec!["good".to_string(), "bad".to_string()]], 1, None).unwrap();
    let weights = ModelWeights::<f32>::zeros(&ModelConfig::micro(vocab.len(), Head::Tanh)).unwrap();
    let ckpt = Checkpoint {
        weights,
        tokenizer: TokenizerConfig::default(),
        vocab_sha256: vocab.fingerprint(),
        step: 4,
    };
    (ckpt.to_bytes(), vocab.to_tsv())
}

#[test]
fn tokenize_without_model_has_no_indices() {
    let v = parse(&Demo::new().tokenize("Loved it!! @bob http://x.io"));
    assert_eq!(v["tokens"], serde_json::json!(["loved", "it", "!", "!"]));
    assert!(v["indices"].is_null());
}

#[test]
fn rank_scored_store_without_model() {
    let rows = parse(&Demo::new().rank(STORE, "2018-11-04", "2018-11-10").unwrap());
    let rows = rows.as_array().unwrap();
    assert_eq!(rows[0]["token"], "BTC");
    assert_eq!(rows[0]["M"], 2);
    assert_eq!(rows[1]["token"], "ETH");
    assert_eq!(rows[1]["W"], 0.5);
    assert_eq!(rows[1]["score_adj"], 0.25);
}

#[test]
fn rank_reports_bad_input() {
    let demo = Demo::new();
    assert!(demo.rank(STORE, "2018-11-10", "2018-11-04").is_err());
    assert!(demo.rank(STORE, "last week", "2018-11-04").unwrap_err().contains("from"));
    assert!(demo.rank("{oops", "2018-11-04", "2018-11-10").is_err());
    let unscored = "{\"token\":\"ADA\",\"date\":\"2018-11-05\",\"text\":\"nice\"}\n";
    assert!(demo.rank(unscored, "2018-11-04", "2018-11-10").unwrap_err().contains("no model"));
}

#[test]
fn score_needs_a_model_then_uses_it() {
    let mut demo = Demo::new();
    assert!(demo.score("good").is_err());
    let (bytes, vocab) = zero_model();
    let summary = parse(&demo.load_model(&bytes, &vocab).unwrap());
    assert_eq!(summary["head"], "tanh");
    assert_eq!(summary["step"], 4);
    assert!(demo.has_model());
    assert_eq!(parse(&demo.score("good").unwrap()), serde_json::json!({"score": 0.0, "bucket": "neutral"}));
    let t = parse(&demo.tokenize("good zebra"));
    // "bad" sorts before "good" on the frequency tie
    assert_eq!(t["indices"], serde_json::json!([3, 1]));
    let unscored = "{\"token\":\"ADA\",\"date\":\"2018-11-05\",\"text\":\"nice\"}\n";
    assert!(demo.rank(unscored, "2018-11-04", "2018-11-10").is_ok());
}

#[test]
fn mismatched_vocabulary_is_rejected() {
    let (bytes, _) = zero_model();
    let mut demo = Demo::new();
    let err = demo.load_model(&bytes, "<pad>\t0\n<unk>\t1\nother\t2\nwords\t3\n").unwrap_err();
    assert!(err.contains("fingerprint"), "{err}");
    assert!(demo.load_model(b"nope", "").is_err());
    assert!(!demo.has_model());
}

#[test]
fn bucket_thresholds() {
    assert_eq!(bucket(0.34).unwrap(), "positive");
    assert_eq!(bucket(0.33).unwrap(), "neutral");
    assert_eq!(bucket(-0.5).unwrap(), "negative");
    assert!(bucket(f64::NAN).is_err());
}
