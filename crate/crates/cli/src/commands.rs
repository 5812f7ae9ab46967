use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use soc_core::data::{self, AmazonFields, DatasetSummary, LabeledExample};
use soc_core::eval::{classify, metrics, SentimentClass};
use soc_core::model::{
    forward, train, Checkpoint, EpochRecord, Head, LabeledSequence, ModelConfig, ModelWeights, TrainConfig,
};
use soc_core::nncore::{Real, DEFAULT_LR};
use soc_core::rank::{rank_tokens, ranking_to_csv, CommentStore, Window};
use soc_core::textprep::{
    build_vocab, encode_with_len, glove_words, load_glove, tokenize, EmbeddingTable, EncodedSequence,
    TokenizerConfig, Vocabulary, EMBED_DIM,
};
use soc_core::SocError;

use crate::args::{Arch, Cli, Command, DataArgs, DataFormat, Precision};
use crate::config::FileConfig;
use crate::error::{stdout_err, CliError, CliResult};
use crate::{serve, vocab_path_for, AnyPredictor};

const DEFAULT_EVAL_FRACTION: f64 = 0.1;
const DEFAULT_ADDR: &str = "127.0.0.1:8080";

/// Options shared by every subcommand after merging flags, config file and
/// environment.
struct Settings {
    file: FileConfig,
    seed: u64,
    precision: Precision,
}

impl Settings {
    fn resolve(cli: &Cli) -> CliResult<Self> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = match cli.seed {
            Some(s) => s,
            None => match file.get::<u64>("seed")? {
                Some(s) => s,
                None => match std::env::var("SOC_SEED") {
                    Ok(v) => v
                        .trim()
                        .parse()
                        .map_err(|_| CliError::Usage(format!("SOC_SEED={v:?} is not an unsigned integer")))?,
                    Err(_) => 0,
                },
            },
        };
        let precision = match cli.precision {
            Some(p) => p,
            None => file.get("precision")?.unwrap_or(Precision::F32),
        };
        Ok(Self { file, seed, precision })
    }

    fn pick<T>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T>
    where
        T: std::str::FromStr,
        T::Err: std::fmt::Display,
    {
        Ok(match flag {
            Some(v) => v,
            None => self.file.get(key)?.unwrap_or(default),
        })
    }
}

fn require_file(path: &Path) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(SocError::Input(format!("{} does not exist or is not a file", path.display())).into())
    }
}

fn guess_format(path: &Path) -> CliResult<DataFormat> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "csv" => Ok(DataFormat::Sentiment140),
        "tsv" | "txt" => Ok(DataFormat::Tsv),
        "json" | "jsonl" => Ok(DataFormat::Amazon),
        _ => Err(CliError::Usage(format!(
            "cannot guess the format of {}; pass --format",
            path.display()
        ))),
    }
}

fn load_file(path: &Path, format: Option<DataFormat>, d: &DataArgs) -> CliResult<(Vec<LabeledExample>, DatasetSummary)> {
    require_file(path)?;
    let format = match format {
        Some(f) => f,
        None => guess_format(path)?,
    };
    Ok(match format {
        DataFormat::Sentiment140 => data::load_sentiment140(path)?,
        DataFormat::Tsv => data::load_tsv(path)?,
        DataFormat::Amazon => data::load_amazon(
            path,
            &AmazonFields {
                rating: d.rating_field.clone(),
                text: d.text_field.clone(),
            },
        )?,
    })
}

fn load_examples(d: &DataArgs, s: &Settings) -> CliResult<Vec<LabeledExample>> {
    let (examples, summary) = load_file(&d.data, d.format, d)?;
    eprintln!(
        "{}: {} rows, {} accepted, {} dropped ({} malformed)",
        summary.source,
        summary.total_rows,
        summary.accepted(),
        summary.dropped,
        summary.malformed
    );
    let limit = match d.max_examples {
        Some(n) => Some(n),
        None => s.file.get("max_examples")?,
    };
    Ok(match limit {
        Some(n) => data::subsample(&examples, n, s.seed),
        None => examples,
    })
}

fn tokenized(examples: &[LabeledExample], cfg: &TokenizerConfig) -> Vec<Vec<String>> {
    examples.iter().map(|ex| tokenize(&ex.text, cfg)).collect()
}

/// Pairs each example usable by `head` with its encoded text.
fn labelled(
    examples: &[LabeledExample],
    tokens: &[Vec<String>],
    vocab: &Vocabulary,
    head: Head,
    max_len: usize,
) -> Vec<LabeledSequence> {
    examples
        .iter()
        .zip(tokens)
        .filter_map(|(ex, toks)| {
            ex.target_for(head).map(|target| LabeledSequence {
                seq: encode_with_len(toks, vocab, max_len),
                target,
            })
        })
        .collect()
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let s = Settings::resolve(&cli)?;
    match cli.command {
        Command::Prepare {
            data,
            embeddings,
            embed_dim,
            min_count,
            out_dir,
        } => prepare(&s, &data, embeddings.as_deref(), embed_dim, min_count, &out_dir, out),
        Command::Train { .. } => match s.precision {
            Precision::F32 => train_cmd::<f32>(&s, cli.command, out),
            Precision::F64 => train_cmd::<f64>(&s, cli.command, out),
        },
        Command::Eval { model, data, csv } => {
            let predictor = AnyPredictor::load(&model.checkpoint, model.vocab.as_deref(), s.precision)?;
            eval_cmd(&s, &predictor, &data, csv, out)
        }
        Command::Predict { model, text } => {
            let predictor = AnyPredictor::load(&model.checkpoint, model.vocab.as_deref(), s.precision)?;
            predict_cmd(&predictor, text, out)
        }
        Command::Rank {
            store,
            from,
            to,
            checkpoint,
            vocab,
        } => {
            let window = Window::new(from, to)?;
            let store = CommentStore::load(&store)?;
            let predictor = match checkpoint {
                Some(c) => Some(AnyPredictor::load(&c, vocab.as_deref(), s.precision)?),
                None => None,
            };
            let ranked = rank_tokens(&store, &window, |r| match &predictor {
                Some(p) => p.predict(&r.text).map(|p| p.scalar),
                None => Err(SocError::Input("record has no score and no --checkpoint was given".into())),
            })?;
            out.write_all(ranking_to_csv(&ranked).as_bytes()).map_err(stdout_err)
        }
        Command::Serve { model, store, addr } => {
            let predictor = AnyPredictor::load(&model.checkpoint, model.vocab.as_deref(), s.precision)?;
            let store = match store {
                Some(p) => CommentStore::load(&p)?,
                None => CommentStore::default(),
            };
            let addr = s.pick(addr, "addr", DEFAULT_ADDR.to_string())?;
            serve::serve_blocking(predictor, store, &addr)
        }
    }
}

fn prepare(
    s: &Settings,
    d: &DataArgs,
    embeddings: Option<&Path>,
    embed_dim: Option<usize>,
    min_count: Option<usize>,
    out_dir: &Path,
    out: &mut dyn Write,
) -> CliResult<()> {
    if let Some(p) = embeddings {
        require_file(p)?;
    }
    let examples = load_examples(d, s)?;
    let tokens = tokenized(&examples, &TokenizerConfig::default());
    let min_count = s.pick(min_count, "min_count", 1)?;
    let dim = s.pick(embed_dim, "embed_dim", EMBED_DIM)?;
    let pretrained = embeddings.map(glove_words).transpose()?;
    let vocab = build_vocab(&tokens, min_count, pretrained.as_ref())?;
    let table = match embeddings {
        Some(p) => load_glove(p, dim, &vocab, s.seed)?,
        None => EmbeddingTable::random(&vocab, dim, s.seed),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| SocError::io(out_dir, e))?;
    let vocab_path = out_dir.join("vocab.tsv");
    let emb_path = out_dir.join("embeddings.txt");
    vocab.save(&vocab_path)?;
    table.save_text(&vocab, &emb_path)?;
    let summary = json!({
        "examples": examples.len(),
        "vocab_size": vocab.len(),
        "vocab_sha256": vocab.fingerprint(),
        "embed_dim": dim,
        "vocab": vocab_path,
        "embeddings": emb_path,
    });
    writeln!(out, "{summary}").map_err(stdout_err)
}

fn train_cmd<F: Real>(s: &Settings, cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    let Command::Train {
        data,
        eval_data,
        eval_fraction,
        vocab,
        embeddings,
        min_count,
        head,
        arch,
        embed_dim,
        freeze_embeddings,
        epochs,
        batch_size,
        lr,
        out: ckpt_path,
        log,
    } = cmd
    else {
        unreachable!("dispatched on Command::Train");
    };
    // fail on missing inputs before any expensive work
    for p in [Some(&data.data), eval_data.as_ref(), vocab.as_ref(), embeddings.as_ref()]
        .into_iter()
        .flatten()
    {
        require_file(p)?;
    }
    let head = s.pick(head, "head", Head::Softmax)?;
    let arch = s.pick(arch, "arch", Arch::Standard)?;
    let train_cfg = TrainConfig {
        batch_size: s.pick(batch_size, "batch_size", TrainConfig::default().batch_size)?,
        max_epochs: s.pick(epochs, "epochs", TrainConfig::default().max_epochs)?,
        lr: s.pick(lr, "lr", DEFAULT_LR)?,
        seed: s.seed,
    };
    train_cfg.validate()?;
    let eval_fraction = s.pick(eval_fraction, "eval_fraction", DEFAULT_EVAL_FRACTION)?;
    if !(0.0..1.0).contains(&eval_fraction) {
        return Err(CliError::Usage(format!("eval fraction {eval_fraction} must be in [0, 1)")));
    }
    let freeze = freeze_embeddings || s.file.get::<bool>("freeze_embeddings")?.unwrap_or(false);

    let examples = load_examples(&data, s)?;
    let (train_ex, eval_ex) = match &eval_data {
        Some(p) => (examples, load_file(p, data.format, &data)?.0),
        None => data::split_train_eval(&examples, eval_fraction, s.seed),
    };
    let tok_cfg = TokenizerConfig::default();
    let train_tokens = tokenized(&train_ex, &tok_cfg);
    let eval_tokens = tokenized(&eval_ex, &tok_cfg);

    let vocab = match &vocab {
        Some(p) => Vocabulary::load(p)?,
        None => {
            let pretrained = embeddings.as_deref().map(glove_words).transpose()?;
            build_vocab(&train_tokens, s.pick(min_count, "min_count", 1)?, pretrained.as_ref())?
        }
    };
    let mut config = match arch {
        Arch::Standard => ModelConfig::standard(vocab.len(), head),
        Arch::Micro => ModelConfig::micro(vocab.len(), head),
    };
    config.embed_dim = s.pick(embed_dim, "embed_dim", config.embed_dim)?;
    config.embeddings_trainable = !freeze;
    let mut weights = ModelWeights::<F>::init(&config, s.seed)?;
    if let Some(p) = &embeddings {
        weights.set_embeddings(&load_glove(p, config.embed_dim, &vocab, s.seed)?)?;
    }

    let train_set = labelled(&train_ex, &train_tokens, &vocab, head, config.max_len);
    let eval_set = labelled(&eval_ex, &eval_tokens, &vocab, head, config.max_len);
    eprintln!(
        "training {:?} head on {} examples, selecting on {} ({} parameters)",
        head,
        train_set.len(),
        if eval_set.is_empty() { train_set.len() } else { eval_set.len() },
        weights.parameter_count()
    );

    let mut log_file = match &log {
        Some(p) => {
            let f = File::create(p).map_err(|e| SocError::io(p, e))?;
            let mut w = BufWriter::new(f);
            writeln!(w, "{}", EpochRecord::CSV_HEADER).map_err(|e| SocError::io(p, e))?;
            Some((w, p.clone()))
        }
        None => None,
    };
    let mut log_error = None;
    let outcome = train(weights, &train_set, &eval_set, &train_cfg, |r| {
        eprintln!(
            "epoch {:>4}  loss {:.6}  eval accuracy {:.4}",
            r.epoch, r.train_loss, r.eval_accuracy
        );
        if let Some((w, p)) = log_file.as_mut() {
            let res = writeln!(w, "{},{},{}", r.epoch, r.train_loss, r.eval_accuracy).and_then(|_| w.flush());
            if let Err(e) = res {
                log_error.get_or_insert(SocError::io(p.clone(), e));
            }
        }
    })?;
    if let Some(e) = log_error {
        return Err(e.into());
    }
    if log.is_none() {
        out.write_all(EpochRecord::log_to_csv(&outcome.log).as_bytes())
            .map_err(stdout_err)?;
    }

    let ckpt = Checkpoint {
        weights: outcome.best_weights,
        tokenizer: tok_cfg,
        vocab_sha256: vocab.fingerprint(),
        step: outcome.best_step,
    };
    ckpt.save(&ckpt_path)?;
    vocab.save(&vocab_path_for(&ckpt_path))?;
    eprintln!(
        "best epoch {} (eval accuracy {:.4}) saved to {}",
        outcome.best_epoch,
        outcome.best_accuracy,
        ckpt_path.display()
    );
    Ok(())
}

fn eval_cmd(s: &Settings, predictor: &AnyPredictor, d: &DataArgs, csv: bool, out: &mut dyn Write) -> CliResult<()> {
    let examples = load_examples(d, s)?;
    let head = predictor.head();
    let (vocab, max_len) = match predictor {
        AnyPredictor::F32(p) => (&p.vocab, p.weights.config.max_len),
        AnyPredictor::F64(p) => (&p.vocab, p.weights.config.max_len),
    };
    let tokenizer = match predictor {
        AnyPredictor::F32(p) => p.tokenizer,
        AnyPredictor::F64(p) => p.tokenizer,
    };
    let set = labelled(&examples, &tokenized(&examples, &tokenizer), vocab, head, max_len);
    if set.is_empty() {
        return Err(SocError::Input(format!("{} holds no examples usable by the {head:?} head", d.data.display())).into());
    }
    let seqs: Vec<EncodedSequence> = set.iter().map(|ex| ex.seq.clone()).collect();
    let scores = match predictor {
        AnyPredictor::F32(p) => forward(&seqs, &p.weights)?,
        AnyPredictor::F64(p) => forward(&seqs, &p.weights)?,
    };
    let ternary = set.iter().any(|ex| ex.target == 0.0);
    let predicted: Vec<SentimentClass> = scores.iter().map(|sc| classify(sc, ternary)).collect();
    let gold: Vec<SentimentClass> = set.iter().map(|ex| SentimentClass::from_target(ex.target)).collect();
    let report = metrics(&predicted, &gold)?;
    let text = if csv { report.to_csv() } else { report.to_table() };
    out.write_all(text.as_bytes()).map_err(stdout_err)
}

fn predict_cmd(predictor: &AnyPredictor, texts: Vec<String>, out: &mut dyn Write) -> CliResult<()> {
    let texts = if texts.is_empty() {
        std::io::stdin()
            .lock()
            .lines()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| SocError::io(PathBuf::from("<stdin>"), e))?
    } else {
        texts
    };
    for text in texts {
        let p = predictor.predict(&text)?;
        let line = json!({"text": text, "score": p.scalar, "bucket": p.label});
        writeln!(out, "{line}").map_err(stdout_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_are_guessed_from_extensions() {
        assert_eq!(guess_format(Path::new("a.csv")).unwrap(), DataFormat::Sentiment140);
        assert_eq!(guess_format(Path::new("a.TSV")).unwrap(), DataFormat::Tsv);
        assert_eq!(guess_format(Path::new("a.jsonl")).unwrap(), DataFormat::Amazon);
        assert!(matches!(guess_format(Path::new("a.bin")), Err(CliError::Usage(_))));
    }

    #[test]
    fn vocab_path_sits_next_to_checkpoint() {
        assert_eq!(vocab_path_for(Path::new("out/m.socm")), PathBuf::from("out/m.socm.vocab"));
    }

    #[test]
    fn unusable_examples_are_skipped_per_head() {
        let ex = vec![
            LabeledExample::ternary("fine", 0.0),
            LabeledExample::ternary("great", 1.0),
        ];
        let vocab = Vocabulary::new();
        let tokens = tokenized(&ex, &TokenizerConfig::default());
        assert_eq!(labelled(&ex, &tokens, &vocab, Head::Softmax, 64).len(), 1);
        assert_eq!(labelled(&ex, &tokens, &vocab, Head::Tanh, 64).len(), 2);
    }
}
