//! Text cleaning, vocabulary construction, pre-trained embedding loading and
//! fixed-length encoding.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::LazyLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, SocError};

/// Fixed sequence length every text is padded or truncated to.
pub const MAX_LEN: usize = 64;
pub const PAD_INDEX: u32 = 0;
pub const UNK_INDEX: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Default pre-trained embedding width.
pub const EMBED_DIM: usize = 100;

/// Range of the uniform distribution used for words without a pre-trained vector.
pub const OOV_INIT_RANGE: f32 = 0.05;

static URL_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S*").expect("valid url regex"));
static USER_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"@\w+").expect("valid user regex"));
static HASHTAG_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"#\w+").expect("valid hashtag regex"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub strip_usernames: bool,
    pub strip_hashtags: bool,
    pub strip_urls: bool,
    pub split_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            strip_usernames: true,
            strip_hashtags: true,
            strip_urls: true,
            split_punctuation: true,
        }
    }
}

/// Cleans `text` and splits it into tokens.
///
/// Removal of URLs, `@user` mentions and `#hashtags` happens on the raw text
/// before punctuation splitting. Lone `@`/`#` characters left over after
/// splitting are dropped as well, so no output token ever starts with either.
pub fn tokenize(text: &str, cfg: &TokenizerConfig) -> Vec<String> {
    let mut cleaned = if cfg.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    if cfg.strip_urls {
        cleaned = URL_RE.replace_all(&cleaned, " ").into_owned();
    }
    if cfg.strip_usernames {
        cleaned = USER_RE.replace_all(&cleaned, " ").into_owned();
    }
    if cfg.strip_hashtags {
        cleaned = HASHTAG_RE.replace_all(&cleaned, " ").into_owned();
    }

    let mut tokens = Vec::new();
    for chunk in cleaned.split_whitespace() {
        if cfg.split_punctuation {
            split_punctuation(chunk, &mut tokens);
        } else {
            tokens.push(chunk.to_string());
        }
    }
    tokens.retain(|t| {
        !(cfg.strip_usernames && t.starts_with('@'))
            && !(cfg.strip_hashtags && t.starts_with('#'))
            && !(cfg.strip_urls && is_url(t))
    });
    tokens
}

/// Same as [`tokenize`] for raw bytes; invalid UTF-8 is replaced lossily.
pub fn tokenize_bytes(bytes: &[u8], cfg: &TokenizerConfig) -> Vec<String> {
    tokenize(&String::from_utf8_lossy(bytes), cfg)
}

fn is_url(token: &str) -> bool {
    let lower = token.to_lowercase();
    lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")
}

// Alphanumeric runs stay together (an apostrophe flanked by alphanumerics is
// part of the word); every other non-space character becomes its own token.
fn split_punctuation(chunk: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = chunk.chars().collect();
    let mut word = String::new();
    for (i, &ch) in chars.iter().enumerate() {
        let inner_apostrophe = (ch == '\'' || ch == '\u{2019}')
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|c| c.is_alphanumeric());
        if ch.is_alphanumeric() || inner_apostrophe {
            word.push(ch);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(ch.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
}

/// Token to index map. Index 0 is padding and index 1 is the unknown token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_index: HashMap<String, u32>,
    index_to_token: Vec<String>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self::new()
    }
}

impl Vocabulary {
    /// A vocabulary holding only the reserved pad and unk entries.
    pub fn new() -> Self {
        let mut v = Self {
            token_to_index: HashMap::new(),
            index_to_token: Vec::new(),
        };
        v.push(PAD_TOKEN.to_string());
        v.push(UNK_TOKEN.to_string());
        v
    }

    fn push(&mut self, token: String) -> u32 {
        let idx = self.index_to_token.len() as u32;
        self.token_to_index.insert(token.clone(), idx);
        self.index_to_token.push(token);
        idx
    }

    pub fn len(&self) -> usize {
        self.index_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_to_token.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.token_to_index.get(token).copied()
    }

    pub fn index_or_unk(&self, token: &str) -> u32 {
        self.get(token).unwrap_or(UNK_INDEX)
    }

    pub fn token(&self, index: u32) -> Option<&str> {
        self.index_to_token.get(index as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> impl Iterator<Item = (&str, u32)> {
        self.index_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32))
    }

    /// Serialises as UTF-8 lines `token<TAB>index` in index order.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (tok, idx) in self.tokens() {
            out.push_str(tok);
            out.push('\t');
            out.push_str(&idx.to_string());
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str, source_name: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (tok, idx) = line
                .rsplit_once('\t')
                .ok_or_else(|| SocError::format(source_name, lineno + 1, "expected token<TAB>index"))?;
            let idx: u32 = idx
                .trim()
                .parse()
                .map_err(|_| SocError::format(source_name, lineno + 1, "index is not an integer"))?;
            entries.push((tok.to_string(), idx, lineno + 1));
        }
        entries.sort_by_key(|e| e.1);
        let mut vocab = Self {
            token_to_index: HashMap::new(),
            index_to_token: Vec::new(),
        };
        for (expected, (tok, idx, line)) in entries.into_iter().enumerate() {
            if idx as usize != expected {
                return Err(SocError::format(
                    source_name,
                    line,
                    format!("indices must be dense from 0, missing index {expected}"),
                ));
            }
            if vocab.token_to_index.contains_key(&tok) {
                return Err(SocError::format(source_name, line, format!("duplicate token {tok:?}")));
            }
            vocab.push(tok);
        }
        if vocab.token(PAD_INDEX) != Some(PAD_TOKEN) || vocab.token(UNK_INDEX) != Some(UNK_TOKEN) {
            return Err(SocError::format(
                source_name,
                1,
                "indices 0 and 1 must be <pad> and <unk>",
            ));
        }
        Ok(vocab)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| SocError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SocError::io(path, e))?;
        Self::from_tsv(&text, &path.display().to_string())
    }

    /// Hex SHA-256 of the TSV serialisation; checkpoints record it to detect
    /// a mismatched vocabulary at load time.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_tsv().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Builds a vocabulary from tokenised texts.
///
/// Tokens with frequency `>= min_count` are admitted, ordered by descending
/// frequency with ties broken lexicographically. When `pretrained` is given,
/// tokens below `min_count` are still admitted if they have a pre-trained
/// vector.
pub fn build_vocab<I, T>(corpus: I, min_count: usize, pretrained: Option<&HashSet<String>>) -> Result<Vocabulary>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[String]>,
{
    if min_count == 0 {
        return Err(SocError::Input("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for tokens in corpus {
        for tok in tokens.as_ref() {
            if tok == PAD_TOKEN || tok == UNK_TOKEN {
                continue;
            }
            *counts.entry(tok.clone()).or_insert(0) += 1;
        }
    }
    let mut admitted: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(tok, c)| *c >= min_count || pretrained.is_some_and(|p| p.contains(tok)))
        .collect();
    admitted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));

    let mut vocab = Vocabulary::new();
    for (tok, _) in admitted {
        vocab.push(tok);
    }
    Ok(vocab)
}

/// One embedding row per vocabulary index. The pad row is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub dim: usize,
    /// Row-major `V x dim`.
    pub vectors: Vec<f32>,
}

impl EmbeddingTable {
    pub fn rows(&self) -> usize {
        self.vectors.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn row(&self, index: u32) -> &[f32] {
        let start = index as usize * self.dim;
        &self.vectors[start..start + self.dim]
    }

    /// Every row drawn from the seeded uniform OOV distribution (pad row zero).
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut vectors = vec![0.0f32; vocab.len() * dim];
        for idx in 0..vocab.len() {
            if idx as u32 == PAD_INDEX {
                continue;
            }
            for v in &mut vectors[idx * dim..(idx + 1) * dim] {
                *v = rng.random_range(-OOV_INIT_RANGE..=OOV_INIT_RANGE);
            }
        }
        Self { dim, vectors }
    }

    /// Writes the table in GloVe text format (`word v1 .. v_dim`), one line
    /// per vocabulary entry except padding.
    pub fn save_text(&self, vocab: &Vocabulary, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| SocError::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (tok, idx) in vocab.tokens() {
            if idx == PAD_INDEX {
                continue;
            }
            let mut line = String::from(tok);
            for v in self.row(idx) {
                line.push(' ');
                line.push_str(&v.to_string());
            }
            line.push('\n');
            w.write_all(line.as_bytes()).map_err(|e| SocError::io(path, e))?;
        }
        w.flush().map_err(|e| SocError::io(path, e))
    }
}

/// Words present in a GloVe-format file, without parsing the vectors.
pub fn glove_words(path: &Path) -> Result<HashSet<String>> {
    let file = File::open(path).map_err(|e| SocError::io(path, e))?;
    let mut words = HashSet::new();
    for line in BufReader::new(file).split(b'\n') {
        let line = line.map_err(|e| SocError::io(path, e))?;
        let line = String::from_utf8_lossy(&line);
        if let Some(word) = line.split(' ').next().filter(|w| !w.is_empty()) {
            words.insert(word.to_string());
        }
    }
    Ok(words)
}

/// Loads pre-trained vectors for `vocab` from a GloVe text file.
///
/// Rows for vocabulary words found in the file are copied verbatim, the pad
/// row is zero and every other row is drawn from a uniform distribution on
/// `[-0.05, 0.05]` seeded with `seed`. Every line must carry exactly `dim`
/// values, otherwise the whole file is rejected.
pub fn load_glove(path: &Path, dim: usize, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| SocError::io(path, e))?;
    load_glove_from_reader(BufReader::new(file), &path.display().to_string(), dim, vocab, seed)
}

pub fn load_glove_from_reader<R: BufRead>(
    reader: R,
    source_name: &str,
    dim: usize,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<EmbeddingTable> {
    if dim == 0 {
        return Err(SocError::Input("embedding dimension must be positive".into()));
    }
    let mut table = EmbeddingTable::random(vocab, dim, seed);
    for (lineno, line) in reader.split(b'\n').enumerate() {
        let line = line.map_err(|e| SocError::io(source_name, e))?;
        let line = String::from_utf8_lossy(&line);
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        let values: Vec<&str> = parts.collect();
        if values.len() != dim {
            return Err(SocError::format(
                source_name,
                lineno + 1,
                format!("expected {dim} values, found {}", values.len()),
            ));
        }
        let parsed = values
            .iter()
            .map(|v| v.parse::<f32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| SocError::format(source_name, lineno + 1, format!("bad number: {e}")))?;
        if parsed.iter().any(|v| !v.is_finite()) {
            return Err(SocError::format(source_name, lineno + 1, "non-finite value"));
        }
        if let Some(idx) = vocab.get(word) {
            if idx == PAD_INDEX {
                continue;
            }
            let start = idx as usize * dim;
            table.vectors[start..start + dim].copy_from_slice(&parsed);
        }
    }
    Ok(table)
}

/// A text encoded as exactly [`MAX_LEN`] vocabulary indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSequence {
    pub indices: Vec<u32>,
    pub true_length: usize,
}

/// Maps tokens to indices, keeps the first 64 and post-pads with index 0.
pub fn encode(tokens: &[String], vocab: &Vocabulary) -> EncodedSequence {
    encode_with_len(tokens, vocab, MAX_LEN)
}

pub fn encode_with_len(tokens: &[String], vocab: &Vocabulary, max_len: usize) -> EncodedSequence {
    let mut indices: Vec<u32> = tokens
        .iter()
        .take(max_len)
        .map(|t| vocab.index_or_unk(t))
        .collect();
    let true_length = indices.len();
    indices.resize(max_len, PAD_INDEX);
    EncodedSequence { indices, true_length }
}
