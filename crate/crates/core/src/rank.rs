//! Time-windowed, volume-weighted token ranking.
//!
//! For each token `x` the number of comments inside a window, `M_x`, is
//! turned into a weight `W_x = M_x / max_k M_k` and the token's mean
//! comment score is multiplied by it. Tokens with little chatter are
//! pulled towards zero however extreme their few comments are.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SocError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub token: String,
    #[serde(rename = "date")]
    pub day: NaiveDate,
    pub text: String,
    /// Pre-computed score in `[-1, 1]`; when absent the scorer is asked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Read-only collection of comments. The token set is every token that
/// appears in at least one record, whatever its date.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommentStore {
    records: Vec<CommentRecord>,
    tokens: BTreeSet<String>,
}

impl CommentStore {
    pub fn new(records: Vec<CommentRecord>) -> Result<Self> {
        for (i, r) in records.iter().enumerate() {
            if r.token.is_empty() {
                return Err(SocError::Input(format!("record {i}: empty token")));
            }
            if let Some(s) = r.score {
                check_score(s).map_err(|m| SocError::Input(format!("record {i}: {m}")))?;
            }
        }
        let tokens = records.iter().map(|r| r.token.clone()).collect();
        Ok(Self { records, tokens })
    }

    pub fn records(&self) -> &[CommentRecord] {
        &self.records
    }

    pub fn tokens(&self) -> &BTreeSet<String> {
        &self.tokens
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Parses JSON lines. Blank lines are skipped; a bad line is reported
    /// with its 1-based number.
    pub fn from_jsonl<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| SocError::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: CommentRecord = serde_json::from_str(&line)
                .map_err(|e| SocError::format(source_name, i + 1, e.to_string()))?;
            if let Some(s) = rec.score {
                check_score(s).map_err(|m| SocError::format(source_name, i + 1, m))?;
            }
            if rec.token.is_empty() {
                return Err(SocError::format(source_name, i + 1, "empty token"));
            }
            records.push(rec);
        }
        Self::new(records)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| SocError::io(path, e))?;
        Self::from_jsonl(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serialises"));
            out.push('\n');
        }
        out
    }
}

fn check_score(s: f64) -> std::result::Result<(), String> {
    if s.is_finite() && (-1.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(format!("score {s} is outside [-1, 1]"))
    }
}

/// Inclusive day range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl Window {
    pub fn new(start: NaiveDate, end: NaiveDate) -> Result<Self> {
        if start > end {
            return Err(SocError::Input(format!("window start {start} is after end {end}")));
        }
        Ok(Self { start, end })
    }

    pub fn contains(&self, day: NaiveDate) -> bool {
        self.start <= day && day <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub token: String,
    /// Comments in the window.
    #[serde(rename = "M")]
    pub count: u64,
    #[serde(rename = "W")]
    pub weight: f64,
    pub score_orig: f64,
    pub score_adj: f64,
}

fn checked(window: &Window) -> Result<()> {
    Window::new(window.start, window.end).map(|_| ())
}

/// Comment count per store token inside `window`, zeros included.
pub fn window_counts(store: &CommentStore, window: &Window) -> Result<BTreeMap<String, u64>> {
    checked(window)?;
    let mut counts: BTreeMap<String, u64> = store.tokens.iter().map(|t| (t.clone(), 0)).collect();
    for r in store.records.iter().filter(|r| window.contains(r.day)) {
        *counts.get_mut(&r.token).expect("token set covers records") += 1;
    }
    Ok(counts)
}

/// `M_x / max M`. When every count is zero all weights are zero.
pub fn score_weights(counts: &BTreeMap<String, u64>) -> Result<BTreeMap<String, f64>> {
    let max = counts
        .values()
        .copied()
        .max()
        .ok_or_else(|| SocError::Input("cannot weight an empty set of tokens".into()))?;
    Ok(counts
        .iter()
        .map(|(t, &m)| {
            let w = if max == 0 { 0.0 } else { m as f64 / max as f64 };
            (t.clone(), w)
        })
        .collect())
}

/// Ranks every store token by volume-adjusted mean score, highest first,
/// ties broken by token name. Records without a stored score are passed to
/// `scorer`.
pub fn rank_tokens<S>(store: &CommentStore, window: &Window, mut scorer: S) -> Result<Vec<RankEntry>>
where
    S: FnMut(&CommentRecord) -> Result<f64>,
{
    let counts = window_counts(store, window)?;
    if counts.is_empty() {
        return Ok(Vec::new());
    }
    let weights = score_weights(&counts)?;
    let mut sums: BTreeMap<&str, f64> = BTreeMap::new();
    for (i, r) in store.records.iter().enumerate().filter(|(_, r)| window.contains(r.day)) {
        let s = match r.score {
            Some(s) => s,
            None => scorer(r).map_err(|e| {
                SocError::Input(format!("scoring record {i} (token {}, {}): {e}", r.token, r.day))
            })?,
        };
        check_score(s).map_err(|m| SocError::Input(format!("record {i} (token {}): {m}", r.token)))?;
        *sums.entry(&r.token).or_insert(0.0) += s;
    }
    let mut entries: Vec<RankEntry> = counts
        .iter()
        .map(|(token, &count)| {
            let score_orig = if count == 0 {
                0.0
            } else {
                sums[token.as_str()] / count as f64
            };
            let weight = weights[token];
            RankEntry {
                token: token.clone(),
                count,
                weight,
                score_orig,
                score_adj: score_orig * weight,
            }
        })
        .collect();
    entries.sort_by(|a, b| b.score_adj.total_cmp(&a.score_adj).then_with(|| a.token.cmp(&b.token)));
    Ok(entries)
}

pub const RANK_CSV_HEADER: &str = "rank,token,M,W,score_orig,score_adj";

/// One row per entry, ranks starting at 1.
pub fn ranking_to_csv(entries: &[RankEntry]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(RANK_CSV_HEADER.split(',')).expect("in-memory write");
    for (i, e) in entries.iter().enumerate() {
        w.write_record([
            (i + 1).to_string(),
            e.token.clone(),
            e.count.to_string(),
            e.weight.to_string(),
            e.score_orig.to_string(),
            e.score_adj.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}
