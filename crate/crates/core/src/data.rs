//! Loaders for the labelled corpora: Sentiment140 CSV, generic
//! `sentence<TAB>label` TSV and Amazon review JSON lines.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Result, SocError};
use crate::model::Head;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledExample {
    pub text: String,
    pub binary_label: Option<Polarity>,
    /// `-1`, `0` or `+1`.
    pub ternary_target: Option<f64>,
}

impl LabeledExample {
    pub fn binary(text: impl Into<String>, polarity: Polarity) -> Self {
        let target = match polarity {
            Polarity::Positive => 1.0,
            Polarity::Negative => -1.0,
        };
        Self {
            text: text.into(),
            binary_label: Some(polarity),
            ternary_target: Some(target),
        }
    }

    pub fn ternary(text: impl Into<String>, target: f64) -> Self {
        let binary_label = if target > 0.0 {
            Some(Polarity::Positive)
        } else if target < 0.0 {
            Some(Polarity::Negative)
        } else {
            None
        };
        Self {
            text: text.into(),
            binary_label,
            ternary_target: Some(target),
        }
    }

    /// Training target for `head`: softmax needs a binary label, tanh takes
    /// the ternary target. `None` means the example is unusable for that head.
    pub fn target_for(&self, head: Head) -> Option<f64> {
        match head {
            Head::Softmax => self.binary_label.map(|p| match p {
                Polarity::Positive => 1.0,
                Polarity::Negative => -1.0,
            }),
            Head::Tanh => self.ternary_target.or_else(|| {
                self.binary_label.map(|p| if p == Polarity::Positive { 1.0 } else { -1.0 })
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DatasetSummary {
    pub source: String,
    /// Accepted examples per class name (`positive`, `neutral`, `negative`).
    pub counts: BTreeMap<String, usize>,
    /// Rows seen, including dropped ones.
    pub total_rows: usize,
    /// Rows not turned into examples (malformed or deliberately excluded).
    pub dropped: usize,
    /// The subset of `dropped` that could not be parsed.
    pub malformed: usize,
}

impl DatasetSummary {
    fn new(source: &str) -> Self {
        Self {
            source: source.to_string(),
            counts: BTreeMap::new(),
            total_rows: 0,
            dropped: 0,
            malformed: 0,
        }
    }

    pub fn accepted(&self) -> usize {
        self.counts.values().sum()
    }

    fn accept(&mut self, ex: &LabeledExample) {
        let name = match ex.ternary_target {
            Some(t) if t > 0.0 => "positive",
            Some(t) if t < 0.0 => "negative",
            _ => "neutral",
        };
        *self.counts.entry(name.to_string()).or_insert(0) += 1;
    }

    fn drop_malformed(&mut self) {
        self.dropped += 1;
        self.malformed += 1;
    }
}

pub type Loaded = (Vec<LabeledExample>, DatasetSummary);

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| SocError::io(path, e))
}

/// Sentiment140 CSV: `target,id,date,flag,user,text` with target in
/// `{0, 2, 4}`. Neutral (2) rows are dropped and counted; malformed rows are
/// skipped, and more than half of the rows being malformed is a format error.
pub fn load_sentiment140(path: &Path) -> Result<Loaded> {
    read_sentiment140(open(path)?, &path.display().to_string())
}

pub fn read_sentiment140<R: Read>(reader: R, source: &str) -> Result<Loaded> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut summary = DatasetSummary::new(source);
    let mut examples = Vec::new();
    let mut record = csv::ByteRecord::new();
    loop {
        match rdr.read_byte_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) if e.is_io_error() => {
                return Err(SocError::io(source, std::io::Error::other(e.to_string())));
            }
            Err(_) => {
                summary.total_rows += 1;
                summary.drop_malformed();
                continue;
            }
        }
        summary.total_rows += 1;
        if record.len() != 6 {
            summary.drop_malformed();
            continue;
        }
        let target = String::from_utf8_lossy(&record[0]);
        let text = String::from_utf8_lossy(&record[5]).into_owned();
        match target.trim() {
            "0" => {
                let ex = LabeledExample::binary(text, Polarity::Negative);
                summary.accept(&ex);
                examples.push(ex);
            }
            "4" => {
                let ex = LabeledExample::binary(text, Polarity::Positive);
                summary.accept(&ex);
                examples.push(ex);
            }
            "2" => summary.dropped += 1,
            _ => summary.drop_malformed(),
        }
    }
    if summary.total_rows > 0 && summary.malformed * 2 > summary.total_rows {
        return Err(SocError::format(
            source,
            summary.total_rows,
            format!(
                "{} of {} rows are malformed; is this a Sentiment140 CSV?",
                summary.malformed, summary.total_rows
            ),
        ));
    }
    Ok((examples, summary))
}

/// Lines `sentence<TAB>label` with label `1` (positive) or `0` (negative).
pub fn load_tsv(path: &Path) -> Result<Loaded> {
    read_tsv(BufReader::new(open(path)?), &path.display().to_string())
}

pub fn read_tsv<R: BufRead>(reader: R, source: &str) -> Result<Loaded> {
    let mut summary = DatasetSummary::new(source);
    let mut examples = Vec::new();
    for line in reader.split(b'\n') {
        let line = line.map_err(|e| SocError::io(source, e))?;
        let line = String::from_utf8_lossy(&line);
        let line = line.trim_end_matches('\r');
        summary.total_rows += 1;
        let parsed = line.rsplit_once('\t').and_then(|(text, label)| match label.trim() {
            "1" => Some(LabeledExample::binary(text, Polarity::Positive)),
            "0" => Some(LabeledExample::binary(text, Polarity::Negative)),
            _ => None,
        });
        match parsed {
            Some(ex) => {
                summary.accept(&ex);
                examples.push(ex);
            }
            None => summary.drop_malformed(),
        }
    }
    Ok((examples, summary))
}

/// JSON field names of an Amazon review dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmazonFields {
    pub rating: String,
    pub text: String,
}

impl Default for AmazonFields {
    fn default() -> Self {
        Self {
            rating: "overall".into(),
            text: "reviewText".into(),
        }
    }
}

/// Maps 1..5 stars onto three buckets: 4-5 → +1, 3 → 0, 1-2 → -1.
pub fn stars_to_target(stars: f64) -> Option<f64> {
    if stars.fract() != 0.0 {
        return None;
    }
    match stars as i64 {
        4 | 5 => Some(1.0),
        3 => Some(0.0),
        1 | 2 => Some(-1.0),
        _ => None,
    }
}

/// One JSON object per line carrying a star rating and review text.
pub fn load_amazon(path: &Path, fields: &AmazonFields) -> Result<Loaded> {
    read_amazon(BufReader::new(open(path)?), &path.display().to_string(), fields)
}

pub fn read_amazon<R: BufRead>(reader: R, source: &str, fields: &AmazonFields) -> Result<Loaded> {
    let mut summary = DatasetSummary::new(source);
    let mut examples = Vec::new();
    for line in reader.split(b'\n') {
        let line = line.map_err(|e| SocError::io(source, e))?;
        summary.total_rows += 1;
        let parsed = serde_json::from_slice::<serde_json::Value>(&line)
            .ok()
            .and_then(|v| {
                let stars = match v.get(&fields.rating)? {
                    serde_json::Value::Number(n) => n.as_f64()?,
                    serde_json::Value::String(s) => s.trim().parse().ok()?,
                    _ => return None,
                };
                let text = v.get(&fields.text)?.as_str()?.to_string();
                Some(LabeledExample::ternary(text, stars_to_target(stars)?))
            });
        match parsed {
            Some(ex) => {
                summary.accept(&ex);
                examples.push(ex);
            }
            None => summary.drop_malformed(),
        }
    }
    Ok((examples, summary))
}

/// Seeded shuffle followed by a split; the second part holds
/// `round(len * eval_fraction)` examples.
pub fn split_train_eval<T: Clone>(items: &[T], eval_fraction: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_eval = ((items.len() as f64) * eval_fraction.clamp(0.0, 1.0)).round() as usize;
    let train = shuffled.split_off(n_eval);
    (train, shuffled)
}

/// Seeded sample of at most `n` items, in shuffled order.
pub fn subsample<T: Clone>(items: &[T], n: usize, seed: u64) -> Vec<T> {
    let mut shuffled = items.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    shuffled.truncate(n);
    shuffled
}

#[cfg(test)]
mod tests {
    use super::*;

    const S140: &str = "\"0\",\"1467810369\",\"Mon Apr 06 22:19:45 PDT 2009\",\"NO_QUERY\",\"_TheSpecialOne_\",\"@switchfoot http://twitpic.com/2y1zl - Awww, that's a bummer\"\n\
\"4\",\"1467822272\",\"Mon Apr 06 22:22:45 PDT 2009\",\"NO_QUERY\",\"ersle\",\"I LOVE @Health4UandPets u guys r the best!! \"\n\
\"2\",\"1467822273\",\"Mon Apr 06 22:22:46 PDT 2009\",\"NO_QUERY\",\"x\",\"it is a day\"\n\
\"4\",\"1\",\"d\",\"NO_QUERY\",\"u\",\"quoted \"\"comma, inside\"\" text\"\n";

    #[test]
    fn sentiment140_label_map() {
        let (ex, summary) = read_sentiment140(S140.as_bytes(), "mem").unwrap();
        assert_eq!(ex.len(), 3);
        assert_eq!(ex[0].binary_label, Some(Polarity::Negative));
        assert_eq!(ex[0].ternary_target, Some(-1.0));
        assert_eq!(ex[1].binary_label, Some(Polarity::Positive));
        assert_eq!(ex[1].ternary_target, Some(1.0));
        assert_eq!(ex[2].text, "quoted \"comma, inside\" text");
        assert_eq!(summary.dropped, 1);
        assert_eq!(summary.malformed, 0);
        assert_eq!(summary.accepted() + summary.dropped, summary.total_rows);
    }

    #[test]
    fn sentiment140_skips_malformed_rows() {
        let data = format!("{S140}\"7\",\"1\",\"d\",\"q\",\"u\",\"bad target\"\nonly,three,fields\n");
        let (ex, summary) = read_sentiment140(data.as_bytes(), "mem").unwrap();
        assert_eq!(ex.len(), 3);
        assert_eq!(summary.malformed, 2);
        assert_eq!(summary.dropped, 3);
        assert_eq!(summary.accepted() + summary.dropped, summary.total_rows);
    }

    #[test]
    fn sentiment140_mostly_malformed_is_an_error() {
        let data = "a,b\nc,d\n\"0\",\"1\",\"d\",\"q\",\"u\",\"ok\"\n";
        assert!(matches!(
            read_sentiment140(data.as_bytes(), "mem"),
            Err(SocError::Format { .. })
        ));
    }

    #[test]
    fn sentiment140_invalid_utf8_is_lossy() {
        let mut data = b"\"4\",\"1\",\"d\",\"q\",\"u\",\"caf".to_vec();
        data.extend_from_slice(b"\xe9 time\"\n");
        let (ex, _) = read_sentiment140(&data[..], "mem").unwrap();
        assert_eq!(ex[0].text, "caf\u{fffd} time");
    }

    #[test]
    fn tsv_labels() {
        let data = "great phone\t1\nbad service\t0\nno label line\n";
        let (ex, summary) = read_tsv(data.as_bytes(), "mem").unwrap();
        assert_eq!(ex.len(), 2);
        assert_eq!(ex[0].text, "great phone");
        assert_eq!(ex[0].binary_label, Some(Polarity::Positive));
        assert_eq!(ex[1].binary_label, Some(Polarity::Negative));
        assert_eq!(summary.dropped, 1);
        assert_eq!(summary.total_rows, 3);
    }

    #[test]
    fn amazon_star_remap() {
        let data = r#"{"overall": 5.0, "reviewText": "love it"}
{"overall": 3, "reviewText": "fine"}
{"overall": 1.0, "reviewText": "broke"}
{"overall": "4", "reviewText": "good"}
{"overall": 2.0}
not json
{"overall": 3.5, "reviewText": "half"}"#;
        let (ex, summary) = read_amazon(data.as_bytes(), "mem", &AmazonFields::default()).unwrap();
        let targets: Vec<f64> = ex.iter().map(|e| e.ternary_target.unwrap()).collect();
        assert_eq!(targets, vec![1.0, 0.0, -1.0, 1.0]);
        assert_eq!(ex[1].binary_label, None);
        assert_eq!(summary.dropped, 3);
        assert_eq!(summary.counts["neutral"], 1);
        assert_eq!(summary.accepted() + summary.dropped, summary.total_rows);
    }

    #[test]
    fn amazon_custom_fields() {
        let fields = AmazonFields {
            rating: "stars".into(),
            text: "body".into(),
        };
        let (ex, _) = read_amazon(r#"{"stars": 2, "body": "meh"}"#.as_bytes(), "mem", &fields).unwrap();
        assert_eq!(ex[0].ternary_target, Some(-1.0));
    }

    #[test]
    fn targets_per_head() {
        let pos = LabeledExample::binary("x", Polarity::Positive);
        let neutral = LabeledExample::ternary("y", 0.0);
        assert_eq!(pos.target_for(Head::Softmax), Some(1.0));
        assert_eq!(pos.target_for(Head::Tanh), Some(1.0));
        assert_eq!(neutral.target_for(Head::Softmax), None);
        assert_eq!(neutral.target_for(Head::Tanh), Some(0.0));
    }

    #[test]
    fn reload_is_stable_and_split_is_seeded() {
        let a = read_sentiment140(S140.as_bytes(), "mem").unwrap();
        let b = read_sentiment140(S140.as_bytes(), "mem").unwrap();
        assert_eq!(a, b);
        let items: Vec<u32> = (0..100).collect();
        let (tr, ev) = split_train_eval(&items, 0.2, 5);
        assert_eq!((tr.len(), ev.len()), (80, 20));
        assert_eq!(split_train_eval(&items, 0.2, 5), (tr.clone(), ev.clone()));
        let mut all: Vec<u32> = tr.into_iter().chain(ev).collect();
        all.sort();
        assert_eq!(all, items);
        assert_eq!(subsample(&items, 10, 1).len(), 10);
    }
}
