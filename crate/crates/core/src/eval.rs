//! Score bucketing and classification metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SocError};
use crate::model::SentimentScore;

/// Half-width of the neutral band around zero.
pub const BUCKET_THRESHOLD: f64 = 0.33;

/// Ordered negative < neutral < positive.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentClass {
    Negative,
    Neutral,
    Positive,
}

impl SentimentClass {
    pub const ALL: [SentimentClass; 3] = [SentimentClass::Positive, SentimentClass::Neutral, SentimentClass::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentClass::Negative => "negative",
            SentimentClass::Neutral => "neutral",
            SentimentClass::Positive => "positive",
        }
    }

    fn slot(self) -> usize {
        match self {
            SentimentClass::Positive => 0,
            SentimentClass::Neutral => 1,
            SentimentClass::Negative => 2,
        }
    }

    /// Class of a gold training target in `{-1, 0, +1}`.
    pub fn from_target(target: f64) -> Self {
        if target > 0.0 {
            SentimentClass::Positive
        } else if target < 0.0 {
            SentimentClass::Negative
        } else {
            SentimentClass::Neutral
        }
    }
}

impl std::fmt::Display for SentimentClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// `(0.33, 1]` positive, `[-0.33, 0.33]` neutral, `[-1, -0.33)` negative.
pub fn bucketize(score: f64) -> Result<SentimentClass> {
    if !(-1.0..=1.0).contains(&score) {
        return Err(SocError::Input(format!("score {score} is outside [-1, 1]")));
    }
    Ok(if score > BUCKET_THRESHOLD {
        SentimentClass::Positive
    } else if score < -BUCKET_THRESHOLD {
        SentimentClass::Negative
    } else {
        SentimentClass::Neutral
    })
}

/// Two-way decision. A tanh score of exactly 0 and a softmax tie both go to
/// positive.
pub fn binarize(score: &SentimentScore) -> SentimentClass {
    let positive = match *score {
        SentimentScore::Tanh(s) => s >= 0.0,
        SentimentScore::Softmax { positive, negative } => positive >= negative,
    };
    if positive {
        SentimentClass::Positive
    } else {
        SentimentClass::Negative
    }
}

/// Class used to score a prediction against gold data: binary gold sets are
/// compared via [`binarize`], ternary gold sets via [`bucketize`] on the
/// scalar score.
pub fn classify(score: &SentimentScore, ternary: bool) -> SentimentClass {
    if ternary {
        bucketize(score.scalar()).unwrap_or_else(|_| binarize(score))
    } else {
        binarize(score)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub class: SentimentClass,
    /// `None` when the class was never predicted.
    pub precision: Option<f64>,
    /// `None` when the class never occurs in the gold labels.
    pub recall: Option<f64>,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub total: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Positive, neutral, negative.
    pub per_class: Vec<ClassMetrics>,
    /// `confusion[gold][predicted]` in positive, neutral, negative order.
    pub confusion: [[usize; 3]; 3],
    /// Accuracy restricted to neutral gold examples.
    pub neutral_accuracy: Option<f64>,
}

impl MetricsReport {
    pub fn class(&self, class: SentimentClass) -> &ClassMetrics {
        &self.per_class[class.slot()]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,precision,recall,support\n");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                m.class,
                opt_csv(m.precision),
                opt_csv(m.recall),
                m.support
            );
        }
        let _ = writeln!(out, "all,,{},{}", self.accuracy, self.total);
        out
    }

    /// Plain-text table: one precision/recall column pair per class.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "accuracy {:.2}% ({}/{})",
            self.accuracy * 100.0,
            self.correct,
            self.total
        );
        if let Some(n) = self.neutral_accuracy {
            let _ = writeln!(out, "neutral accuracy {:.2}%", n * 100.0);
        }
        let _ = writeln!(out, "+----------+-----------+---------+---------+");
        let _ = writeln!(out, "| class    | precision | recall  | support |");
        let _ = writeln!(out, "+----------+-----------+---------+---------+");
        for m in &self.per_class {
            let _ = writeln!(
                out,
                "| {:<8} | {:>9} | {:>7} | {:>7} |",
                m.class.as_str(),
                opt_pct(m.precision),
                opt_pct(m.recall),
                m.support
            );
        }
        let _ = writeln!(out, "+----------+-----------+---------+---------+");
        out
    }
}

fn opt_csv(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn opt_pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", x * 100.0)).unwrap_or_else(|| "-".into())
}

/// Accuracy, per-class precision/recall and the confusion matrix.
pub fn metrics(predictions: &[SentimentClass], gold: &[SentimentClass]) -> Result<MetricsReport> {
    if predictions.len() != gold.len() {
        return Err(SocError::Input(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if gold.is_empty() {
        return Err(SocError::Input("cannot compute metrics on zero examples".into()));
    }
    let mut confusion = [[0usize; 3]; 3];
    for (p, g) in predictions.iter().zip(gold) {
        confusion[g.slot()][p.slot()] += 1;
    }
    let correct: usize = (0..3).map(|i| confusion[i][i]).sum();
    let total = gold.len();
    let per_class = SentimentClass::ALL
        .iter()
        .map(|&class| {
            let k = class.slot();
            let tp = confusion[k][k];
            let predicted: usize = (0..3).map(|g| confusion[g][k]).sum();
            let support: usize = confusion[k].iter().sum();
            ClassMetrics {
                class,
                precision: (predicted > 0).then(|| tp as f64 / predicted as f64),
                recall: (support > 0).then(|| tp as f64 / support as f64),
                support,
            }
        })
        .collect::<Vec<_>>();
    let neutral_accuracy = per_class[SentimentClass::Neutral.slot()].recall;
    Ok(MetricsReport {
        total,
        correct,
        accuracy: correct as f64 / total as f64,
        per_class,
        confusion,
        neutral_accuracy,
    })
}
