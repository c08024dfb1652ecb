//! Training dynamics over saved checkpoints: per-question confidence and
//! variability, and the easy / ambiguous / hard data-map categories.
//!
//! The per-checkpoint term is `σ(Σ_d (S_d − S_j) / (m − 1))` where `j` is the
//! gold option. Scores are lower-is-better, so a positive gap means the gold
//! option beat option `d`, and high confidence means a steady preference for
//! gold under argmin prediction.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("question {qa_id}: need at least 2 options, got {found}")]
    TooFewOptions { qa_id: String, found: usize },
    #[error("question {qa_id}: gold index {gold} out of range for {options} options")]
    GoldOutOfRange { qa_id: String, gold: usize, options: usize },
    #[error("question {qa_id}: non-finite option score")]
    NonFinite { qa_id: String },
    #[error("question {qa_id}: {reason}")]
    Inconsistent { qa_id: String, reason: String },
    #[error("no checkpoints given")]
    NoCheckpoints,
    #[error("runs cover different questions ({only_a} only in the first, {only_b} only in the second; e.g. {example})")]
    IdMismatch { only_a: usize, only_b: usize, example: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Option scores of one question at one checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointScores {
    pub checkpoint: usize,
    pub qa_id: String,
    pub option_scores: Vec<f64>,
    pub gold_index: usize,
}

impl CheckpointScores {
    pub fn new(
        checkpoint: usize,
        qa_id: impl Into<String>,
        option_scores: Vec<f64>,
        gold_index: usize,
    ) -> Result<Self, DynamicsError> {
        let qa_id = qa_id.into();
        let m = option_scores.len();
        if m < 2 {
            return Err(DynamicsError::TooFewOptions { qa_id, found: m });
        }
        if gold_index >= m {
            return Err(DynamicsError::GoldOutOfRange { qa_id, gold: gold_index, options: m });
        }
        if option_scores.iter().any(|s| !s.is_finite()) {
            return Err(DynamicsError::NonFinite { qa_id });
        }
        Ok(CheckpointScores { checkpoint, qa_id, option_scores, gold_index })
    }

    /// `σ(Σ_d (S_d − S_j) / (m − 1))`, the `d = j` term included (it is 0).
    pub fn term(&self) -> f64 {
        let gold = self.option_scores[self.gold_index];
        let m = self.option_scores.len();
        let gap: f64 = self.option_scores.iter().map(|s| s - gold).sum();
        sigmoid(gap / (m - 1) as f64)
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_shapes(checkpoints: &[CheckpointScores]) -> Result<(), DynamicsError> {
    let first = checkpoints.first().ok_or(DynamicsError::NoCheckpoints)?;
    let mut seen = BTreeSet::new();
    for c in checkpoints {
        let reason = if c.qa_id != first.qa_id {
            Some(format!("mixed with question {}", c.qa_id))
        } else if c.option_scores.len() != first.option_scores.len() {
            Some(format!("{} options at checkpoint {}, {} at checkpoint {}", first.option_scores.len(), first.checkpoint, c.option_scores.len(), c.checkpoint))
        } else if c.gold_index != first.gold_index {
            Some(format!("gold index changes at checkpoint {}", c.checkpoint))
        } else if !seen.insert(c.checkpoint) {
            Some(format!("checkpoint {} appears twice", c.checkpoint))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(DynamicsError::Inconsistent { qa_id: first.qa_id.clone(), reason });
        }
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn population_std(xs: &[f64]) -> f64 {
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Mean of the per-checkpoint terms for one question.
pub fn confidence(checkpoints: &[CheckpointScores]) -> Result<f64, DynamicsError> {
    check_shapes(checkpoints)?;
    let terms: Vec<f64> = checkpoints.iter().map(CheckpointScores::term).collect();
    Ok(mean(&terms))
}

/// Population standard deviation (denominator `n`) of the per-checkpoint
/// terms for one question.
pub fn variability(checkpoints: &[CheckpointScores]) -> Result<f64, DynamicsError> {
    check_shapes(checkpoints)?;
    let terms: Vec<f64> = checkpoints.iter().map(CheckpointScores::term).collect();
    Ok(population_std(&terms))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Easy,
    Ambiguous,
    Hard,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Category::Easy => "easy",
            Category::Ambiguous => "ambiguous",
            Category::Hard => "hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Thresholds {
    pub conf_hi: f64,
    pub conf_lo: f64,
    pub var_hi: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { conf_hi: 0.7, conf_lo: 0.3, var_hi: 0.25 }
    }
}

/// Ambiguous if variability reaches `var_hi`; otherwise easy at or above
/// `conf_hi`, hard at or below `conf_lo`, and easy in between.
pub fn categorize(confidence: f64, variability: f64, t: &Thresholds) -> Category {
    if variability >= t.var_hi {
        Category::Ambiguous
    } else if confidence >= t.conf_hi {
        Category::Easy
    } else if confidence <= t.conf_lo {
        Category::Hard
    } else {
        Category::Easy
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsRecord {
    pub qa_id: String,
    pub confidence: f64,
    pub variability: f64,
    pub category: Category,
}

/// Group checkpoint scores by question and compute one record per
/// question, ordered by `qa_id`.
pub fn compute(
    scores: impl IntoIterator<Item = CheckpointScores>,
    thresholds: &Thresholds,
) -> Result<Vec<DynamicsRecord>, DynamicsError> {
    let mut groups: BTreeMap<String, Vec<CheckpointScores>> = BTreeMap::new();
    for s in scores {
        groups.entry(s.qa_id.clone()).or_default().push(s);
    }
    groups
        .into_par_iter()
        .map(|(qa_id, mut cps)| {
            cps.sort_by_key(|c| c.checkpoint);
            check_shapes(&cps)?;
            let terms: Vec<f64> = cps.iter().map(CheckpointScores::term).collect();
            let confidence = mean(&terms);
            let variability = population_std(&terms);
            Ok(DynamicsRecord { qa_id, confidence, variability, category: categorize(confidence, variability, thresholds) })
        })
        .collect()
}

pub fn write_dynamics_csv<W: Write>(w: W, records: &[DynamicsRecord]) -> Result<(), DynamicsError> {
    let mut out = csv::Writer::from_writer(w);
    for r in records {
        out.serialize(r)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_dynamics_csv<R: Read>(r: R) -> Result<Vec<DynamicsRecord>, DynamicsError> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|r| r.map_err(DynamicsError::from)).collect()
}

/// Median with the two middle values averaged for even lengths. NaN-free
/// input assumed.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DynamicsDelta {
    pub qa_id: String,
    pub confidence_a: f64,
    pub confidence_b: f64,
    pub confidence_delta: f64,
    pub variability_a: f64,
    pub variability_b: f64,
    pub variability_delta: f64,
    pub category_a: Category,
    pub category_b: Category,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MedianShift {
    pub median_confidence_a: f64,
    pub median_confidence_b: f64,
    pub median_confidence_delta: f64,
    pub median_variability_a: f64,
    pub median_variability_b: f64,
    pub median_variability_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsSummary {
    pub deltas: Vec<DynamicsDelta>,
    pub medians: MedianShift,
}

/// Pair two runs question by question (`b − a`) and report median shifts.
pub fn dynamics_summary(a: &[DynamicsRecord], b: &[DynamicsRecord]) -> Result<DynamicsSummary, DynamicsError> {
    let ma: BTreeMap<&str, &DynamicsRecord> = a.iter().map(|r| (r.qa_id.as_str(), r)).collect();
    let mb: BTreeMap<&str, &DynamicsRecord> = b.iter().map(|r| (r.qa_id.as_str(), r)).collect();
    let only_a: Vec<&str> = ma.keys().filter(|k| !mb.contains_key(*k)).copied().collect();
    let only_b: Vec<&str> = mb.keys().filter(|k| !ma.contains_key(*k)).copied().collect();
    if !only_a.is_empty() || !only_b.is_empty() {
        let example = only_a.first().or(only_b.first()).unwrap().to_string();
        return Err(DynamicsError::IdMismatch { only_a: only_a.len(), only_b: only_b.len(), example });
    }
    if ma.is_empty() {
        return Err(DynamicsError::NoCheckpoints);
    }
    let deltas: Vec<DynamicsDelta> = ma
        .iter()
        .map(|(id, ra)| {
            let rb = mb[id];
            DynamicsDelta {
                qa_id: id.to_string(),
                confidence_a: ra.confidence,
                confidence_b: rb.confidence,
                confidence_delta: rb.confidence - ra.confidence,
                variability_a: ra.variability,
                variability_b: rb.variability,
                variability_delta: rb.variability - ra.variability,
                category_a: ra.category,
                category_b: rb.category,
            }
        })
        .collect();
    let col = |f: fn(&DynamicsDelta) -> f64| median(&deltas.iter().map(f).collect::<Vec<_>>()).unwrap();
    let medians = MedianShift {
        median_confidence_a: col(|d| d.confidence_a),
        median_confidence_b: col(|d| d.confidence_b),
        median_confidence_delta: col(|d| d.confidence_delta),
        median_variability_a: col(|d| d.variability_a),
        median_variability_b: col(|d| d.variability_b),
        median_variability_delta: col(|d| d.variability_delta),
    };
    Ok(DynamicsSummary { deltas, medians })
}

pub fn write_summary_csv<W: Write>(w: W, summary: &DynamicsSummary) -> Result<(), DynamicsError> {
    let mut out = csv::Writer::from_writer(w);
    for d in &summary.deltas {
        out.serialize(d)?;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_medians_csv<W: Write>(w: W, summary: &DynamicsSummary) -> Result<(), DynamicsError> {
    let mut out = csv::Writer::from_writer(w);
    out.serialize(&summary.medians)?;
    out.flush().map_err(csv::Error::from)?;
    Ok(())
}
