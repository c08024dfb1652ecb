//! Sequence scoring from masked-token log-probabilities, the margin
//! ranking loss, and the lowest-score prediction rule.
//!
//! A sequence's score is its mean negative masked log-likelihood, so lower
//! is more plausible and prediction takes the argmin.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kb::Relation;
use crate::templates::{subject_of, TemplateError, TemplateSet};

#[derive(Debug, Error, PartialEq)]
pub enum ScoringError {
    #[error("token list is empty")]
    Empty,
    #[error("{tokens} tokens but {logprobs} log-probabilities")]
    LengthMismatch { tokens: usize, logprobs: usize },
    #[error("log-probability {value} at position {position} is not a finite value ≤ 0")]
    InvalidLogProb { position: usize, value: f64 },
    #[error("need at least 2 options, got {0}")]
    TooFewOptions(usize),
    #[error("gold index {gold} out of range for {options} options")]
    GoldOutOfRange { gold: usize, options: usize },
    #[error("margin must be positive, got {0}")]
    InvalidMargin(f64),
    #[error("score {0} is not finite")]
    NonFiniteScore(f64),
}

/// Per-token log-probabilities `log P(t_i | sequence with t_i masked)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenLogProbs {
    tokens: Vec<String>,
    logprobs: Vec<f64>,
}

impl TokenLogProbs {
    pub fn new(tokens: Vec<String>, logprobs: Vec<f64>) -> Result<Self, ScoringError> {
        if tokens.len() != logprobs.len() {
            return Err(ScoringError::LengthMismatch { tokens: tokens.len(), logprobs: logprobs.len() });
        }
        if tokens.is_empty() {
            return Err(ScoringError::Empty);
        }
        if let Some((position, &value)) = logprobs.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v <= 0.0)) {
            return Err(ScoringError::InvalidLogProb { position, value });
        }
        Ok(TokenLogProbs { tokens, logprobs })
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn logprobs(&self) -> &[f64] {
        &self.logprobs
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Mean negative log-likelihood of a sequence. Lower is better.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct SequenceScore(f64);

impl SequenceScore {
    pub fn new(value: f64) -> Result<Self, ScoringError> {
        if value.is_finite() {
            Ok(SequenceScore(value))
        } else {
            Err(ScoringError::NonFiniteScore(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `S = -(1/n) Σ log P(t_i | …)`.
pub fn mlm_score(tlp: &TokenLogProbs) -> SequenceScore {
    let n = tlp.logprobs.len() as f64;
    SequenceScore(-(tlp.logprobs.iter().sum::<f64>() / n))
}

/// Which hinge orientation [`ranking_loss`] uses.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossSign {
    /// `max(0, η − S_y + S_i)`: penalizes a gold score that is not at least
    /// `η` above each distractor.
    AsPrinted,
    /// `max(0, η + S_y − S_i)`: penalizes a gold score that is not at least
    /// `η` below each distractor, consistent with argmin prediction.
    #[default]
    PredictionConsistent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankingLossParams {
    margin: f64,
    gold_index: usize,
}

impl RankingLossParams {
    pub fn new(margin: f64, gold_index: usize) -> Result<Self, ScoringError> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(ScoringError::InvalidMargin(margin));
        }
        Ok(RankingLossParams { margin, gold_index })
    }

    /// Margin 1.
    pub fn with_gold(gold_index: usize) -> Self {
        RankingLossParams { margin: 1.0, gold_index }
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn gold_index(&self) -> usize {
        self.gold_index
    }
}

/// `L = (1/m) Σ_{i≠y} hinge_i` over `m` option scores.
pub fn ranking_loss(scores: &[SequenceScore], params: RankingLossParams, sign: LossSign) -> Result<f64, ScoringError> {
    let m = scores.len();
    if m < 2 {
        return Err(ScoringError::TooFewOptions(m));
    }
    let y = params.gold_index;
    if y >= m {
        return Err(ScoringError::GoldOutOfRange { gold: y, options: m });
    }
    let eta = params.margin;
    let gold = scores[y].0;
    let total: f64 = scores
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != y)
        .map(|(_, s)| match sign {
            LossSign::AsPrinted => (eta - gold + s.0).max(0.0),
            LossSign::PredictionConsistent => (eta + gold - s.0).max(0.0),
        })
        .sum();
    Ok(total / m as f64)
}

/// Index of the lowest score; ties go to the lowest index.
pub fn predict(scores: &[SequenceScore]) -> Result<usize, ScoringError> {
    if scores.is_empty() {
        return Err(ScoringError::Empty);
    }
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if s.0 < scores[best].0 {
            best = i;
        }
    }
    Ok(best)
}

/// What an answer option is attached to when building a scoring sequence.
#[derive(Debug, Clone, Copy)]
pub enum Prompt<'a> {
    /// A KB head event under a relation; rendered with the statement
    /// template. `subject` defaults to the head's first word.
    Triple { head: &'a str, relation: Relation, subject: Option<&'a str> },
    /// A free-text benchmark question rendered with the named benchmark
    /// template.
    Text { benchmark: &'a str, question: &'a str },
}

/// Join optional context, question and one answer option into the sequence
/// that gets scored.
pub fn concat_for_scoring(
    context: Option<&str>,
    prompt: Prompt<'_>,
    option: &str,
    templates: &TemplateSet,
) -> Result<String, TemplateError> {
    let context = context.map(str::trim).filter(|c| !c.is_empty());
    match prompt {
        Prompt::Triple { head, relation, subject } => {
            let subject = subject.unwrap_or_else(|| subject_of(head));
            let statement = templates.statement(head, subject, relation, option)?;
            Ok(match context {
                Some(c) => format!("{c} {statement}"),
                None => statement,
            })
        }
        Prompt::Text { benchmark, question } => templates.benchmark(benchmark, context, question, option),
    }
}

/// One line of `scores.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub qa_id: String,
    pub option_scores: Vec<f64>,
    pub pred: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<usize>,
}
