//! Wire protocol between the pipeline and a masked-LM scorer.
//!
//! A request is one JSON object per line:
//! `{"id": str, "text": str, "max_len": int}`; the reply is either
//! `{"id": str, "tokens": [str], "logprobs": [float]}` or
//! `{"id": str, "error": str}`. Replies are matched to requests by id and
//! may arrive in any order. The scorer owns tokenization.

mod http;
mod mock;
mod subprocess;

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scoring::TokenLogProbs;

pub use http::HttpTransport;
pub use mock::{fnv1a64, mock_logprob, mock_response, mock_score, serve_mock, MockScorer};
pub use subprocess::{LineMux, SubprocessTransport};

/// Sequence-length hint forwarded with every request.
pub const DEFAULT_MAX_LEN: usize = 128;

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error("cannot score empty text")]
    EmptyText,
    #[error("malformed response for request {id}: {message}")]
    Protocol { id: String, message: String },
    #[error("scorer reported an error for request {id}: {message}")]
    Scorer { id: String, message: String },
    #[error("transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreRequest {
    pub id: String,
    pub text: String,
    pub max_len: usize,
}

/// A response line as received, before the payload/error check. Only `id`
/// is required so that a malformed reply can still be routed to its caller.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logprobs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawResponse", into = "RawResponse")]
pub enum ScoreResponse {
    Scored { id: String, tokens: Vec<String>, logprobs: Vec<f64> },
    Failed { id: String, error: String },
}

impl ScoreResponse {
    pub fn id(&self) -> &str {
        match self {
            ScoreResponse::Scored { id, .. } | ScoreResponse::Failed { id, .. } => id,
        }
    }
}

impl TryFrom<RawResponse> for ScoreResponse {
    type Error = BridgeError;

    fn try_from(raw: RawResponse) -> Result<Self, BridgeError> {
        let protocol = |message: &str| BridgeError::Protocol { id: raw.id.clone(), message: message.to_string() };
        match (raw.tokens.clone(), raw.logprobs.clone(), raw.error.clone()) {
            (None, None, Some(error)) => Ok(ScoreResponse::Failed { id: raw.id, error }),
            (Some(tokens), Some(logprobs), None) => {
                if tokens.len() != logprobs.len() {
                    return Err(protocol(&format!("{} tokens but {} logprobs", tokens.len(), logprobs.len())));
                }
                Ok(ScoreResponse::Scored { id: raw.id, tokens, logprobs })
            }
            (_, _, Some(_)) => Err(protocol("both payload and error present")),
            _ => Err(protocol("missing tokens or logprobs")),
        }
    }
}

impl From<ScoreResponse> for RawResponse {
    fn from(r: ScoreResponse) -> Self {
        match r {
            ScoreResponse::Scored { id, tokens, logprobs } => {
                RawResponse { id, tokens: Some(tokens), logprobs: Some(logprobs), error: None }
            }
            ScoreResponse::Failed { id, error } => RawResponse { id, error: Some(error), ..Default::default() },
        }
    }
}

impl std::fmt::Display for ScoreResponse {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&serde_json::to_string(self).map_err(|_| std::fmt::Error)?)
    }
}

/// Anything that turns text into per-token log-probabilities.
pub trait Scorer: Send + Sync {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        (**self).score(text)
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        (**self).score(text)
    }
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        (**self).score(text)
    }
}

/// Adapts a closure into a [`Scorer`].
pub struct FnScorer<F>(pub F);

impl<F> Scorer for FnScorer<F>
where
    F: Fn(&str) -> Result<TokenLogProbs, BridgeError> + Send + Sync,
{
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        (self.0)(text)
    }
}

/// A failed round trip. Retryable failures (broken pipe, refused
/// connection, timeout, 5xx) are retried; the rest surface immediately.
#[derive(Debug, Clone)]
pub struct TransportError {
    pub message: String,
    pub retryable: bool,
}

impl TransportError {
    pub fn retryable(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: true }
    }

    pub fn fatal(message: impl Into<String>) -> Self {
        TransportError { message: message.into(), retryable: false }
    }
}

pub trait Transport: Send + Sync {
    fn round_trip(&self, request: &ScoreRequest) -> Result<RawResponse, TransportError>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub retries: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { retries: 3, base_delay: Duration::from_millis(100), max_delay: Duration::from_secs(5) }
    }
}

impl RetryPolicy {
    pub fn no_delay(retries: u32) -> Self {
        RetryPolicy { retries, base_delay: Duration::ZERO, max_delay: Duration::ZERO }
    }

    /// Delay before retry number `n` (0-based): `base · 2^n`, capped.
    pub fn delay(&self, n: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << n.min(16)).min(self.max_delay)
    }
}

/// A [`Scorer`] that speaks the wire protocol over some [`Transport`].
pub struct BridgeScorer<T> {
    transport: T,
    retry: RetryPolicy,
    max_len: usize,
    next_id: AtomicU64,
}

impl<T: Transport> BridgeScorer<T> {
    pub fn new(transport: T) -> Self {
        BridgeScorer { transport, retry: RetryPolicy::default(), max_len: DEFAULT_MAX_LEN, next_id: AtomicU64::new(0) }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_len(mut self, max_len: usize) -> Self {
        self.max_len = max_len;
        self
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// One request, retried on transport failure, with the reply checked
    /// against the request and converted to log-probabilities.
    pub fn score_text(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        if text.trim().is_empty() {
            return Err(BridgeError::EmptyText);
        }
        let id = format!("r{}", self.next_id.fetch_add(1, Ordering::Relaxed));
        let request = ScoreRequest { id: id.clone(), text: text.to_string(), max_len: self.max_len };
        let mut attempt = 0;
        let raw = loop {
            match self.transport.round_trip(&request) {
                Ok(raw) => break raw,
                Err(e) if !e.retryable => return Err(BridgeError::Protocol { id, message: e.message }),
                Err(e) if attempt >= self.retry.retries => {
                    return Err(BridgeError::Transport { attempts: attempt + 1, message: e.message })
                }
                Err(e) => {
                    log::warn!("scorer request {id} failed ({}); retrying", e.message);
                    std::thread::sleep(self.retry.delay(attempt));
                    attempt += 1;
                }
            }
        };
        validate(&id, raw)
    }
}

fn validate(id: &str, raw: RawResponse) -> Result<TokenLogProbs, BridgeError> {
    if raw.id != id {
        return Err(BridgeError::Protocol { id: id.to_string(), message: format!("reply carries id {}", raw.id) });
    }
    match ScoreResponse::try_from(raw)? {
        ScoreResponse::Failed { id, error } => Err(BridgeError::Scorer { id, message: error }),
        ScoreResponse::Scored { id, tokens, logprobs } => {
            TokenLogProbs::new(tokens, logprobs).map_err(|e| BridgeError::Protocol { id, message: e.to_string() })
        }
    }
}

impl<T: Transport> Scorer for BridgeScorer<T> {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        self.score_text(text)
    }
}
