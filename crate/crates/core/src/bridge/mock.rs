//! Deterministic model-free scorer.
//!
//! Tokens are whitespace-separated words; the log-probability of token `w`
//! is `−(1 + (fnv1a64(w) mod 1000) / 1000)`, always within `[−2, −1]`.

use std::io::{BufRead, Write};

use super::{BridgeError, ScoreResponse, Scorer};
use crate::scoring::TokenLogProbs;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// 64-bit FNV-1a over raw bytes.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

pub fn mock_logprob(token: &str) -> f64 {
    -(1.0 + (fnv1a64(token.as_bytes()) % 1000) as f64 / 1000.0)
}

pub fn mock_score(text: &str) -> Result<TokenLogProbs, BridgeError> {
    let tokens: Vec<String> = text.split_whitespace().map(str::to_string).collect();
    if tokens.is_empty() {
        return Err(BridgeError::EmptyText);
    }
    let logprobs = tokens.iter().map(|t| mock_logprob(t)).collect();
    Ok(TokenLogProbs::new(tokens, logprobs).expect("mock output is well-formed"))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct MockScorer;

impl Scorer for MockScorer {
    fn score(&self, text: &str) -> Result<TokenLogProbs, BridgeError> {
        mock_score(text)
    }
}

/// The mock's reply to one request line.
pub fn mock_response(line: &str) -> ScoreResponse {
    let value: serde_json::Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => return ScoreResponse::Failed { id: String::new(), error: format!("unparseable request: {e}") },
    };
    let id = value.get("id").and_then(|v| v.as_str()).unwrap_or_default().to_string();
    let Some(text) = value.get("text").and_then(|v| v.as_str()) else {
        return ScoreResponse::Failed { id, error: "request has no text".into() };
    };
    match mock_score(text) {
        Ok(tlp) => ScoreResponse::Scored { id, tokens: tlp.tokens().to_vec(), logprobs: tlp.logprobs().to_vec() },
        Err(e) => ScoreResponse::Failed { id, error: e.to_string() },
    }
}

/// Answer request lines from `input` until EOF, or until `limit` replies
/// have been written when one is given.
pub fn serve_mock<R: BufRead, W: Write>(input: R, mut output: W, limit: Option<usize>) -> std::io::Result<()> {
    let mut served = 0;
    for line in input.lines() {
        if limit.is_some_and(|n| served >= n) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        writeln!(output, "{}", mock_response(&line))?;
        output.flush()?;
        served += 1;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fnv_reference_vectors() {
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }

    #[test]
    fn three_tokens() {
        let a = mock_score("a b c").unwrap();
        assert_eq!(a.tokens(), ["a", "b", "c"]);
        assert_eq!(a, mock_score("a  b\tc").unwrap());
        assert_eq!(a.logprobs()[0], -(1.0 + (0xaf63dc4c8601ec8cu64 % 1000) as f64 / 1000.0));
    }

    #[test]
    fn empty_text_is_an_error() {
        assert!(matches!(mock_score(""), Err(BridgeError::EmptyText)));
        assert!(matches!(mock_score(" \n"), Err(BridgeError::EmptyText)));
    }

    #[test]
    fn serve_loop() {
        let input = "{\"id\":\"1\",\"text\":\"a b\",\"max_len\":128}\n\n{\"id\":\"2\",\"text\":\"\"}\nnot json\n";
        let mut out = Vec::new();
        serve_mock(input.as_bytes(), &mut out, None).unwrap();
        let lines: Vec<ScoreResponse> =
            String::from_utf8(out).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines.len(), 3);
        assert!(matches!(&lines[0], ScoreResponse::Scored { id, tokens, .. } if id == "1" && tokens.len() == 2));
        assert!(matches!(&lines[1], ScoreResponse::Failed { id, .. } if id == "2"));
        assert!(matches!(&lines[2], ScoreResponse::Failed { id, .. } if id.is_empty()));

        let mut out = Vec::new();
        serve_mock(input.as_bytes(), &mut out, Some(1)).unwrap();
        assert_eq!(String::from_utf8(out).unwrap().lines().count(), 1);
    }

    proptest! {
        #[test]
        fn logprobs_in_range(text in "\\PC{1,40}") {
            if let Ok(tlp) = mock_score(&text) {
                prop_assert!(tlp.logprobs().iter().all(|&x| (-2.0..=-1.0).contains(&x)));
                prop_assert_eq!(mock_score(&text).unwrap(), tlp);
            }
        }
    }
}
