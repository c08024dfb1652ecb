use std::time::Duration;

use super::{RawResponse, ScoreRequest, Transport, TransportError};

/// POSTs each request as JSON to `{base}/score` and reads one response
/// object back.
pub struct HttpTransport {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(120))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        HttpTransport { endpoint: format!("{}/score", base_url.trim_end_matches('/')), agent }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

impl Transport for HttpTransport {
    fn round_trip(&self, request: &ScoreRequest) -> Result<RawResponse, TransportError> {
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .send_json(request)
            .map_err(|e| TransportError::retryable(format!("POST {}: {e}", self.endpoint)))?;
        let status = resp.status().as_u16();
        match status {
            200..=299 => resp
                .body_mut()
                .read_json::<RawResponse>()
                .map_err(|e| TransportError::fatal(format!("unreadable body from {}: {e}", self.endpoint))),
            500..=599 => Err(TransportError::retryable(format!("{} returned HTTP {status}", self.endpoint))),
            _ => Err(TransportError::fatal(format!("{} returned HTTP {status}", self.endpoint))),
        }
    }
}
