use anyhow::{bail, Context, Result};
use concept_forge::bridge::{BridgeScorer, HttpTransport, MockScorer, Scorer, SubprocessTransport};

/// Scorer selection: `mock` for the built-in mock, an `http(s)://` base URL,
/// or a shell-style command line to run as a stdio subprocess. Falls back
/// to `SCORER_URL` when no spec is given.
pub fn from_spec(spec: Option<&str>, max_len: usize) -> Result<Box<dyn Scorer>> {
    let env = std::env::var("SCORER_URL").ok();
    let Some(spec) = spec.or(env.as_deref()).map(str::trim).filter(|s| !s.is_empty()) else {
        bail!("no scorer given: pass --scorer or set SCORER_URL");
    };
    if spec == "mock" {
        return Ok(Box::new(MockScorer));
    }
    if spec.starts_with("http://") || spec.starts_with("https://") {
        return Ok(Box::new(BridgeScorer::new(HttpTransport::new(spec)).with_max_len(max_len)));
    }
    let mut words = shlex::split(spec).with_context(|| format!("cannot parse scorer command `{spec}`"))?;
    if words.is_empty() {
        bail!("empty scorer command");
    }
    let program = words.remove(0);
    Ok(Box::new(BridgeScorer::new(SubprocessTransport::new(program, words)).with_max_len(max_len)))
}
