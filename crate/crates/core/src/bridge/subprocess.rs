use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use super::{RawResponse, ScoreRequest, Transport, TransportError};

#[derive(Default)]
struct Pending {
    waiters: HashMap<String, Sender<Result<RawResponse, TransportError>>>,
    closed: Option<String>,
}

/// Multiplexes id-tagged requests over one line-oriented duplex stream.
///
/// A reader thread routes each reply line to the caller waiting on its id,
/// so callers on any number of threads may have requests in flight at
/// once and replies may come back in any order.
pub struct LineMux {
    writer: Mutex<Box<dyn Write + Send>>,
    pending: Arc<Mutex<Pending>>,
    timeout: Duration,
}

impl LineMux {
    pub fn new<R, W>(reader: R, writer: W, timeout: Duration) -> LineMux
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let pending = Arc::new(Mutex::new(Pending::default()));
        let shared = Arc::clone(&pending);
        std::thread::spawn(move || {
            let reason = read_replies(BufReader::new(reader), &shared);
            let mut p = shared.lock().unwrap();
            for (_, tx) in p.waiters.drain() {
                let _ = tx.send(Err(TransportError::retryable(reason.clone())));
            }
            p.closed = Some(reason);
        });
        LineMux { writer: Mutex::new(Box::new(writer)), pending, timeout }
    }

    pub fn is_closed(&self) -> bool {
        self.pending.lock().unwrap().closed.is_some()
    }

    pub fn request(&self, request: &ScoreRequest) -> Result<RawResponse, TransportError> {
        let (tx, rx) = mpsc::channel();
        {
            let mut p = self.pending.lock().unwrap();
            if let Some(reason) = &p.closed {
                return Err(TransportError::retryable(reason.clone()));
            }
            if p.waiters.insert(request.id.clone(), tx).is_some() {
                return Err(TransportError::fatal(format!("request id {} already in flight", request.id)));
            }
        }
        let line = serde_json::to_string(request).expect("requests serialize");
        let written = {
            let mut w = self.writer.lock().unwrap();
            writeln!(w, "{line}").and_then(|_| w.flush())
        };
        if let Err(e) = written {
            self.forget(&request.id);
            return Err(TransportError::retryable(format!("write to scorer failed: {e}")));
        }
        match rx.recv_timeout(self.timeout) {
            Ok(reply) => reply,
            Err(RecvTimeoutError::Timeout) => {
                self.forget(&request.id);
                Err(TransportError::retryable(format!("no reply within {:?}", self.timeout)))
            }
            Err(RecvTimeoutError::Disconnected) => Err(TransportError::retryable("scorer connection closed")),
        }
    }

    fn forget(&self, id: &str) {
        self.pending.lock().unwrap().waiters.remove(id);
    }
}

fn read_replies<R: BufRead>(reader: R, pending: &Mutex<Pending>) -> String {
    for line in reader.lines() {
        let line = match line {
            Ok(l) => l,
            Err(e) => return format!("read from scorer failed: {e}"),
        };
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawResponse = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                log::warn!("dropping unparseable scorer reply ({e}): {line}");
                continue;
            }
        };
        match pending.lock().unwrap().waiters.remove(&raw.id) {
            Some(tx) => {
                let _ = tx.send(Ok(raw));
            }
            None => log::warn!("dropping scorer reply for unknown request id {}", raw.id),
        }
    }
    "scorer closed its output".to_string()
}

struct Connection {
    child: Child,
    mux: Arc<LineMux>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Runs the scorer as a child process speaking the protocol on
/// stdin/stdout. The child is started lazily and restarted after a
/// transport failure.
pub struct SubprocessTransport {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    conn: Mutex<Option<Connection>>,
}

impl SubprocessTransport {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        SubprocessTransport { program: program.into(), args, timeout: Duration::from_secs(120), conn: Mutex::new(None) }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    fn spawn(&self) -> Result<Connection, TransportError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| TransportError::retryable(format!("cannot start scorer `{}`: {e}", self.program)))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        Ok(Connection { child, mux: Arc::new(LineMux::new(stdout, stdin, self.timeout)) })
    }

    fn mux(&self) -> Result<Arc<LineMux>, TransportError> {
        let mut conn = self.conn.lock().unwrap();
        if conn.as_ref().is_some_and(|c| c.mux.is_closed()) {
            *conn = None;
        }
        if conn.is_none() {
            *conn = Some(self.spawn()?);
        }
        Ok(Arc::clone(&conn.as_ref().unwrap().mux))
    }

    /// Number of child processes currently alive (0 or 1).
    pub fn is_running(&self) -> bool {
        self.conn.lock().unwrap().is_some()
    }
}

impl Transport for SubprocessTransport {
    fn round_trip(&self, request: &ScoreRequest) -> Result<RawResponse, TransportError> {
        let mux = self.mux()?;
        let result = mux.request(request);
        if matches!(&result, Err(e) if e.retryable) {
            let mut conn = self.conn.lock().unwrap();
            if conn.as_ref().is_some_and(|c| Arc::ptr_eq(&c.mux, &mux)) {
                *conn = None;
            }
        }
        result
    }
}
