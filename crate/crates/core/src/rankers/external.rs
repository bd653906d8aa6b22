//! Client for rankers running in a child process.
//!
//! Requests and responses are single-line JSON objects exchanged over the
//! child's stdin/stdout:
//!
//! ```text
//! -> {"id":1,"mode":"text","query":"...","documents":[{"id":"d1","text":"..."}]}
//! <- {"id":1,"scores":[0.3,1.2]}
//! ```
//!
//! Tabular requests carry `"mode":"tabular"` and a `"features"` matrix in
//! place of `"documents"`. One request is in flight per connection.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::InputKind;
use crate::error::{Error, Result};
use crate::instance::Instance;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Serialize, Deserialize)]
pub struct WireDocument {
    pub id: String,
    pub text: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    pub mode: String,
    pub query: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub documents: Option<Vec<WireDocument>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub features: Option<Vec<Vec<f64>>>,
}

impl Request {
    pub fn text(id: u64, instance: &Instance) -> Self {
        Self {
            id,
            mode: "text".into(),
            query: instance.query.text.clone(),
            documents: Some(
                instance
                    .documents
                    .iter()
                    .map(|d| WireDocument { id: d.id.clone(), text: d.text.clone() })
                    .collect(),
            ),
            features: None,
        }
    }

    pub fn tabular(id: u64, query: &str, rows: &[Vec<f64>]) -> Self {
        Self {
            id,
            mode: "tabular".into(),
            query: query.to_owned(),
            documents: None,
            features: Some(rows.to_vec()),
        }
    }

    pub fn doc_count(&self) -> usize {
        self.documents
            .as_ref()
            .map(Vec::len)
            .or_else(|| self.features.as_ref().map(Vec::len))
            .unwrap_or(0)
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    pub scores: Vec<f64>,
}

/// Validates a raw response line against the request it answers.
pub fn parse_response(line: &str, expected_id: u64, expected_count: usize) -> Result<Vec<f64>> {
    let value: serde_json::Value =
        serde_json::from_str(line).map_err(|e| Error::MalformedResponse(e.to_string()))?;
    let id = value
        .get("id")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| Error::MalformedResponse("missing integer \"id\"".into()))?;
    if id != expected_id {
        return Err(Error::MalformedResponse(format!("response id {id}, expected {expected_id}")));
    }
    let raw = value
        .get("scores")
        .and_then(serde_json::Value::as_array)
        .ok_or_else(|| Error::MalformedResponse("missing \"scores\" array".into()))?;
    let scores = raw
        .iter()
        .map(|v| {
            v.as_f64()
                .filter(|s| s.is_finite())
                .ok_or_else(|| Error::MalformedResponse(format!("non-numeric score {v}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if scores.len() != expected_count {
        return Err(Error::ScoreCountMismatch { expected: expected_count, actual: scores.len() });
    }
    Ok(scores)
}

struct Connection {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

/// A ranker process launched through `sh -c`.
pub struct ExternalRanker {
    command: String,
    kind: InputKind,
    timeout: Duration,
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for ExternalRanker {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalRanker")
            .field("command", &self.command)
            .field("kind", &self.kind)
            .field("timeout", &self.timeout)
            .finish()
    }
}

impl ExternalRanker {
    pub fn spawn(command: &str, kind: InputKind) -> Result<Self> {
        Self::spawn_with_timeout(command, kind, DEFAULT_TIMEOUT)
    }

    pub fn spawn_with_timeout(command: &str, kind: InputKind, timeout: Duration) -> Result<Self> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Self {
            command: command.to_owned(),
            kind,
            timeout,
            conn: Mutex::new(Connection { child, stdin, lines: rx, next_id: 1 }),
        })
    }

    pub fn kind(&self) -> InputKind {
        self.kind
    }

    pub fn score_instance(&self, instance: &Instance) -> Result<Vec<f64>> {
        self.round_trip(|id| Request::text(id, instance))
    }

    pub fn score_rows(&self, query: &str, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.round_trip(|id| Request::tabular(id, query, rows))
    }

    fn round_trip(&self, build: impl FnOnce(u64) -> Request) -> Result<Vec<f64>> {
        let mut conn = self.conn.lock().unwrap_or_else(|e| e.into_inner());
        let id = conn.next_id;
        conn.next_id += 1;
        let request = build(id);
        let mut line = serde_json::to_string(&request).expect("request serializes");
        line.push('\n');
        conn.stdin.write_all(line.as_bytes())?;
        conn.stdin.flush()?;
        let reply = match conn.lines.recv_timeout(self.timeout) {
            Ok(line) => line?,
            Err(RecvTimeoutError::Timeout) => return Err(Error::ExternalTimeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => {
                return Err(Error::MalformedResponse("ranker process closed its output".into()))
            }
        };
        parse_response(&reply, id, request.doc_count())
    }
}

impl Drop for ExternalRanker {
    fn drop(&mut self) {
        if let Ok(conn) = self.conn.get_mut() {
            let _ = conn.child.kill();
            let _ = conn.child.wait();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_validation() {
        assert_eq!(parse_response(r#"{"id":3,"scores":[1,2.5]}"#, 3, 2).unwrap(), vec![1.0, 2.5]);
        assert!(matches!(
            parse_response(r#"{"id":3,"scores":[1]}"#, 3, 2),
            Err(Error::ScoreCountMismatch { expected: 2, actual: 1 })
        ));
        assert!(matches!(
            parse_response(r#"{"id":3,"scores":[1,"x"]}"#, 3, 2),
            Err(Error::MalformedResponse(_))
        ));
        assert!(matches!(parse_response("not json", 3, 2), Err(Error::MalformedResponse(_))));
        assert!(matches!(
            parse_response(r#"{"id":4,"scores":[1,2]}"#, 3, 2),
            Err(Error::MalformedResponse(_))
        ));
    }

    #[test]
    fn request_wire_format() {
        let r = Request::tabular(7, "q1", &[vec![1.0, 2.0]]);
        assert_eq!(
            serde_json::to_string(&r).unwrap(),
            r#"{"id":7,"mode":"tabular","query":"q1","features":[[1.0,2.0]]}"#
        );
    }
}
