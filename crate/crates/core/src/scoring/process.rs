use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use super::protocol::{self, WireRequest};
use super::{Handshake, Scorer, ScorerError, ScorerRequest, ScorerResponse};

/// A scorer running as a child process, spoken to over stdin/stdout.
///
/// A reader thread drains the child's stdout so that many requests can be
/// written before any response is read. The child's stderr is inherited.
pub struct ProcessScorer {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl ProcessScorer {
    pub fn spawn(argv: &[String], timeout: Duration) -> Result<Self, ScorerError> {
        let (program, args) = argv
            .split_first()
            .ok_or_else(|| ScorerError::Config("empty scorer command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| ScorerError::Config(format!("cannot start {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped");
        let stdout = child.stdout.take().expect("piped");
        let (tx, lines) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(stdout);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => break,
                    Ok(_) if line.trim().is_empty() => continue,
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            break;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        break;
                    }
                }
            }
        });
        Ok(Self {
            child,
            stdin: Some(stdin),
            lines,
            timeout,
        })
    }

    fn send(&mut self, request: &WireRequest, request_id: Option<&str>) -> Result<(), ScorerError> {
        let stdin = self.stdin.as_mut().expect("open until drop");
        let mut line = protocol::encode(request);
        line.push('\n');
        stdin.write_all(line.as_bytes()).map_err(|_| ScorerError::Closed {
            request_id: request_id.map(str::to_string),
        })
    }

    fn flush(&mut self, request_id: Option<&str>) -> Result<(), ScorerError> {
        self.stdin
            .as_mut()
            .expect("open until drop")
            .flush()
            .map_err(|_| ScorerError::Closed {
                request_id: request_id.map(str::to_string),
            })
    }

    fn recv(&mut self, deadline: Instant, request_id: &str) -> Result<String, ScorerError> {
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(wait) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(e.into()),
            Err(RecvTimeoutError::Timeout) => Err(ScorerError::Timeout {
                request_id: request_id.to_string(),
                timeout: self.timeout,
            }),
            Err(RecvTimeoutError::Disconnected) => Err(ScorerError::Closed {
                request_id: Some(request_id.to_string()),
            }),
        }
    }

    fn roundtrip(&mut self, request: &WireRequest, label: &str) -> Result<String, ScorerError> {
        self.send(request, None)?;
        self.flush(None)?;
        self.recv(Instant::now() + self.timeout, label)
    }
}

impl Scorer for ProcessScorer {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        let line = self.roundtrip(&WireRequest::Hello, "hello")?;
        protocol::decode_hello(&line)
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        self.score_batches(&[batch])
    }

    fn score_batches(&mut self, batches: &[&[ScorerRequest]]) -> Result<Vec<ScorerResponse>, ScorerError> {
        for request in batches.iter().flat_map(|b| b.iter()) {
            self.send(&WireRequest::Score(request.clone()), Some(&request.id))?;
        }
        if let Some(first) = batches.iter().flat_map(|b| b.iter()).next() {
            self.flush(Some(&first.id))?;
        }
        let mut out = Vec::new();
        // each batch gets its own timeout window
        for batch in batches {
            let deadline = Instant::now() + self.timeout;
            for request in batch.iter() {
                let line = self.recv(deadline, &request.id)?;
                out.push(protocol::decode_score(&line, Some(&request.id))?);
            }
        }
        Ok(out)
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        let line = self.roundtrip(&WireRequest::VocabCheck { words: words.to_vec() }, "vocab_check")?;
        protocol::decode_vocab(&line, words.len())
    }
}

impl Drop for ProcessScorer {
    fn drop(&mut self) {
        // closing stdin lets a well-behaved adapter exit on its own
        drop(self.stdin.take());
        let deadline = Instant::now() + Duration::from_millis(500);
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}
