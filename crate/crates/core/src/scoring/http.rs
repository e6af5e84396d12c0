use std::thread;
use std::time::Duration;

use super::protocol::{self, WireRequest};
use super::{Handshake, Scorer, ScorerError, ScorerRequest, ScorerResponse};

/// A scorer behind an HTTP endpoint. Each POST body carries one or more
/// protocol request lines; the reply body carries one response line per
/// request.
pub struct HttpScorer {
    url: String,
    agent: ureq::Agent,
    timeout: Duration,
}

impl HttpScorer {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
            timeout,
        }
    }

    fn post(&self, requests: &[WireRequest], label: &str) -> Result<Vec<String>, ScorerError> {
        post_lines(&self.agent, &self.url, self.timeout, requests, label)
    }
}

fn post_lines(
    agent: &ureq::Agent,
    url: &str,
    timeout: Duration,
    requests: &[WireRequest],
    label: &str,
) -> Result<Vec<String>, ScorerError> {
    let mut body = String::new();
    for r in requests {
        body.push_str(&protocol::encode(r));
        body.push('\n');
    }
    let map_err = |e: ureq::Error| match e {
        ureq::Error::Timeout(_) => ScorerError::Timeout {
            request_id: label.to_string(),
            timeout,
        },
        other => ScorerError::Transport(format!("{url}: {other}")),
    };
    let mut response = agent
        .post(url)
        .header("content-type", "application/x-ndjson")
        .send(body)
        .map_err(map_err)?;
    let status = response.status();
    let text = response.body_mut().read_to_string().map_err(map_err)?;
    if !status.is_success() {
        return Err(ScorerError::Transport(format!("{url}: HTTP {status} {}", text.trim())));
    }
    let lines: Vec<String> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(str::to_string)
        .collect();
    if lines.len() != requests.len() {
        return Err(ScorerError::Malformed {
            request_id: Some(label.to_string()),
            message: format!("{} response lines for {} requests", lines.len(), requests.len()),
        });
    }
    Ok(lines)
}

impl Scorer for HttpScorer {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        let lines = self.post(&[WireRequest::Hello], "hello")?;
        protocol::decode_hello(&lines[0])
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        self.score_batches(&[batch])
    }

    fn score_batches(&mut self, batches: &[&[ScorerRequest]]) -> Result<Vec<ScorerResponse>, ScorerError> {
        let results: Vec<Result<Vec<ScorerResponse>, ScorerError>> = thread::scope(|scope| {
            let handles: Vec<_> = batches
                .iter()
                .filter(|b| !b.is_empty())
                .map(|batch| {
                    let agent = self.agent.clone();
                    let (url, timeout) = (&self.url, self.timeout);
                    scope.spawn(move || {
                        let wire: Vec<WireRequest> = batch.iter().cloned().map(WireRequest::Score).collect();
                        let lines = post_lines(&agent, url, timeout, &wire, &batch[0].id)?;
                        lines
                            .iter()
                            .map(|l| protocol::decode_score(l, Some(&batch[0].id)))
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("http worker panicked"))
                .collect()
        });
        let mut out = Vec::new();
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        let lines = self.post(&[WireRequest::VocabCheck { words: words.to_vec() }], "vocab_check")?;
        protocol::decode_vocab(&lines[0], words.len())
    }
}
