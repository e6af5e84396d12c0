//! Masked-focus scoring.
//!
//! Each pair becomes a [`ScorerRequest`]: the sentence with its focus token
//! replaced by [`MASK`] and the two candidate forms. A [`Scorer`] returns one
//! raw score per candidate; the pair is judged correct iff the correct form
//! scores strictly higher. Scores are compared as given and never
//! normalized, so any scorer output that preserves order (logits,
//! probabilities, log-probabilities) yields the same verdicts.

mod http;
pub mod mock;
mod process;
pub mod protocol;

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{EvaluationRecord, MinimalPair, Verdict};

pub use http::HttpScorer;
pub use mock::{MapScores, MockKind, MockScorer, Negated};
pub use process::ProcessScorer;

/// Placeholder the harness puts at the focus position. Adapters map it to
/// their model's own mask symbol.
pub const MASK: &str = "<MASK>";

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ScorerError {
    #[error("scorer did not answer request {request_id} within {timeout:?}")]
    Timeout { request_id: String, timeout: Duration },
    #[error("malformed scorer message{}: {message}", context(.request_id))]
    Malformed { request_id: Option<String>, message: String },
    #[error("scorer answered unknown or duplicate request id {0:?}")]
    UnexpectedId(String),
    #[error("scorer gave no answer for request {0}")]
    Missing(String),
    #[error("response id {response:?} does not match request id {request:?}")]
    IdMismatch { request: String, response: String },
    #[error("scorer returned a non-finite score for request {0}")]
    NonFinite(String),
    #[error("scorer stream closed{}", context(.request_id))]
    Closed { request_id: Option<String> },
    #[error("invalid scorer uri {0:?}")]
    BadUri(String),
    #[error("scorer configuration: {0}")]
    Config(String),
    #[error("scorer transport: {0}")]
    Transport(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn context(id: &Option<String>) -> String {
    id.as_ref().map(|id| format!(" at request {id}")).unwrap_or_default()
}

impl ScorerError {
    /// Id of the request the failure is attributed to, if any.
    pub fn request_id(&self) -> Option<&str> {
        match self {
            ScorerError::Timeout { request_id, .. } => Some(request_id),
            ScorerError::Malformed { request_id, .. } | ScorerError::Closed { request_id } => request_id.as_deref(),
            ScorerError::UnexpectedId(id) | ScorerError::Missing(id) | ScorerError::NonFinite(id) => Some(id),
            ScorerError::IdMismatch { request, .. } => Some(request),
            _ => None,
        }
    }
}

/// A masked sentence and the two candidates for the masked position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScorerRequest {
    pub id: String,
    pub tokens: Vec<String>,
    pub mask_index: usize,
    /// Correct form first by harness convention.
    pub candidates: [String; 2],
}

/// Scores aligned with the request's candidates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScorerResponse {
    pub id: String,
    /// `None` only where the matching `oov` flag is set.
    pub scores: [Option<f64>; 2],
    #[serde(default)]
    pub oov: [bool; 2],
}

impl ScorerResponse {
    pub fn new(id: impl Into<String>, scores: [f64; 2]) -> Self {
        Self {
            id: id.into(),
            scores: scores.map(Some),
            oov: [false, false],
        }
    }

    fn check(&self) -> Result<(), ScorerError> {
        for (score, oov) in self.scores.iter().zip(self.oov) {
            match score {
                Some(s) if !s.is_finite() => return Err(ScorerError::NonFinite(self.id.clone())),
                None if !oov => {
                    return Err(ScorerError::Malformed {
                        request_id: Some(self.id.clone()),
                        message: "missing score for in-vocabulary candidate".into(),
                    })
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Scorer identity reported by the `hello` handshake. Extra fields (model
/// name, casing, control tokens) are kept for provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshake {
    pub name: String,
    pub mask_token: String,
    pub max_batch: usize,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

/// Anything that can score masked candidates.
pub trait Scorer {
    fn hello(&mut self) -> Result<Handshake, ScorerError>;

    /// Scores one batch. Responses may come back in any order.
    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError>;

    /// Scores several batches that may be in flight together.
    fn score_batches(&mut self, batches: &[&[ScorerRequest]]) -> Result<Vec<ScorerResponse>, ScorerError> {
        let mut out = Vec::new();
        for batch in batches {
            out.extend(self.score_batch(batch)?);
        }
        Ok(out)
    }

    /// Single-piece vocabulary membership for each word.
    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError>;
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        (**self).hello()
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        (**self).score_batch(batch)
    }

    fn score_batches(&mut self, batches: &[&[ScorerRequest]]) -> Result<Vec<ScorerResponse>, ScorerError> {
        (**self).score_batches(batches)
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        (**self).vocab_check(words)
    }
}

/// Builds the request for a pair, using the pair id as request id.
pub fn mask_focus(pair: &MinimalPair) -> ScorerRequest {
    let mut tokens = pair.tokens().to_vec();
    tokens[pair.focus_index()] = MASK.to_string();
    ScorerRequest {
        id: pair.id().to_string(),
        tokens,
        mask_index: pair.focus_index(),
        candidates: [pair.correct_form().to_string(), pair.incorrect_form().to_string()],
    }
}

/// What equal scores turn into.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TiePolicy {
    /// Record a `tie` verdict (counted against accuracy by the report).
    #[default]
    Tie,
    /// Record the pair as `incorrect` outright.
    Incorrect,
}

/// Turns a response into a verdict for `pair`.
pub fn judge(
    request: &ScorerRequest,
    response: &ScorerResponse,
    pair: &MinimalPair,
    policy: TiePolicy,
) -> Result<EvaluationRecord, ScorerError> {
    if request.id != response.id {
        return Err(ScorerError::IdMismatch {
            request: request.id.clone(),
            response: response.id.clone(),
        });
    }
    response.check()?;
    let oov: Vec<&str> = request
        .candidates
        .iter()
        .zip(response.oov)
        .filter(|(_, oov)| *oov)
        .map(|(c, _)| c.as_str())
        .collect();
    if !oov.is_empty() {
        return Ok(EvaluationRecord::skipped(pair, format!("scorer_oov:{}", oov.join(","))));
    }
    // scores follow the request's candidate order, whatever it is
    let (correct, incorrect) = if request.candidates[0] == pair.correct_form() {
        (response.scores[0], response.scores[1])
    } else {
        (response.scores[1], response.scores[0])
    };
    let tie = match policy {
        TiePolicy::Tie => Verdict::Tie,
        TiePolicy::Incorrect => Verdict::Incorrect,
    };
    Ok(EvaluationRecord::scored(
        pair,
        correct.expect("checked"),
        incorrect.expect("checked"),
        tie,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalConfig {
    pub batch_size: usize,
    /// Batches handed to the scorer at once.
    pub parallel: usize,
    pub tie_policy: TiePolicy,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            batch_size: DEFAULT_BATCH_SIZE,
            parallel: 1,
            tie_policy: TiePolicy::Tie,
        }
    }
}

/// Scores every pair and returns one record per pair, in input order.
///
/// Responses are matched to requests by id. Any protocol violation aborts
/// the whole run; candidates the scorer flags as out-of-vocabulary produce
/// `skipped` records.
pub fn evaluate_suite<S: Scorer + ?Sized>(
    pairs: &[MinimalPair],
    scorer: &mut S,
    config: &EvalConfig,
) -> Result<Vec<EvaluationRecord>, ScorerError> {
    if config.batch_size == 0 || config.parallel == 0 {
        return Err(ScorerError::Config("batch size and parallelism must be positive".into()));
    }
    let requests: Vec<ScorerRequest> = pairs
        .iter()
        .enumerate()
        .map(|(i, pair)| ScorerRequest {
            id: format!("q{i}"),
            ..mask_focus(pair)
        })
        .collect();
    let mut records = Vec::with_capacity(pairs.len());
    let window = config.batch_size * config.parallel;
    for (w, chunk) in requests.chunks(window).enumerate() {
        let batches: Vec<&[ScorerRequest]> = chunk.chunks(config.batch_size).collect();
        let responses = scorer.score_batches(&batches)?;
        let offset = w * window;
        let mut by_id: HashMap<String, ScorerResponse> = HashMap::with_capacity(chunk.len());
        for response in responses {
            let known = response
                .id
                .strip_prefix('q')
                .and_then(|n| n.parse::<usize>().ok())
                .is_some_and(|n| (offset..offset + chunk.len()).contains(&n));
            if !known || by_id.contains_key(&response.id) {
                return Err(ScorerError::UnexpectedId(response.id));
            }
            by_id.insert(response.id.clone(), response);
        }
        for (j, request) in chunk.iter().enumerate() {
            let response = by_id
                .remove(&request.id)
                .ok_or_else(|| ScorerError::Missing(request.id.clone()))?;
            records.push(judge(request, &response, &pairs[offset + j], config.tie_policy)?);
        }
    }
    Ok(records)
}

/// Where a scorer lives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScorerUri {
    /// Child process speaking the line protocol; program followed by args.
    Cmd(Vec<String>),
    Http(String),
    /// In-process mock, e.g. `oracle` or `random:42`.
    Mock(String),
}

impl std::str::FromStr for ScorerUri {
    type Err = ScorerError;

    fn from_str(uri: &str) -> Result<Self, Self::Err> {
        let bad = || ScorerError::BadUri(uri.to_string());
        let (scheme, rest) = uri.split_once(':').ok_or_else(bad)?;
        match scheme {
            "cmd" => {
                let argv: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                if argv.is_empty() {
                    return Err(bad());
                }
                Ok(ScorerUri::Cmd(argv))
            }
            "http" => Ok(ScorerUri::Http(uri.to_string())),
            "mock" if !rest.is_empty() => Ok(ScorerUri::Mock(rest.to_string())),
            _ => Err(bad()),
        }
    }
}
