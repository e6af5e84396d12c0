//! Newline-delimited JSON scorer protocol.
//!
//! ```text
//! {"op":"hello"}                                   -> {"name":..,"mask_token":..,"max_batch":..}
//! {"op":"score","id":..,"tokens":[..],"mask_index":..,"candidates":[a,b]}
//!                                                  -> {"id":..,"scores":[x,y],"oov":[false,false]}
//! {"op":"vocab_check","words":[..]}                -> {"in_vocab":[..]}
//! ```
//!
//! A server that cannot handle a line answers `{"error": "..."}`.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{Handshake, Scorer, ScorerError, ScorerRequest, ScorerResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum WireRequest {
    Hello,
    Score(ScorerRequest),
    VocabCheck { words: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VocabResponse {
    pub in_vocab: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorResponse {
    pub error: String,
}

pub fn encode(request: &WireRequest) -> String {
    serde_json::to_string(request).expect("wire request serializes")
}

/// Decodes one response line, surfacing `{"error": ..}` replies as
/// [`ScorerError::Malformed`].
pub fn decode<T: DeserializeOwned>(line: &str, request_id: Option<&str>) -> Result<T, ScorerError> {
    let malformed = |message: String| ScorerError::Malformed {
        request_id: request_id.map(str::to_string),
        message,
    };
    match serde_json::from_str::<T>(line) {
        Ok(v) => Ok(v),
        Err(e) => match serde_json::from_str::<ErrorResponse>(line) {
            Ok(err) => Err(malformed(format!("scorer error: {}", err.error))),
            Err(_) => Err(malformed(format!("{e}: {}", truncate(line)))),
        },
    }
}

fn truncate(line: &str) -> String {
    const MAX: usize = 120;
    match line.char_indices().nth(MAX) {
        Some((i, _)) => format!("{}...", &line[..i]),
        None => line.to_string(),
    }
}

pub fn decode_hello(line: &str) -> Result<Handshake, ScorerError> {
    let hello: Handshake = decode(line, None)?;
    if hello.max_batch == 0 {
        return Err(ScorerError::Malformed {
            request_id: None,
            message: "handshake max_batch must be positive".into(),
        });
    }
    Ok(hello)
}

pub fn decode_vocab(line: &str, expected: usize) -> Result<Vec<bool>, ScorerError> {
    let resp: VocabResponse = decode(line, None)?;
    if resp.in_vocab.len() != expected {
        return Err(ScorerError::Malformed {
            request_id: None,
            message: format!("vocab_check answered {} of {expected} words", resp.in_vocab.len()),
        });
    }
    Ok(resp.in_vocab)
}

pub fn decode_score(line: &str, request_id: Option<&str>) -> Result<ScorerResponse, ScorerError> {
    decode(line, request_id)
}

/// Answers protocol lines from `input` using `scorer` until end of input.
///
/// Lines that do not parse get an error reply; scorer failures end the loop.
pub fn serve<S, R, W>(scorer: &mut S, input: R, mut output: W) -> Result<(), ScorerError>
where
    S: Scorer + ?Sized,
    R: BufRead,
    W: Write,
{
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<WireRequest>(&line) {
            Ok(WireRequest::Hello) => serde_json::to_string(&scorer.hello()?),
            Ok(WireRequest::Score(request)) => {
                let mut responses = scorer.score_batch(std::slice::from_ref(&request))?;
                match responses.pop() {
                    Some(r) if responses.is_empty() => serde_json::to_string(&r),
                    _ => return Err(ScorerError::Missing(request.id)),
                }
            }
            Ok(WireRequest::VocabCheck { words }) => serde_json::to_string(&VocabResponse {
                in_vocab: scorer.vocab_check(&words)?,
            }),
            Err(e) => serde_json::to_string(&ErrorResponse { error: e.to_string() }),
        }
        .expect("responses serialize");
        output.write_all(reply.as_bytes())?;
        output.write_all(b"\n")?;
        output.flush()?;
    }
    Ok(())
}
