//! Stimulus data model and its JSONL serialization.
//!
//! A [`MinimalPair`] is a pre-tokenized, lowercase sentence together with the
//! focus position and the two competing forms for that position. The
//! grammatical sentence is `tokens` as stored; the ungrammatical one is the
//! same list with `incorrect` substituted at `focus_index`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StimulusError {
    #[error("pair needs at least 2 tokens, got {0}")]
    TooShort(usize),
    #[error("focus index {index} out of range for {len} tokens")]
    FocusOutOfRange { index: usize, len: usize },
    #[error("token at focus index {index} is {found:?}, expected correct form {expected:?}")]
    FocusMismatch {
        index: usize,
        found: String,
        expected: String,
    },
    #[error("correct and incorrect forms are identical ({0:?})")]
    DegenerateForms(String),
    #[error("form {0:?} is not a single whitespace-free word")]
    BadForm(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: Box<StimulusError>,
    },
    #[error("unknown suite {0:?}")]
    UnknownSuite(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Stimulus family a pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Natural,
    Nonce,
    Template,
}

impl Suite {
    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Natural => "natural",
            Suite::Nonce => "nonce",
            Suite::Template => "template",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = StimulusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "natural" => Ok(Suite::Natural),
            "nonce" => Ok(Suite::Nonce),
            "template" => Ok(Suite::Template),
            other => Err(StimulusError::UnknownSuite(other.to_string())),
        }
    }
}

/// Grouping and provenance metadata attached to a pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairMeta {
    pub id: Option<String>,
    pub suite: Suite,
    pub condition: String,
    pub attractors: Option<u32>,
    pub source_ref: String,
}

impl PairMeta {
    pub fn new(suite: Suite) -> Self {
        Self {
            id: None,
            suite,
            condition: String::new(),
            attractors: None,
            source_ref: String::new(),
        }
    }

    pub fn with_condition(mut self, condition: impl Into<String>) -> Self {
        self.condition = condition.into();
        self
    }

    pub fn with_attractors(mut self, attractors: u32) -> Self {
        self.attractors = Some(attractors);
        self
    }

    pub fn with_source(mut self, source_ref: impl Into<String>) -> Self {
        self.source_ref = source_ref.into();
        self
    }
}

/// One grammatical/ungrammatical stimulus pair differing only at the focus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPair")]
pub struct MinimalPair {
    id: String,
    tokens: Vec<String>,
    focus_index: usize,
    #[serde(rename = "correct")]
    correct_form: String,
    #[serde(rename = "incorrect")]
    incorrect_form: String,
    suite: Suite,
    condition: String,
    attractors: Option<u32>,
    source_ref: String,
}

fn is_single_word(form: &str) -> bool {
    !form.is_empty() && !form.chars().any(char::is_whitespace)
}

/// Content digest used as the default pair id.
pub fn pair_digest(tokens: &[String], focus_index: usize, correct: &str, incorrect: &str) -> String {
    let canonical = serde_json::to_vec(&(tokens, focus_index, correct, incorrect))
        .expect("string tuple serializes");
    let digest = Sha256::digest(&canonical);
    hex::encode(&digest[..16])
}

/// Validates the pair invariants and builds a [`MinimalPair`].
pub fn make_minimal_pair(
    tokens: Vec<String>,
    focus_index: usize,
    correct_form: impl Into<String>,
    incorrect_form: impl Into<String>,
    meta: PairMeta,
) -> Result<MinimalPair, StimulusError> {
    let correct_form = correct_form.into();
    let incorrect_form = incorrect_form.into();
    if tokens.len() < 2 {
        return Err(StimulusError::TooShort(tokens.len()));
    }
    if focus_index >= tokens.len() {
        return Err(StimulusError::FocusOutOfRange {
            index: focus_index,
            len: tokens.len(),
        });
    }
    for form in [&correct_form, &incorrect_form] {
        if !is_single_word(form) {
            return Err(StimulusError::BadForm(form.clone()));
        }
    }
    if correct_form == incorrect_form {
        return Err(StimulusError::DegenerateForms(correct_form));
    }
    if tokens[focus_index] != correct_form {
        return Err(StimulusError::FocusMismatch {
            index: focus_index,
            found: tokens[focus_index].clone(),
            expected: correct_form,
        });
    }
    let id = match meta.id {
        Some(id) if !id.is_empty() => id,
        _ => pair_digest(&tokens, focus_index, &correct_form, &incorrect_form),
    };
    Ok(MinimalPair {
        id,
        tokens,
        focus_index,
        correct_form,
        incorrect_form,
        suite: meta.suite,
        condition: meta.condition,
        attractors: meta.attractors,
        source_ref: meta.source_ref,
    })
}

impl MinimalPair {
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn focus_index(&self) -> usize {
        self.focus_index
    }

    pub fn correct_form(&self) -> &str {
        &self.correct_form
    }

    pub fn incorrect_form(&self) -> &str {
        &self.incorrect_form
    }

    pub fn suite(&self) -> Suite {
        self.suite
    }

    pub fn condition(&self) -> &str {
        &self.condition
    }

    pub fn attractors(&self) -> Option<u32> {
        self.attractors
    }

    pub fn source_ref(&self) -> &str {
        &self.source_ref
    }

    pub fn meta(&self) -> PairMeta {
        PairMeta {
            id: Some(self.id.clone()),
            suite: self.suite,
            condition: self.condition.clone(),
            attractors: self.attractors,
            source_ref: self.source_ref.clone(),
        }
    }

    /// The ungrammatical sentence of the pair.
    pub fn incorrect_tokens(&self) -> Vec<String> {
        let mut tokens = self.tokens.clone();
        tokens[self.focus_index] = self.incorrect_form.clone();
        tokens
    }

    /// Space-joined grammatical sentence.
    pub fn sentence(&self) -> String {
        self.tokens.join(" ")
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    #[serde(default)]
    id: Option<String>,
    tokens: Vec<String>,
    focus_index: usize,
    correct: String,
    incorrect: String,
    suite: String,
    #[serde(default)]
    condition: String,
    #[serde(default)]
    attractors: Option<u32>,
    #[serde(default)]
    source_ref: String,
}

impl TryFrom<RawPair> for MinimalPair {
    type Error = StimulusError;

    fn try_from(raw: RawPair) -> Result<Self, Self::Error> {
        let meta = PairMeta {
            id: raw.id,
            suite: raw.suite.parse()?,
            condition: raw.condition,
            attractors: raw.attractors,
            source_ref: raw.source_ref,
        };
        make_minimal_pair(raw.tokens, raw.focus_index, raw.correct, raw.incorrect, meta)
    }
}

fn parse_line(line: &str, line_no: usize) -> Result<MinimalPair, StimulusError> {
    let raw: RawPair = serde_json::from_str(line).map_err(|e| StimulusError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    MinimalPair::try_from(raw).map_err(|source| StimulusError::Invalid {
        line: line_no,
        source: Box::new(source),
    })
}

/// Writes one JSON object per line, in input order.
pub fn write_stimuli<'a, W, I>(pairs: I, mut sink: W) -> Result<(), StimulusError>
where
    W: Write,
    I: IntoIterator<Item = &'a MinimalPair>,
{
    for pair in pairs {
        serde_json::to_writer(&mut sink, pair).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

/// Reads a stimulus JSONL stream. Blank lines are ignored; line numbers in
/// errors are 1-based.
pub fn read_stimuli<R: BufRead>(source: R) -> Result<Vec<MinimalPair>, StimulusError> {
    let mut pairs = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        pairs.push(parse_line(&line, idx + 1)?);
    }
    Ok(pairs)
}

/// Judgment for one pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Correct,
    Incorrect,
    Tie,
    Skipped,
}

/// Per-pair evaluation result, carrying the pair's grouping metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub pair_id: String,
    pub verdict: Verdict,
    pub score_correct: Option<f64>,
    pub score_incorrect: Option<f64>,
    #[serde(default)]
    pub skip_reason: String,
    pub suite: Suite,
    #[serde(default)]
    pub condition: String,
    #[serde(default)]
    pub attractors: Option<u32>,
}

impl EvaluationRecord {
    /// Verdict from a strict comparison; equal scores become `tie_verdict`.
    pub fn scored(pair: &MinimalPair, score_correct: f64, score_incorrect: f64, tie_verdict: Verdict) -> Self {
        let verdict = if score_correct > score_incorrect {
            Verdict::Correct
        } else if score_correct == score_incorrect {
            tie_verdict
        } else {
            Verdict::Incorrect
        };
        Self {
            pair_id: pair.id.clone(),
            verdict,
            score_correct: Some(score_correct),
            score_incorrect: Some(score_incorrect),
            skip_reason: String::new(),
            suite: pair.suite,
            condition: pair.condition.clone(),
            attractors: pair.attractors,
        }
    }

    pub fn skipped(pair: &MinimalPair, reason: impl Into<String>) -> Self {
        let reason = reason.into();
        debug_assert!(!reason.is_empty());
        Self {
            pair_id: pair.id.clone(),
            verdict: Verdict::Skipped,
            score_correct: None,
            score_incorrect: None,
            skip_reason: reason,
            suite: pair.suite,
            condition: pair.condition.clone(),
            attractors: pair.attractors,
        }
    }
}

pub fn write_records<'a, W, I>(records: I, mut sink: W) -> Result<(), StimulusError>
where
    W: Write,
    I: IntoIterator<Item = &'a EvaluationRecord>,
{
    for record in records {
        serde_json::to_writer(&mut sink, record).map_err(std::io::Error::from)?;
        sink.write_all(b"\n")?;
    }
    sink.flush()?;
    Ok(())
}

pub fn read_records<R: BufRead>(source: R) -> Result<Vec<EvaluationRecord>, StimulusError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EvaluationRecord = serde_json::from_str(&line).map_err(|e| StimulusError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        let consistent = match record.verdict {
            Verdict::Skipped => record.score_correct.is_none() && !record.skip_reason.is_empty(),
            _ => record.score_correct.is_some() && record.score_incorrect.is_some(),
        };
        if !consistent {
            return Err(StimulusError::Parse {
                line: idx + 1,
                message: "verdict inconsistent with scores".into(),
            });
        }
        out.push(record);
    }
    Ok(out)
}
