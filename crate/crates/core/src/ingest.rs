//! Natural-sentence ingestion and attractor profiling.
//!
//! Input sentences carry per-token coarse POS tags, number features, and the
//! indices of the focus verb and the head noun of its subject. Multi-word
//! subjects are represented by their head index only.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{make_minimal_pair, MinimalPair, PairMeta, StimulusError, Suite};
use crate::Number;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("annotation length mismatch: {tokens} tokens, {pos} pos tags, {number} number tags")]
    LengthMismatch { tokens: usize, pos: usize, number: usize },
    #[error("{what} index {index} out of range for {len} tokens")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },
    #[error("focus token {0} must be a verb with a number feature")]
    BadFocus(usize),
    #[error("subject token {0} must be a noun with a number feature")]
    BadSubject(usize),
    #[error("subject and focus verb share index {0}")]
    SameIndex(usize),
    #[error("subject (index {subject}) follows the focus verb (index {focus}); inversion is unsupported")]
    SubjectAfterVerb { subject: usize, focus: usize },
    #[error("no inflection entry for {0:?}")]
    UnknownInflection(String),
    #[error("inflection table line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A naturally occurring sentence with the annotations ingestion needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotatedSentence {
    pub tokens: Vec<String>,
    pub pos: Vec<String>,
    pub number: Vec<Option<Number>>,
    pub focus: usize,
    pub subject: usize,
    #[serde(default)]
    pub source_ref: String,
}

impl AnnotatedSentence {
    pub fn is_noun(&self, i: usize) -> bool {
        self.pos[i] == "noun"
    }

    /// Structural checks shared by every consumer of the annotation.
    pub fn validate(&self) -> Result<(), IngestError> {
        let len = self.tokens.len();
        if self.pos.len() != len || self.number.len() != len {
            return Err(IngestError::LengthMismatch {
                tokens: len,
                pos: self.pos.len(),
                number: self.number.len(),
            });
        }
        for (what, index) in [("focus", self.focus), ("subject", self.subject)] {
            if index >= len {
                return Err(IngestError::IndexOutOfRange { what, index, len });
            }
        }
        if self.focus == self.subject {
            return Err(IngestError::SameIndex(self.focus));
        }
        if self.pos[self.focus] != "verb" || self.number[self.focus].is_none() {
            return Err(IngestError::BadFocus(self.focus));
        }
        if !self.is_noun(self.subject) || self.number[self.subject].is_none() {
            return Err(IngestError::BadSubject(self.subject));
        }
        Ok(())
    }
}

/// Nouns between subject and focus verb, and whether they all disagree with
/// the subject in number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AttractorProfile {
    pub subject_index: usize,
    pub verb_index: usize,
    pub intervening_noun_count: u32,
    /// Vacuously true when there are no intervening nouns.
    pub all_opposite: bool,
    /// `intervening_noun_count` when the sentence qualifies, else 0.
    pub attractor_count: u32,
    /// At least one intervening noun, all of opposite number.
    pub qualifying: bool,
}

pub fn count_attractors(sentence: &AnnotatedSentence) -> Result<AttractorProfile, IngestError> {
    sentence.validate()?;
    let (subject, focus) = (sentence.subject, sentence.focus);
    if subject > focus {
        return Err(IngestError::SubjectAfterVerb { subject, focus });
    }
    let subject_number = sentence.number[subject].expect("validated");
    let mut intervening = 0u32;
    let mut all_opposite = true;
    for i in (subject + 1)..focus {
        if sentence.is_noun(i) {
            intervening += 1;
            if sentence.number[i] != Some(subject_number.opposite()) {
                all_opposite = false;
            }
        }
    }
    let qualifying = all_opposite && intervening >= 1;
    Ok(AttractorProfile {
        subject_index: subject,
        verb_index: focus,
        intervening_noun_count: intervening,
        all_opposite,
        attractor_count: if qualifying { intervening } else { 0 },
        qualifying,
    })
}

/// Singular/plural present-tense verb pairs.
#[derive(Debug, Clone, Default)]
pub struct InflectionTable {
    pairs: Vec<(String, String)>,
    index: HashMap<String, usize>,
}

impl InflectionTable {
    /// The table bundled with the crate.
    pub fn shipped() -> Self {
        Self::from_tsv(include_str!("../data/inflections.tsv")).expect("bundled table is valid")
    }

    /// Parses `singular<TAB>plural` rows. An optional `singular\tplural`
    /// header, blank lines and `#` comments are skipped.
    pub fn from_tsv(text: &str) -> Result<Self, IngestError> {
        let mut table = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = trimmed.split('\t').map(str::trim).collect();
            if cols.len() != 2 {
                return Err(IngestError::Table {
                    line: line_no,
                    message: format!("expected 2 columns, found {}", cols.len()),
                });
            }
            if line_no == 1 && cols == ["singular", "plural"] {
                continue;
            }
            table
                .insert(cols[0].to_lowercase(), cols[1].to_lowercase())
                .map_err(|message| IngestError::Table { line: line_no, message })?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, singular: String, plural: String) -> Result<(), String> {
        if singular == plural || singular.is_empty() {
            return Err(format!("degenerate entry {singular:?}/{plural:?}"));
        }
        for form in [&singular, &plural] {
            if let Some(&i) = self.index.get(form) {
                if self.pairs[i] != (singular.clone(), plural.clone()) {
                    return Err(format!("{form:?} already belongs to another entry"));
                }
                return Ok(());
            }
        }
        let i = self.pairs.len();
        self.index.insert(singular.clone(), i);
        self.index.insert(plural.clone(), i);
        self.pairs.push((singular, plural));
        Ok(())
    }

    pub fn lookup(&self, form: &str) -> Option<(&str, &str)> {
        self.index.get(form).map(|&i| {
            let (sg, pl) = &self.pairs[i];
            (sg.as_str(), pl.as_str())
        })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Returns `(singular_form, plural_form)` for either form of a verb.
pub fn inflection_pair(verb_form: &str, table: &InflectionTable) -> Result<(String, String), IngestError> {
    table
        .lookup(verb_form)
        .map(|(sg, pl)| (sg.to_string(), pl.to_string()))
        .ok_or_else(|| IngestError::UnknownInflection(verb_form.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    OovInflection,
    SubjectAfterVerb,
}

/// Result of ingesting one sentence: a pair or a recorded skip.
#[derive(Debug, Clone, PartialEq)]
pub enum IngestOutcome {
    Pair(MinimalPair),
    Skipped { reason: SkipReason, source_ref: String },
}

/// Converts an annotated sentence into a natural-suite pair.
///
/// Tokens are lowercased. Malformed annotations are errors; sentences that
/// are well-formed but unusable come back as [`IngestOutcome::Skipped`].
pub fn ingest_sentence(sentence: &AnnotatedSentence, table: &InflectionTable) -> Result<IngestOutcome, IngestError> {
    let skipped = |reason| IngestOutcome::Skipped {
        reason,
        source_ref: sentence.source_ref.clone(),
    };
    let profile = match count_attractors(sentence) {
        Ok(p) => p,
        Err(IngestError::SubjectAfterVerb { .. }) => return Ok(skipped(SkipReason::SubjectAfterVerb)),
        Err(e) => return Err(e),
    };
    let tokens: Vec<String> = sentence.tokens.iter().map(|t| t.to_lowercase()).collect();
    let verb = &tokens[sentence.focus];
    let Some((sg, pl)) = table.lookup(verb) else {
        return Ok(skipped(SkipReason::OovInflection));
    };
    let incorrect = if verb == sg { pl } else { sg }.to_string();
    let correct = verb.clone();
    let meta = PairMeta::new(Suite::Natural)
        .with_attractors(profile.attractor_count)
        .with_source(sentence.source_ref.clone());
    Ok(IngestOutcome::Pair(make_minimal_pair(tokens, sentence.focus, correct, incorrect, meta)?))
}

/// Reads annotated-sentence JSONL; line numbers in errors are 1-based.
pub fn read_annotated<R: BufRead>(source: R) -> Result<Vec<AnnotatedSentence>, IngestError> {
    let mut out = Vec::new();
    for (idx, line) in source.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let sentence: AnnotatedSentence = serde_json::from_str(&line).map_err(|e| IngestError::Parse {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push(sentence);
    }
    Ok(out)
}
