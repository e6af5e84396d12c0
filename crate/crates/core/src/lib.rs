//! Targeted syntactic evaluation of masked language models.
//!
//! The pipeline is: build [`MinimalPair`] stimuli (from templates, annotated
//! corpora, or nonce substitution), filter them against a model vocabulary,
//! score each pair by masking its focus token and comparing the two
//! candidates' scores, then aggregate the verdicts into accuracy tables.

pub mod filter;
pub mod ingest;
pub mod nonce;
pub mod report;
pub mod scoring;
pub mod stimulus;
pub mod templates;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use stimulus::{make_minimal_pair, read_stimuli, write_stimuli, MinimalPair, PairMeta, Suite};

/// Grammatical number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Number {
    Singular,
    Plural,
}

impl Number {
    pub fn opposite(self) -> Self {
        match self {
            Number::Singular => Number::Plural,
            Number::Plural => Number::Singular,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Number::Singular => "sg",
            Number::Plural => "pl",
        }
    }

    /// Accepts `sg`, `singular`, `3sg`, `pl`, `plural` and `3pl`.
    pub fn parse(tag: &str) -> Option<Self> {
        match tag {
            "sg" | "singular" | "3sg" => Some(Number::Singular),
            "pl" | "plural" | "3pl" => Some(Number::Plural),
            _ => None,
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let tag = String::deserialize(d)?;
        Number::parse(&tag).ok_or_else(|| serde::de::Error::custom(format!("unknown number tag {tag:?}")))
    }
}

/// Derives an independent per-stage seed from the run seed.
pub fn derive_seed(seed: u64, stage: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(stage.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Any failure raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Stimulus(#[from] stimulus::StimulusError),
    #[error(transparent)]
    Template(#[from] templates::TemplateError),
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Nonce(#[from] nonce::NonceError),
    #[error(transparent)]
    Filter(#[from] filter::FilterError),
    #[error(transparent)]
    Scorer(#[from] scoring::ScorerError),
    #[error(transparent)]
    Report(#[from] report::ReportError),
}

impl Error {
    /// True for scorer protocol and configuration failures, as opposed to bad
    /// input data.
    pub fn is_protocol(&self) -> bool {
        matches!(self, Error::Scorer(_))
    }
}
