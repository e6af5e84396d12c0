//! "Colorless green ideas" substitution.
//!
//! Every content word of a natural stimulus except the focus verb is replaced
//! by a random word sharing its POS tag and number feature. Function words,
//! punctuation and the focus position are left alone, so the scored number
//! contrast is the original one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use thiserror::Error;

use crate::ingest::AnnotatedSentence;
use crate::stimulus::{make_minimal_pair, MinimalPair, StimulusError, Suite};
use crate::Number;

#[derive(Debug, Error)]
pub enum NonceError {
    #[error("no substitution class for {0}")]
    MissingClass(ClassKey),
    #[error("substitution class {0} is empty")]
    EmptyClass(ClassKey),
    #[error("substitution class {0} contains an empty or multi-word candidate")]
    BadCandidate(ClassKey),
    #[error("malformed class key {0:?} (expected \"pos\" or \"pos|sg\" / \"pos|pl\")")]
    BadKey(String),
    #[error("annotation has {annotated} tokens but the pair has {pair}")]
    Misaligned { annotated: usize, pair: usize },
    #[error("annotation focus {annotated} does not match pair focus {pair}")]
    FocusMismatch { annotated: usize, pair: usize },
    #[error("invalid substitution lexicon: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

/// A (POS, number feature) substitution class key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ClassKey {
    pub pos: String,
    pub number: Option<Number>,
}

impl ClassKey {
    pub fn new(pos: impl Into<String>, number: Option<Number>) -> Self {
        Self {
            pos: pos.into(),
            number,
        }
    }

    /// Parses `noun|sg`, `verb|3sg`, `adj`, ...
    pub fn parse(text: &str) -> Result<Self, NonceError> {
        let bad = || NonceError::BadKey(text.to_string());
        let mut parts = text.split('|');
        let pos = parts.next().filter(|p| !p.is_empty()).ok_or_else(bad)?;
        let number = match parts.next() {
            None => None,
            Some(tag) => Some(Number::parse(tag).ok_or_else(bad)?),
        };
        if parts.next().is_some() {
            return Err(bad());
        }
        Ok(Self::new(pos, number))
    }
}

impl fmt::Display for ClassKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.number {
            Some(n) => write!(f, "({}, {})", self.pos, n.tag()),
            None => write!(f, "({})", self.pos),
        }
    }
}

/// Candidate replacement words per class.
#[derive(Debug, Clone, Default)]
pub struct SubstitutionLexicon {
    classes: BTreeMap<ClassKey, Vec<String>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconDocument {
    classes: BTreeMap<String, Vec<String>>,
}

impl SubstitutionLexicon {
    /// Loads `{"classes": {"noun|sg": [...], ...}}`.
    pub fn from_json(document: &str) -> Result<Self, NonceError> {
        let doc: LexiconDocument = serde_json::from_str(document)?;
        let mut lexicon = Self::default();
        for (key, words) in doc.classes {
            lexicon.insert(ClassKey::parse(&key)?, words)?;
        }
        Ok(lexicon)
    }

    pub fn insert(&mut self, key: ClassKey, words: Vec<String>) -> Result<(), NonceError> {
        if words.is_empty() {
            return Err(NonceError::EmptyClass(key));
        }
        if words.iter().any(|w| w.is_empty() || w.contains(char::is_whitespace)) {
            return Err(NonceError::BadCandidate(key));
        }
        self.classes.entry(key).or_default().extend(words);
        Ok(())
    }

    pub fn candidates(&self, key: &ClassKey) -> Option<&[String]> {
        self.classes.get(key).map(Vec::as_slice)
    }
}

/// POS tags treated as content words.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentPos(BTreeSet<String>);

impl Default for ContentPos {
    fn default() -> Self {
        Self::new(["noun", "verb", "adj"])
    }
}

impl ContentPos {
    pub fn new<I, S>(tags: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self(tags.into_iter().map(Into::into).collect())
    }

    pub fn contains(&self, pos: &str) -> bool {
        self.0.contains(pos)
    }
}

fn id_seed(id: &str) -> u64 {
    // ids are hex digests by default; anything else is folded with FNV-1a
    match u64::from_str_radix(id.get(..16).unwrap_or(id), 16) {
        Ok(v) if id.len() >= 16 => v,
        _ => id.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
        }),
    }
}

/// Replaces every content word of `pair` outside the focus with a seeded
/// random draw from its (POS, number) class.
///
/// `annotation` is the sentence the pair was ingested from and supplies the
/// per-token tags. The draw for a pair depends only on `seed` and the pair
/// id, never on the order pairs are processed in.
pub fn nonce_substitute(
    pair: &MinimalPair,
    annotation: &AnnotatedSentence,
    lexicon: &SubstitutionLexicon,
    content: &ContentPos,
    seed: u64,
) -> Result<MinimalPair, NonceError> {
    if annotation.tokens.len() != pair.tokens().len()
        || annotation.pos.len() != pair.tokens().len()
        || annotation.number.len() != pair.tokens().len()
    {
        return Err(NonceError::Misaligned {
            annotated: annotation.tokens.len(),
            pair: pair.tokens().len(),
        });
    }
    if annotation.focus != pair.focus_index() {
        return Err(NonceError::FocusMismatch {
            annotated: annotation.focus,
            pair: pair.focus_index(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ id_seed(pair.id()));
    let mut tokens = pair.tokens().to_vec();
    for (i, token) in tokens.iter_mut().enumerate() {
        if i == pair.focus_index() || !content.contains(&annotation.pos[i]) {
            continue;
        }
        let key = ClassKey::new(annotation.pos[i].clone(), annotation.number[i]);
        let candidates = lexicon
            .candidates(&key)
            .ok_or_else(|| NonceError::MissingClass(key.clone()))?;
        *token = candidates[rng.random_range(0..candidates.len())].clone();
    }
    let mut meta = pair.meta();
    meta.id = None;
    meta.suite = Suite::Nonce;
    Ok(make_minimal_pair(
        tokens,
        pair.focus_index(),
        pair.correct_form(),
        pair.incorrect_form(),
        meta,
    )?)
}
