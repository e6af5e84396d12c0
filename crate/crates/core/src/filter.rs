//! Discard rules applied before scoring.
//!
//! Only the two focus candidates are checked against the vocabulary; context
//! words may be split into several pieces by the model.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{MinimalPair, Suite};

#[derive(Debug, Error)]
pub enum FilterError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Single-word vocabulary membership.
pub trait Vocabulary {
    fn contains(&self, word: &str) -> bool;
}

impl<F: Fn(&str) -> bool> Vocabulary for F {
    fn contains(&self, word: &str) -> bool {
        self(word)
    }
}

/// An explicit word set, e.g. loaded from a one-word-per-line vocab file.
/// Matching is case-insensitive.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabSet(HashSet<String>);

impl VocabSet {
    pub fn from_reader<R: BufRead>(reader: R) -> Result<Self, FilterError> {
        let mut words = HashSet::new();
        for line in reader.lines() {
            let line = line?;
            let word = line.trim_end_matches(['\r', '\n']);
            if !word.is_empty() {
                words.insert(word.to_lowercase());
            }
        }
        Ok(Self(words))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn insert(&mut self, word: impl Into<String>) -> bool {
        self.0.insert(word.into().to_lowercase())
    }
}

impl<S: Into<String>> FromIterator<S> for VocabSet {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Self(iter.into_iter().map(|w| w.into().to_lowercase()).collect())
    }
}

impl Vocabulary for VocabSet {
    fn contains(&self, word: &str) -> bool {
        self.0.contains(&word.to_lowercase())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    OovFocus,
    Copular,
}

impl DiscardReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DiscardReason::OovFocus => "oov_focus",
            DiscardReason::Copular => "copular",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FilterRules {
    pub discard_copular: bool,
    pub require_single_token_focus: bool,
}

impl FilterRules {
    /// Copular pairs are discarded for natural and nonce stimuli only.
    pub fn default_for(suite: Suite) -> Self {
        Self {
            discard_copular: suite != Suite::Template,
            require_single_token_focus: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discarded {
    pub reason: DiscardReason,
    pub pair: MinimalPair,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FilterOutcome {
    pub kept: Vec<MinimalPair>,
    pub discarded: Vec<Discarded>,
}

fn is_copular(pair: &MinimalPair) -> bool {
    let forms = [pair.correct_form(), pair.incorrect_form()];
    forms.contains(&"is") && forms.contains(&"are")
}

/// Why `pair` would be discarded, if at all. Vocabulary is checked first.
pub fn discard_reason<V: Vocabulary + ?Sized>(pair: &MinimalPair, vocab: &V, rules: &FilterRules) -> Option<DiscardReason> {
    if rules.require_single_token_focus
        && !(vocab.contains(pair.correct_form()) && vocab.contains(pair.incorrect_form()))
    {
        return Some(DiscardReason::OovFocus);
    }
    if rules.discard_copular && is_copular(pair) {
        return Some(DiscardReason::Copular);
    }
    None
}

/// Splits `pairs` into kept and discarded, preserving order in both.
pub fn filter_pairs<V: Vocabulary + ?Sized>(pairs: Vec<MinimalPair>, vocab: &V, rules: &FilterRules) -> FilterOutcome {
    filter_pairs_with(pairs, vocab, |_| *rules)
}

/// Like [`filter_pairs`], with rules chosen per pair (e.g. by suite).
pub fn filter_pairs_with<V, F>(pairs: Vec<MinimalPair>, vocab: &V, rules_for: F) -> FilterOutcome
where
    V: Vocabulary + ?Sized,
    F: Fn(&MinimalPair) -> FilterRules,
{
    let mut out = FilterOutcome::default();
    for pair in pairs {
        match discard_reason(&pair, vocab, &rules_for(&pair)) {
            Some(reason) => out.discarded.push(Discarded { reason, pair }),
            None => out.kept.push(pair),
        }
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscardSummary {
    pub total: usize,
    pub by_reason: BTreeMap<String, usize>,
    /// Distinct candidate forms that failed the vocabulary check, sorted.
    pub oov_forms: Vec<String>,
}

/// Summarizes a discard list. `vocab` decides which candidate of an
/// `oov_focus` pair is the missing one; pass the predicate used for
/// filtering.
pub fn discard_report<V: Vocabulary + ?Sized>(discarded: &[Discarded], vocab: &V) -> DiscardSummary {
    let mut by_reason = BTreeMap::new();
    let mut forms = BTreeSet::new();
    for d in discarded {
        *by_reason.entry(d.reason.as_str().to_string()).or_insert(0) += 1;
        if d.reason == DiscardReason::OovFocus {
            for form in [d.pair.correct_form(), d.pair.incorrect_form()] {
                if !vocab.contains(form) {
                    forms.insert(form.to_string());
                }
            }
        }
    }
    DiscardSummary {
        total: discarded.len(),
        by_reason,
        oov_forms: forms.into_iter().collect(),
    }
}
