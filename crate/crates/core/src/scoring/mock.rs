//! In-process test scorers.
//!
//! `oracle` and `anti` read the harness convention that the first candidate
//! is the correct one; `random` and `unigram` look only at request content.

use std::collections::HashMap;
use std::io::BufRead;

use sha2::{Digest, Sha256};

use super::{Handshake, Scorer, ScorerError, ScorerRequest, ScorerResponse, MASK};

#[derive(Debug, Clone, PartialEq)]
pub enum MockKind {
    /// Correct candidate 1.0, incorrect 0.0.
    Oracle,
    /// The reverse of `Oracle`.
    Anti,
    /// i.i.d. uniform scores in [0, 1), a pure function of seed and content.
    Random { seed: u64 },
    /// Score = corpus count of the candidate (0 when unlisted).
    Unigram(HashMap<String, u64>),
}

impl MockKind {
    /// Parses `oracle`, `anti`, `random`, `random:<seed>` or
    /// `unigram:<path to word\tcount TSV>`. Bare `random` uses `default_seed`.
    pub fn from_spec(spec: &str, default_seed: u64) -> Result<Self, ScorerError> {
        let bad = || ScorerError::BadUri(format!("mock:{spec}"));
        let (kind, arg) = match spec.split_once(':') {
            Some((k, a)) => (k, Some(a)),
            None => (spec, None),
        };
        match (kind, arg) {
            ("oracle", None) => Ok(MockKind::Oracle),
            ("anti", None) => Ok(MockKind::Anti),
            ("random", None) => Ok(MockKind::Random { seed: default_seed }),
            ("random", Some(seed)) => Ok(MockKind::Random {
                seed: seed.parse().map_err(|_| bad())?,
            }),
            ("unigram", Some(path)) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| ScorerError::Config(format!("unigram table {path}: {e}")))?;
                Ok(MockKind::Unigram(read_frequencies(std::io::BufReader::new(file))?))
            }
            _ => Err(bad()),
        }
    }
}

/// Parses `word<TAB>count` lines.
pub fn read_frequencies<R: BufRead>(reader: R) -> Result<HashMap<String, u64>, ScorerError> {
    let mut table = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = line
            .split_once('\t')
            .and_then(|(w, c)| Some((w.trim().to_string(), c.trim().parse::<u64>().ok()?)));
        let (word, count) =
            parsed.ok_or_else(|| ScorerError::Config(format!("frequency table line {}: expected word<TAB>count", i + 1)))?;
        table.insert(word, count);
    }
    Ok(table)
}

#[derive(Debug, Clone)]
pub struct MockScorer {
    kind: MockKind,
}

impl MockScorer {
    pub fn new(kind: MockKind) -> Self {
        Self { kind }
    }

    pub fn kind(&self) -> &MockKind {
        &self.kind
    }

    fn name(&self) -> String {
        match &self.kind {
            MockKind::Oracle => "mock:oracle".into(),
            MockKind::Anti => "mock:anti".into(),
            MockKind::Random { seed } => format!("mock:random:{seed}"),
            MockKind::Unigram(t) => format!("mock:unigram({} words)", t.len()),
        }
    }

    pub fn score(&self, request: &ScorerRequest) -> ScorerResponse {
        let scores = match &self.kind {
            MockKind::Oracle => [1.0, 0.0],
            MockKind::Anti => [0.0, 1.0],
            MockKind::Random { seed } => request.candidates.clone().map(|c| uniform(*seed, request, &c)),
            MockKind::Unigram(table) => request
                .candidates
                .clone()
                .map(|c| table.get(&c).copied().unwrap_or(0) as f64),
        };
        ScorerResponse::new(request.id.clone(), scores)
    }
}

fn uniform(seed: u64, request: &ScorerRequest, candidate: &str) -> f64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for t in &request.tokens {
        h.update(t.as_bytes());
        h.update([0x1f]);
    }
    h.update((request.mask_index as u64).to_le_bytes());
    h.update(candidate.as_bytes());
    let digest = h.finalize();
    let bits = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl Scorer for MockScorer {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        Ok(Handshake {
            name: self.name(),
            mask_token: MASK.to_string(),
            max_batch: 4096,
            extra: Default::default(),
        })
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        Ok(batch.iter().map(|r| self.score(r)).collect())
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        Ok(match &self.kind {
            MockKind::Unigram(table) => words.iter().map(|w| table.contains_key(w)).collect(),
            _ => vec![true; words.len()],
        })
    }
}

/// Applies a function to every score of the wrapped scorer.
pub struct MapScores<S, F> {
    inner: S,
    f: F,
}

impl<S, F> MapScores<S, F> {
    pub fn new(inner: S, f: F) -> Self {
        Self { inner, f }
    }
}

impl<S: Scorer, F: Fn(f64) -> f64> Scorer for MapScores<S, F> {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        self.inner.hello()
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        let mut out = self.inner.score_batch(batch)?;
        for r in &mut out {
            r.scores = r.scores.map(|s| s.map(&self.f));
        }
        Ok(out)
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        self.inner.vocab_check(words)
    }
}

/// The score-negated version of a scorer.
pub struct Negated<S>(MapScores<S, fn(f64) -> f64>);

impl<S: Scorer> Negated<S> {
    pub fn new(inner: S) -> Self {
        Self(MapScores::new(inner, |s| -s))
    }
}

impl<S: Scorer> Scorer for Negated<S> {
    fn hello(&mut self) -> Result<Handshake, ScorerError> {
        self.0.hello()
    }

    fn score_batch(&mut self, batch: &[ScorerRequest]) -> Result<Vec<ScorerResponse>, ScorerError> {
        self.0.score_batch(batch)
    }

    fn vocab_check(&mut self, words: &[String]) -> Result<Vec<bool>, ScorerError> {
        self.0.vocab_check(words)
    }
}
