//! Template grammars for controlled agreement and reflexive stimuli.
//!
//! Each [`Condition`] has one built-in [`ConditionTemplate`]: a sequence of
//! literal tokens and slots. Slots are filled from a [`Lexicon`]; the
//! expansion is the cartesian product of all slot choices, iterated
//! lexicographically with the leftmost slot varying slowest.
//!
//! Noun slots draw from a pair of classes `<class>_sg` / `<class>_pl`, and the
//! number of the chosen noun is what agreeing verb and reflexive slots follow.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stimulus::{make_minimal_pair, MinimalPair, PairMeta, StimulusError, Suite};
use crate::Number;

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("unknown condition {0:?}")]
    UnknownCondition(String),
    #[error("lexicon has no slot class {0:?}")]
    MissingClass(String),
    #[error("slot class {0:?} is empty")]
    EmptyClass(String),
    #[error("lexicon has no reflexive entries")]
    NoReflexives,
    #[error("class {class:?} lists {word:?}, which has no verb inflection entry")]
    UnknownVerb { class: String, word: String },
    #[error("duplicate word {word:?} in class {class:?}")]
    DuplicateWord { class: String, word: String },
    #[error("verb entry has identical forms ({0:?})")]
    IdenticalForms(String),
    #[error("word {word:?} appears in conflicting {kind} entries")]
    ConflictingEntry { kind: &'static str, word: String },
    #[error("expansion of {0} is too large to index")]
    TooLarge(String),
    #[error("invalid lexicon document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Stimulus(#[from] StimulusError),
}

/// The thirteen controlled conditions, in reporting order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    SimpleAgreement,
    SententialComplement,
    ShortVpCoordination,
    LongVpCoordination,
    AcrossPrepositionalPhrase,
    AcrossSubjectRelativeClause,
    AcrossObjectRelativeClause,
    AcrossObjectRelativeNoThat,
    InObjectRelativeClause,
    InObjectRelativeNoThat,
    ReflexiveSimple,
    ReflexiveSententialComplement,
    ReflexiveAcrossRelativeClause,
}

impl Condition {
    pub const ALL: [Condition; 13] = [
        Condition::SimpleAgreement,
        Condition::SententialComplement,
        Condition::ShortVpCoordination,
        Condition::LongVpCoordination,
        Condition::AcrossPrepositionalPhrase,
        Condition::AcrossSubjectRelativeClause,
        Condition::AcrossObjectRelativeClause,
        Condition::AcrossObjectRelativeNoThat,
        Condition::InObjectRelativeClause,
        Condition::InObjectRelativeNoThat,
        Condition::ReflexiveSimple,
        Condition::ReflexiveSententialComplement,
        Condition::ReflexiveAcrossRelativeClause,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::SimpleAgreement => "simple_agreement",
            Condition::SententialComplement => "sentential_complement",
            Condition::ShortVpCoordination => "short_vp_coordination",
            Condition::LongVpCoordination => "long_vp_coordination",
            Condition::AcrossPrepositionalPhrase => "across_prepositional_phrase",
            Condition::AcrossSubjectRelativeClause => "across_subject_relative_clause",
            Condition::AcrossObjectRelativeClause => "across_object_relative_clause",
            Condition::AcrossObjectRelativeNoThat => "across_object_relative_no_that",
            Condition::InObjectRelativeClause => "in_object_relative_clause",
            Condition::InObjectRelativeNoThat => "in_object_relative_no_that",
            Condition::ReflexiveSimple => "reflexive_simple",
            Condition::ReflexiveSententialComplement => "reflexive_sentential_complement",
            Condition::ReflexiveAcrossRelativeClause => "reflexive_across_relative_clause",
        }
    }

    /// Human-readable row label.
    pub fn label(self) -> &'static str {
        match self {
            Condition::SimpleAgreement | Condition::ReflexiveSimple => "Simple",
            Condition::SententialComplement | Condition::ReflexiveSententialComplement => {
                "In a sentential complement"
            }
            Condition::ShortVpCoordination => "Short VP coordination",
            Condition::LongVpCoordination => "Long VP coordination",
            Condition::AcrossPrepositionalPhrase => "Across a prepositional phrase",
            Condition::AcrossSubjectRelativeClause => "Across a subject relative clause",
            Condition::AcrossObjectRelativeClause => "Across an object relative clause",
            Condition::AcrossObjectRelativeNoThat => "Across an object relative (no that)",
            Condition::InObjectRelativeClause => "In an object relative clause",
            Condition::InObjectRelativeNoThat => "In an object relative (no that)",
            Condition::ReflexiveAcrossRelativeClause => "Across a relative clause",
        }
    }

    pub fn is_reflexive(self) -> bool {
        matches!(
            self,
            Condition::ReflexiveSimple
                | Condition::ReflexiveSententialComplement
                | Condition::ReflexiveAcrossRelativeClause
        )
    }

    /// Position in reporting order.
    pub fn rank(self) -> usize {
        Condition::ALL.iter().position(|c| *c == self).expect("listed")
    }

    pub fn template(self) -> ConditionTemplate {
        builtin_template(self)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Condition {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Condition::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| TemplateError::UnknownCondition(s.to_string()))
    }
}

/// Condition names in reporting order.
pub fn list_conditions() -> Vec<&'static str> {
    Condition::ALL.iter().map(|c| c.name()).collect()
}

/// One position of a template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Slot {
    Literal { token: &'static str },
    /// Noun from `<class>_sg` or `<class>_pl`; its number controls agreement.
    Noun { class: &'static str },
    /// Number-invariant word.
    Word { class: &'static str },
    /// Verb inflected to agree with the noun slot at `controller`.
    Verb { class: &'static str, controller: usize },
    /// Reflexive pronoun agreeing with the noun slot at `controller`.
    Reflexive { controller: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConditionTemplate {
    pub condition: Condition,
    pub slots: Vec<Slot>,
    /// Index into `slots` of the verb or reflexive that is the focus.
    pub focus: usize,
}

impl ConditionTemplate {
    /// Compact textual rendering, e.g. `the {noun} {*intransitive_verb@1} .`
    pub fn pattern(&self) -> String {
        self.slots
            .iter()
            .enumerate()
            .map(|(i, slot)| {
                let star = if i == self.focus { "*" } else { "" };
                match slot {
                    Slot::Literal { token } => token.to_string(),
                    Slot::Noun { class } => format!("{{{class}}}"),
                    Slot::Word { class } => format!("{{{class}}}"),
                    Slot::Verb { class, controller } => format!("{{{star}{class}@{controller}}}"),
                    Slot::Reflexive { controller } => format!("{{{star}reflexive@{controller}}}"),
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Classes this template needs from a lexicon, in slot order.
    pub fn required_classes(&self) -> Vec<String> {
        let mut out = Vec::new();
        for slot in &self.slots {
            match slot {
                Slot::Noun { class } => {
                    out.push(format!("{class}_sg"));
                    out.push(format!("{class}_pl"));
                }
                Slot::Word { class } | Slot::Verb { class, .. } => out.push(class.to_string()),
                Slot::Literal { .. } | Slot::Reflexive { .. } => {}
            }
        }
        out.dedup();
        out
    }
}

fn lit(token: &'static str) -> Slot {
    Slot::Literal { token }
}

fn noun() -> Slot {
    Slot::Noun { class: "noun" }
}

fn word(class: &'static str) -> Slot {
    Slot::Word { class }
}

fn verb(class: &'static str, controller: usize) -> Slot {
    Slot::Verb { class, controller }
}

fn refl(controller: usize) -> Slot {
    Slot::Reflexive { controller }
}

const IV: &str = "intransitive_verb";
const TV: &str = "transitive_verb";
const COP: &str = "copula";
const ADJ: &str = "adjective";
const PREP: &str = "preposition";
const COMP: &str = "complement_verb";
const RV: &str = "reflexive_verb";

fn builtin_template(condition: Condition) -> ConditionTemplate {
    use Condition::*;
    let (slots, focus) = match condition {
        // the author laughs .
        SimpleAgreement => (vec![lit("the"), noun(), verb(IV, 1), lit(".")], 2),
        // the mechanic said the author laughs .
        SententialComplement => (
            vec![lit("the"), noun(), word(COMP), lit("the"), noun(), verb(IV, 4), lit(".")],
            5,
        ),
        // the author laughs and swims .
        ShortVpCoordination => (
            vec![lit("the"), noun(), verb(IV, 1), lit("and"), verb(IV, 1), lit(".")],
            4,
        ),
        // the author likes the old pilots and swims .
        LongVpCoordination => (
            vec![
                lit("the"),
                noun(),
                verb(TV, 1),
                lit("the"),
                word(ADJ),
                noun(),
                lit("and"),
                verb(IV, 1),
                lit("."),
            ],
            7,
        ),
        // the farmer near the parents smiles .
        AcrossPrepositionalPhrase => (
            vec![lit("the"), noun(), word(PREP), lit("the"), noun(), verb(IV, 1), lit(".")],
            5,
        ),
        // the officers that love the skater smile .
        AcrossSubjectRelativeClause => (
            vec![
                lit("the"),
                noun(),
                lit("that"),
                verb(TV, 1),
                lit("the"),
                noun(),
                verb(IV, 1),
                lit("."),
            ],
            6,
        ),
        // the game that the guard hates is bad .
        AcrossObjectRelativeClause => (
            vec![
                lit("the"),
                noun(),
                lit("that"),
                lit("the"),
                noun(),
                verb(TV, 4),
                verb(COP, 1),
                word(ADJ),
                lit("."),
            ],
            6,
        ),
        AcrossObjectRelativeNoThat => (
            vec![
                lit("the"),
                noun(),
                lit("the"),
                noun(),
                verb(TV, 3),
                verb(COP, 1),
                word(ADJ),
                lit("."),
            ],
            5,
        ),
        // the game that the guards hate is bad .  (focus: hate/hates)
        InObjectRelativeClause => (
            vec![
                lit("the"),
                noun(),
                lit("that"),
                lit("the"),
                noun(),
                verb(TV, 4),
                verb(COP, 1),
                word(ADJ),
                lit("."),
            ],
            5,
        ),
        InObjectRelativeNoThat => (
            vec![
                lit("the"),
                noun(),
                lit("the"),
                noun(),
                verb(TV, 3),
                verb(COP, 1),
                word(ADJ),
                lit("."),
            ],
            4,
        ),
        // the senator hurt himself .
        ReflexiveSimple => (vec![lit("the"), noun(), word(RV), refl(1), lit(".")], 3),
        // the mechanics said the senator hurt himself .
        ReflexiveSententialComplement => (
            vec![
                lit("the"),
                noun(),
                word(COMP),
                lit("the"),
                noun(),
                word(RV),
                refl(4),
                lit("."),
            ],
            6,
        ),
        // the manager that the architects like doubted himself .
        ReflexiveAcrossRelativeClause => (
            vec![
                lit("the"),
                noun(),
                lit("that"),
                lit("the"),
                noun(),
                verb(TV, 4),
                word(RV),
                refl(1),
                lit("."),
            ],
            7,
        ),
    };
    ConditionTemplate {
        condition,
        slots,
        focus,
    }
}

/// Slot fillers plus verb and reflexive inflection pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lexicon {
    classes: BTreeMap<String, Vec<String>>,
    verbs: Vec<(String, String)>,
    verb_index: HashMap<String, usize>,
    reflexives: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconDocument {
    #[serde(default)]
    classes: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    verbs: Vec<(String, String)>,
    #[serde(default)]
    reflexives: Vec<(String, String)>,
}

/// Parses and validates a lexicon JSON document.
///
/// Class coverage is checked lazily, when a condition is expanded.
pub fn load_lexicon(document: &str) -> Result<Lexicon, TemplateError> {
    let doc: LexiconDocument = serde_json::from_str(document)?;
    Lexicon::new(doc.classes, doc.verbs, doc.reflexives)
}

fn check_pairs(kind: &'static str, pairs: &[(String, String)]) -> Result<(), TemplateError> {
    let mut seen: HashSet<&str> = HashSet::new();
    for (sg, pl) in pairs {
        if sg == pl {
            return Err(TemplateError::IdenticalForms(sg.clone()));
        }
        for form in [sg, pl] {
            if form.is_empty() || form.contains(char::is_whitespace) {
                return Err(StimulusError::BadForm(form.clone()).into());
            }
        }
        if !seen.insert(sg) {
            return Err(TemplateError::ConflictingEntry {
                kind,
                word: sg.clone(),
            });
        }
        // a plural may be shared (himself/herself -> themselves) but never
        // double as a singular
        if pairs.iter().any(|(other_sg, _)| other_sg == pl) {
            return Err(TemplateError::ConflictingEntry {
                kind,
                word: pl.clone(),
            });
        }
    }
    Ok(())
}

impl Lexicon {
    pub fn new(
        classes: BTreeMap<String, Vec<String>>,
        verbs: Vec<(String, String)>,
        reflexives: Vec<(String, String)>,
    ) -> Result<Self, TemplateError> {
        for (class, words) in &classes {
            let mut seen = HashSet::new();
            for w in words {
                if w.is_empty() || w.contains(char::is_whitespace) {
                    return Err(StimulusError::BadForm(w.clone()).into());
                }
                if !seen.insert(w.as_str()) {
                    return Err(TemplateError::DuplicateWord {
                        class: class.clone(),
                        word: w.clone(),
                    });
                }
            }
        }
        check_pairs("verb", &verbs)?;
        check_pairs("reflexive", &reflexives)?;
        let mut verb_index = HashMap::new();
        for (i, (sg, pl)) in verbs.iter().enumerate() {
            for form in [sg, pl] {
                if let Some(prev) = verb_index.insert(form.clone(), i) {
                    if verbs[prev] != verbs[i] {
                        return Err(TemplateError::ConflictingEntry {
                            kind: "verb",
                            word: form.clone(),
                        });
                    }
                }
            }
        }
        Ok(Self {
            classes,
            verbs,
            verb_index,
            reflexives,
        })
    }

    pub fn class(&self, name: &str) -> Option<&[String]> {
        self.classes.get(name).map(Vec::as_slice)
    }

    pub fn verbs(&self) -> &[(String, String)] {
        &self.verbs
    }

    pub fn reflexives(&self) -> &[(String, String)] {
        &self.reflexives
    }

    fn nonempty_class(&self, name: &str) -> Result<&[String], TemplateError> {
        let words = self
            .class(name)
            .ok_or_else(|| TemplateError::MissingClass(name.to_string()))?;
        if words.is_empty() {
            return Err(TemplateError::EmptyClass(name.to_string()));
        }
        Ok(words)
    }
}

/// A resolved filler for one slot.
#[derive(Debug, Clone)]
enum Choice<'a> {
    Literal(&'a str),
    Noun(&'a str, Number),
    Word(&'a str),
    /// (singular, plural)
    Inflected(&'a str, &'a str),
}

struct Resolved<'a> {
    template: ConditionTemplate,
    choices: Vec<Vec<Choice<'a>>>,
    total: usize,
}

fn resolve<'a>(template: ConditionTemplate, lexicon: &'a Lexicon) -> Result<Resolved<'a>, TemplateError> {
    let mut choices = Vec::with_capacity(template.slots.len());
    for slot in &template.slots {
        let options = match slot {
            Slot::Literal { token } => vec![Choice::Literal(token)],
            Slot::Noun { class } => {
                let sg = lexicon.nonempty_class(&format!("{class}_sg"))?;
                let pl = lexicon.nonempty_class(&format!("{class}_pl"))?;
                sg.iter()
                    .map(|w| Choice::Noun(w, Number::Singular))
                    .chain(pl.iter().map(|w| Choice::Noun(w, Number::Plural)))
                    .collect()
            }
            Slot::Word { class } => lexicon
                .nonempty_class(class)?
                .iter()
                .map(|w| Choice::Word(w))
                .collect(),
            Slot::Verb { class, .. } => {
                let words = lexicon.nonempty_class(class)?;
                let mut entries = Vec::with_capacity(words.len());
                for w in words {
                    let idx = *lexicon.verb_index.get(w).ok_or_else(|| TemplateError::UnknownVerb {
                        class: class.to_string(),
                        word: w.clone(),
                    })?;
                    if entries.contains(&idx) {
                        return Err(TemplateError::DuplicateWord {
                            class: class.to_string(),
                            word: w.clone(),
                        });
                    }
                    entries.push(idx);
                }
                entries
                    .into_iter()
                    .map(|i| {
                        let (sg, pl) = &lexicon.verbs[i];
                        Choice::Inflected(sg, pl)
                    })
                    .collect()
            }
            Slot::Reflexive { .. } => {
                if lexicon.reflexives.is_empty() {
                    return Err(TemplateError::NoReflexives);
                }
                lexicon
                    .reflexives
                    .iter()
                    .map(|(sg, pl)| Choice::Inflected(sg, pl))
                    .collect()
            }
        };
        choices.push(options);
    }
    let total = choices
        .iter()
        .try_fold(1usize, |acc, c| acc.checked_mul(c.len()))
        .ok_or_else(|| TemplateError::TooLarge(template.condition.to_string()))?;
    Ok(Resolved {
        template,
        choices,
        total,
    })
}

impl Resolved<'_> {
    fn pair_at(&self, mut index: usize) -> Result<MinimalPair, TemplateError> {
        let ordinal = index;
        let mut picked = vec![0usize; self.choices.len()];
        for (slot, options) in self.choices.iter().enumerate().rev() {
            picked[slot] = index % options.len();
            index /= options.len();
        }
        let number_of = |slot: usize| match &self.choices[slot][picked[slot]] {
            Choice::Noun(_, n) => *n,
            other => unreachable!("controller slot {slot} resolved to {other:?}"),
        };
        let mut tokens = Vec::with_capacity(self.choices.len());
        let mut incorrect = String::new();
        for (slot, spec) in self.template.slots.iter().enumerate() {
            let token = match &self.choices[slot][picked[slot]] {
                Choice::Literal(w) | Choice::Word(w) | Choice::Noun(w, _) => w.to_string(),
                Choice::Inflected(sg, pl) => {
                    let controller = match spec {
                        Slot::Verb { controller, .. } | Slot::Reflexive { controller } => *controller,
                        _ => unreachable!("inflected choice for non-agreeing slot"),
                    };
                    let (right, wrong) = match number_of(controller) {
                        Number::Singular => (sg, pl),
                        Number::Plural => (pl, sg),
                    };
                    if slot == self.template.focus {
                        incorrect = wrong.to_string();
                    }
                    right.to_string()
                }
            };
            tokens.push(token);
        }
        let condition = self.template.condition;
        let correct = tokens[self.template.focus].clone();
        let meta = PairMeta::new(Suite::Template)
            .with_condition(condition.name())
            .with_source(format!("template:{}:{ordinal}", condition.name()));
        Ok(make_minimal_pair(tokens, self.template.focus, correct, incorrect, meta)?)
    }
}

/// Number of pairs the full expansion of `condition` would produce.
pub fn expansion_size(condition: Condition, lexicon: &Lexicon) -> Result<usize, TemplateError> {
    Ok(resolve(condition.template(), lexicon)?.total)
}

/// Expands a condition over the lexicon.
///
/// With `max_pairs` set below the full expansion size, a uniform sample
/// without replacement (seeded by `seed`) is returned, still in lexicographic
/// order.
pub fn expand_condition(
    condition: &str,
    lexicon: &Lexicon,
    max_pairs: Option<usize>,
    seed: u64,
) -> Result<Vec<MinimalPair>, TemplateError> {
    let condition: Condition = condition.parse()?;
    let resolved = resolve(condition.template(), lexicon)?;
    match max_pairs {
        Some(cap) if cap < resolved.total => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut picks = rand::seq::index::sample(&mut rng, resolved.total, cap).into_vec();
            picks.sort_unstable();
            picks.into_iter().map(|i| resolved.pair_at(i)).collect()
        }
        _ => (0..resolved.total).map(|i| resolved.pair_at(i)).collect(),
    }
}
