//! Accuracy tables.
//!
//! Accuracy is `correct / (correct + incorrect + ties)`, so ties count
//! against a model. Skipped records are tallied but excluded from `n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::stimulus::{EvaluationRecord, Suite, Verdict};
use crate::templates::Condition;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("records span several suites ({0}); group by `all` or split the input")]
    MixedSuites(String),
    #[error("unknown grouping {0:?} (expected attractors, condition or all)")]
    UnknownGrouping(String),
    #[error("unknown format {0:?} (expected tsv, markdown or json)")]
    UnknownFormat(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    Attractors,
    Condition,
    All,
}

impl FromStr for GroupBy {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "attractors" => Ok(GroupBy::Attractors),
            "condition" => Ok(GroupBy::Condition),
            "all" => Ok(GroupBy::All),
            other => Err(ReportError::UnknownGrouping(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Tsv,
    Markdown,
    Json,
}

impl FromStr for Format {
    type Err = ReportError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(Format::Tsv),
            "markdown" | "md" => Ok(Format::Markdown),
            "json" => Ok(Format::Json),
            other => Err(ReportError::UnknownFormat(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub group: String,
    /// Ties count as errors; `None` when no record was scored.
    pub accuracy: Option<f64>,
    pub accuracy_excluding_ties: Option<f64>,
    pub n: usize,
    pub correct: usize,
    pub incorrect: usize,
    pub ties: usize,
    pub skipped: usize,
    /// An attractor group other than 1-4 (0, 5+ or none).
    pub extra: bool,
}

#[derive(Debug, Default, Clone, Copy)]
struct Tally {
    correct: usize,
    incorrect: usize,
    ties: usize,
    skipped: usize,
}

impl Tally {
    fn add(&mut self, verdict: Verdict) {
        match verdict {
            Verdict::Correct => self.correct += 1,
            Verdict::Incorrect => self.incorrect += 1,
            Verdict::Tie => self.ties += 1,
            Verdict::Skipped => self.skipped += 1,
        }
    }

    fn row(self, group: String, extra: bool) -> Row {
        let n = self.correct + self.incorrect + self.ties;
        let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
        Row {
            group,
            accuracy: ratio(self.correct, n),
            accuracy_excluding_ties: ratio(self.correct, self.correct + self.incorrect),
            n,
            correct: self.correct,
            incorrect: self.incorrect,
            ties: self.ties,
            skipped: self.skipped,
            extra,
        }
    }
}

/// Sort key for groups: numeric or condition order first, then anything else.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum GroupKey {
    Attractors(u32),
    FivePlus,
    NoAttractors,
    Condition(usize),
    OtherCondition(String),
}

impl GroupKey {
    fn for_record(record: &EvaluationRecord, by: GroupBy) -> Option<Self> {
        match by {
            GroupBy::All => None,
            GroupBy::Attractors => Some(match record.attractors {
                Some(n) if n >= 5 => GroupKey::FivePlus,
                Some(n) => GroupKey::Attractors(n),
                None => GroupKey::NoAttractors,
            }),
            GroupBy::Condition => Some(match record.condition.parse::<Condition>() {
                Ok(c) => GroupKey::Condition(c.rank()),
                Err(_) => GroupKey::OtherCondition(record.condition.clone()),
            }),
        }
    }

    fn label(&self) -> String {
        match self {
            GroupKey::Attractors(n) => n.to_string(),
            GroupKey::FivePlus => "5+".into(),
            GroupKey::NoAttractors => "none".into(),
            GroupKey::Condition(rank) => Condition::ALL[*rank].name().into(),
            GroupKey::OtherCondition(c) if c.is_empty() => "(none)".into(),
            GroupKey::OtherCondition(c) => c.clone(),
        }
    }

    fn extra(&self) -> bool {
        !matches!(
            self,
            GroupKey::Attractors(1..=4) | GroupKey::Condition(_) | GroupKey::OtherCondition(_)
        )
    }
}

/// Groups records and computes accuracy per group. An `All` row comes first.
pub fn aggregate(records: &[EvaluationRecord], group_by: GroupBy) -> Result<Vec<Row>, ReportError> {
    let suites: BTreeSet<Suite> = records.iter().map(|r| r.suite).collect();
    if suites.len() > 1 && group_by != GroupBy::All {
        let names: Vec<&str> = suites.iter().map(|s| s.as_str()).collect();
        return Err(ReportError::MixedSuites(names.join(", ")));
    }
    let mut total = Tally::default();
    let mut groups: BTreeMap<GroupKey, Tally> = BTreeMap::new();
    for record in records {
        total.add(record.verdict);
        if let Some(key) = GroupKey::for_record(record, group_by) {
            groups.entry(key).or_default().add(record.verdict);
        }
    }
    let mut rows = vec![total.row("All".into(), false)];
    rows.extend(groups.into_iter().map(|(key, tally)| {
        let extra = key.extra();
        tally.row(key.label(), extra)
    }));
    Ok(rows)
}

fn fmt_accuracy(acc: Option<f64>) -> String {
    acc.map(|a| format!("{a:.4}")).unwrap_or_else(|| "NA".into())
}

fn display_group(row: &Row) -> String {
    if row.extra {
        format!("{} (extra)", row.group)
    } else {
        row.group.clone()
    }
}

/// Renders rows with the fixed column order group, accuracy, n, ties,
/// skipped. JSON output also carries the tie-excluded accuracy and raw
/// counts.
pub fn render(rows: &[Row], format: Format) -> String {
    let mut out = String::new();
    match format {
        Format::Tsv => {
            out.push_str("group\taccuracy\tn\tties\tskipped\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    display_group(r),
                    fmt_accuracy(r.accuracy),
                    r.n,
                    r.ties,
                    r.skipped
                );
            }
        }
        Format::Markdown => {
            out.push_str("| group | accuracy | n | ties | skipped |\n");
            out.push_str("|---|---:|---:|---:|---:|\n");
            for r in rows {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {} | {} |",
                    display_group(r),
                    fmt_accuracy(r.accuracy),
                    r.n,
                    r.ties,
                    r.skipped
                );
            }
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Doc<'a> {
                rows: &'a [Row],
            }
            out = serde_json::to_string_pretty(&Doc { rows }).expect("rows serialize");
            out.push('\n');
        }
    }
    out
}
