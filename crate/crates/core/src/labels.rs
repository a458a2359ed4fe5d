//! Harmonizes the label schemes of the English yes-no corpora into
//! Yes, No and Middle.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Interpretation;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LabelError {
    #[error("unknown mapping scheme `{0}` (known: circa-relaxed, swda-ia, friends-qia)")]
    UnknownScheme(String),
    #[error("label `{label}` is not part of the {scheme} label set")]
    UnknownLabel { scheme: Scheme, label: String },
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<LabelError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "circa-relaxed")]
    CircaRelaxed,
    #[serde(rename = "swda-ia")]
    SwdaIa,
    #[serde(rename = "friends-qia")]
    FriendsQia,
}

/// Result of mapping one original label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mapped {
    Label(Interpretation),
    Discard,
}

const CIRCA_RELAXED: [(&str, Mapped); 6] = [
    ("Yes", Mapped::Label(Interpretation::Yes)),
    ("No", Mapped::Label(Interpretation::No)),
    ("Yes, subject to some conditions", Mapped::Label(Interpretation::Yes)),
    ("In the middle, neither yes nor no", Mapped::Label(Interpretation::Middle)),
    ("Other", Mapped::Discard),
    ("N/A", Mapped::Discard),
];

const SWDA_IA: [(&str, Mapped); 5] = [
    ("Yes", Mapped::Label(Interpretation::Yes)),
    ("Probably Yes", Mapped::Label(Interpretation::Yes)),
    ("Middle", Mapped::Label(Interpretation::Middle)),
    ("Probably No", Mapped::Label(Interpretation::No)),
    ("No", Mapped::Label(Interpretation::No)),
];

const FRIENDS_QIA: [(&str, Mapped); 6] = [
    ("Yes", Mapped::Label(Interpretation::Yes)),
    ("No", Mapped::Label(Interpretation::No)),
    ("Yes, subject to some conditions", Mapped::Label(Interpretation::Yes)),
    ("Neither yes nor no", Mapped::Label(Interpretation::Middle)),
    ("Other", Mapped::Discard),
    ("N/A", Mapped::Discard),
];

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::CircaRelaxed, Scheme::SwdaIa, Scheme::FriendsQia];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::CircaRelaxed => "circa-relaxed",
            Scheme::SwdaIa => "swda-ia",
            Scheme::FriendsQia => "friends-qia",
        }
    }

    /// The full mapping table, in documentation order.
    pub fn table(self) -> &'static [(&'static str, Mapped)] {
        match self {
            Scheme::CircaRelaxed => &CIRCA_RELAXED,
            Scheme::SwdaIa => &SWDA_IA,
            Scheme::FriendsQia => &FRIENDS_QIA,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = LabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL.into_iter().find(|k| k.name() == s).ok_or_else(|| LabelError::UnknownScheme(s.to_string()))
    }
}

/// Maps an original label. Surrounding whitespace is ignored; the match is
/// otherwise exact and case-sensitive.
pub fn map_label(scheme: Scheme, original: &str) -> Result<Mapped, LabelError> {
    let key = original.trim();
    scheme
        .table()
        .iter()
        .find(|(label, _)| *label == key)
        .map(|(_, m)| *m)
        .ok_or_else(|| LabelError::UnknownLabel { scheme, label: key.to_string() })
}

/// One row of an English corpus in its original label scheme.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRow {
    pub question: String,
    pub answer: String,
    #[serde(default)]
    pub context: Option<String>,
    pub label: String,
}

/// A row after mapping, ready for training or evaluation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledRow {
    pub question: String,
    pub answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub label: Interpretation,
    pub original_label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConversionTally {
    pub input: usize,
    pub emitted: BTreeMap<Interpretation, usize>,
    pub dropped: usize,
}

impl ConversionTally {
    pub fn emitted_total(&self) -> usize {
        self.emitted.values().sum()
    }
}

/// Maps every row, dropping discards. Aborts on the first unknown label,
/// reporting its 1-based row number.
pub fn convert_corpus<I>(rows: I, scheme: Scheme) -> Result<(Vec<LabeledRow>, ConversionTally), LabelError>
where
    I: IntoIterator<Item = SourceRow>,
{
    let mut out = Vec::new();
    let mut tally = ConversionTally::default();
    for (i, row) in rows.into_iter().enumerate() {
        tally.input += 1;
        let mapped = map_label(scheme, &row.label).map_err(|e| LabelError::Row { row: i + 1, source: Box::new(e) })?;
        match mapped {
            Mapped::Discard => tally.dropped += 1,
            Mapped::Label(label) => {
                *tally.emitted.entry(label).or_default() += 1;
                out.push(LabeledRow {
                    question: row.question,
                    answer: row.answer,
                    context: row.context,
                    label,
                    original_label: row.label.trim().to_string(),
                });
            }
        }
    }
    Ok((out, tally))
}
