//! Declarative rule packs and their evaluation.
//!
//! A pack is a TOML document. Question rules and answer constraints are
//! conjunctive lists of predicates drawn from a closed vocabulary (the `kind`
//! field); keywords carry a polarity by the list they appear in.
//!
//! ```toml
//! language = "tr"
//! tokenizer = "whitespace"
//! yes_keywords = [{ surface = "evet", mode = "token", gloss = "yes" }]
//! no_keywords = [{ surface = "hayır", mode = "token", gloss = "no" }]
//!
//! [[question_rules]]
//! kind = "contains_any_token"
//! terms = ["mı", "mi", { text = "musun", gloss = "are you" }]
//!
//! [[question_rules]]
//! kind = "token_count_between"
//! min = 0
//! max = 49
//!
//! [[answer_constraints]]
//! kind = "accepted_answer"
//! ```

mod eval;

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

use crate::corpus::{Interpretation, Tokenizer};

pub use eval::{
    classify_answer, classify_answer_with, eval_question_rules, verb_echo, AnswerClass, MatchTrace, RuleRef,
    Span, TraceDecision, TraceEntry, TraceMode, AMBIGUOUS_POLARITY,
};

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("invalid rule pack at `{field}`: {message}")]
    Invalid { field: String, message: String },
    #[error("predicate `{predicate}` needs metadata that turn `{turn_id}` does not carry (source: {source_name})")]
    MissingMetadata {
        predicate: &'static str,
        turn_id: String,
        source_name: String,
    },
    #[error("turn `{turn_id}` is in `{turn_lang}` but the pack is for `{pack_lang}`")]
    LanguageMismatch {
        turn_id: String,
        turn_lang: String,
        pack_lang: String,
    },
    #[error("verb-echo lexicon is empty")]
    EmptyLexicon,
    #[error("no built-in pack for `{code}` (supported: {})", supported.join(", "))]
    UnsupportedLanguage { code: String, supported: Vec<String> },
    #[error("cannot read rule pack {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// A string payload with an optional English gloss.
///
/// Written either as a bare string or as `{ text = "...", gloss = "..." }`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "TermRepr", into = "TermRepr")]
pub struct Term {
    pub text: String,
    pub gloss: Option<String>,
}

impl Term {
    pub fn new(text: impl Into<String>) -> Self {
        Term { text: text.into(), gloss: None }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.gloss {
            Some(g) => write!(f, "{} ({})", self.text, g),
            None => f.write_str(&self.text),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum TermRepr {
    Plain(String),
    Glossed { text: String, gloss: Option<String> },
}

impl From<TermRepr> for Term {
    fn from(r: TermRepr) -> Self {
        match r {
            TermRepr::Plain(text) => Term { text, gloss: None },
            TermRepr::Glossed { text, gloss } => Term { text, gloss },
        }
    }
}

impl From<Term> for TermRepr {
    fn from(t: Term) -> Self {
        match t.gloss {
            None => TermRepr::Plain(t.text),
            Some(g) => TermRepr::Glossed { text: t.text, gloss: Some(g) },
        }
    }
}

/// Closed predicate vocabulary.
///
/// Token and n-gram payloads are matched as contiguous token sequences after
/// case folding, with surrounding punctuation trimmed from each token.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Predicate {
    /// Holds when a token equals one of `terms`, or when a token of at least
    /// `suffix_min_chars` characters ends with one of `suffixes`.
    ContainsAnyToken {
        terms: Vec<Term>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        suffixes: Vec<String>,
        #[serde(default, skip_serializing_if = "is_zero")]
        suffix_min_chars: usize,
    },
    ContainsAnyNgram { terms: Vec<Term> },
    ContainsAnySubstring { terms: Vec<Term> },
    NotContainsAnyToken { terms: Vec<Term> },
    NotContainsAnySubstring { terms: Vec<Term> },
    /// Trailing whitespace is ignored; trailing punctuation is ignored unless
    /// the term itself ends with it.
    EndsWithAny { terms: Vec<Term> },
    NotEndsWithAny { terms: Vec<Term> },
    ContainsChar { char: char },
    NotContainsChar { char: char },
    /// Inclusive bounds on the tokenizer's token count.
    TokenCountBetween { min: usize, max: usize },
    MaxMentions { max: u32 },
    NoLinks,
    NoHashtags,
    NoDigits,
    AuthorVerified,
    NotRetweet,
    NotReply,
    AcceptedAnswer,
}

fn is_zero(v: &usize) -> bool {
    *v == 0
}

pub const PREDICATE_KINDS: [&str; 18] = [
    "contains_any_token",
    "contains_any_ngram",
    "contains_any_substring",
    "not_contains_any_token",
    "not_contains_any_substring",
    "ends_with_any",
    "not_ends_with_any",
    "contains_char",
    "not_contains_char",
    "token_count_between",
    "max_mentions",
    "no_links",
    "no_hashtags",
    "no_digits",
    "author_verified",
    "not_retweet",
    "not_reply",
    "accepted_answer",
];

impl Predicate {
    pub fn kind(&self) -> &'static str {
        match self {
            Predicate::ContainsAnyToken { .. } => "contains_any_token",
            Predicate::ContainsAnyNgram { .. } => "contains_any_ngram",
            Predicate::ContainsAnySubstring { .. } => "contains_any_substring",
            Predicate::NotContainsAnyToken { .. } => "not_contains_any_token",
            Predicate::NotContainsAnySubstring { .. } => "not_contains_any_substring",
            Predicate::EndsWithAny { .. } => "ends_with_any",
            Predicate::NotEndsWithAny { .. } => "not_ends_with_any",
            Predicate::ContainsChar { .. } => "contains_char",
            Predicate::NotContainsChar { .. } => "not_contains_char",
            Predicate::TokenCountBetween { .. } => "token_count_between",
            Predicate::MaxMentions { .. } => "max_mentions",
            Predicate::NoLinks => "no_links",
            Predicate::NoHashtags => "no_hashtags",
            Predicate::NoDigits => "no_digits",
            Predicate::AuthorVerified => "author_verified",
            Predicate::NotRetweet => "not_retweet",
            Predicate::NotReply => "not_reply",
            Predicate::AcceptedAnswer => "accepted_answer",
        }
    }

    fn terms(&self) -> Option<&[Term]> {
        match self {
            Predicate::ContainsAnyToken { terms, .. }
            | Predicate::ContainsAnyNgram { terms }
            | Predicate::ContainsAnySubstring { terms }
            | Predicate::NotContainsAnyToken { terms }
            | Predicate::NotContainsAnySubstring { terms }
            | Predicate::EndsWithAny { terms }
            | Predicate::NotEndsWithAny { terms } => Some(terms),
            _ => None,
        }
    }

    fn terms_mut(&mut self) -> Option<&mut Vec<Term>> {
        match self {
            Predicate::ContainsAnyToken { terms, .. }
            | Predicate::ContainsAnyNgram { terms }
            | Predicate::ContainsAnySubstring { terms }
            | Predicate::NotContainsAnyToken { terms }
            | Predicate::NotContainsAnySubstring { terms }
            | Predicate::EndsWithAny { terms }
            | Predicate::NotEndsWithAny { terms } => Some(terms),
            _ => None,
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())?;
        match self {
            Predicate::ContainsAnyToken { terms, suffixes, suffix_min_chars } => {
                write_terms(f, terms)?;
                if !suffixes.is_empty() {
                    write!(f, " | suffixes [{}] on tokens of >= {} chars", suffixes.join(", "), suffix_min_chars)?;
                }
                Ok(())
            }
            Predicate::ContainsChar { char } | Predicate::NotContainsChar { char } => write!(f, " '{char}'"),
            Predicate::TokenCountBetween { min, max } => write!(f, " {min}..={max}"),
            Predicate::MaxMentions { max } => write!(f, " {max}"),
            other => match other.terms() {
                Some(terms) => write_terms(f, terms),
                None => Ok(()),
            },
        }
    }
}

fn write_terms(f: &mut fmt::Formatter<'_>, terms: &[Term]) -> fmt::Result {
    f.write_str(":")?;
    for (i, t) in terms.iter().enumerate() {
        f.write_str(if i == 0 { " " } else { ", " })?;
        write!(f, "{t}")?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// A single token.
    Token,
    /// A contiguous token sequence.
    Ngram,
    /// Whitespace packs: a word (or word sequence) starting with the surface.
    /// Han-char packs: the turn starts with the surface.
    Prefix,
    /// Anywhere in the folded text.
    Substring,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Keyword {
    pub surface: String,
    pub mode: MatchMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gloss: Option<String>,
    /// Substring matches must end where a token ends.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub at_token_end: bool,
}

impl Keyword {
    pub fn new(surface: impl Into<String>, mode: MatchMode) -> Self {
        Keyword { surface: surface.into(), mode, gloss: None, at_token_end: false }
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.surface)?;
        if let Some(g) = &self.gloss {
            write!(f, " ({g})")?;
        }
        let mode = match self.mode {
            MatchMode::Token => "token",
            MatchMode::Ngram => "ngram",
            MatchMode::Prefix => "prefix",
            MatchMode::Substring if self.at_token_end => "token-end substring",
            MatchMode::Substring => "substring",
        };
        write!(f, " [{mode}]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "name", deny_unknown_fields)]
pub enum SpecialRule {
    /// Answer starts with the question's first lexicon verb (Yes) or with a
    /// negator followed by it (No).
    #[serde(rename = "verb-echo")]
    VerbEcho { lexicon: Vec<Term>, negators: Vec<String> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RulePack {
    pub language: String,
    pub tokenizer: Tokenizer,
    pub question_rules: Vec<Predicate>,
    pub yes_keywords: Vec<Keyword>,
    pub no_keywords: Vec<Keyword>,
    #[serde(default)]
    pub answer_constraints: Vec<Predicate>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub special_rules: Vec<SpecialRule>,
}

pub(crate) fn nfc(s: &str) -> String {
    s.nfc().collect()
}

/// Case folding applied to both text and rule payloads before matching.
pub(crate) fn fold(s: &str) -> String {
    s.to_lowercase().nfc().collect()
}

fn invalid(field: impl Into<String>, message: impl Into<String>) -> RuleError {
    RuleError::Invalid { field: field.into(), message: message.into() }
}

impl RulePack {
    /// Parses and validates a pack document.
    pub fn from_toml_str(src: &str) -> Result<Self, RuleError> {
        let doc: toml::Value = src.parse().map_err(|e: toml::de::Error| invalid("<document>", e.message()))?;
        check_kinds(&doc)?;
        let pack: RulePack = doc.try_into().map_err(|e: toml::de::Error| invalid("<document>", e.message()))?;
        pack.validated()
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("rule packs always serialize")
    }

    /// NFC-normalizes every payload and checks the pack invariants.
    pub fn validated(mut self) -> Result<Self, RuleError> {
        if !(self.language.len() == 2 && self.language.bytes().all(|b| b.is_ascii_lowercase())) {
            return Err(invalid("language", format!("`{}` is not an ISO-639-1 code", self.language)));
        }
        for (list, name) in [(&mut self.question_rules, "question_rules"), (&mut self.answer_constraints, "answer_constraints")] {
            for (i, p) in list.iter_mut().enumerate() {
                validate_predicate(p, self.tokenizer, &format!("{name}[{i}]"))?;
            }
        }
        let mut seen: HashMap<String, &'static str> = HashMap::new();
        for (list, name) in [(&mut self.yes_keywords, "yes_keywords"), (&mut self.no_keywords, "no_keywords")] {
            for (i, k) in list.iter_mut().enumerate() {
                let field = format!("{name}[{i}]");
                k.surface = nfc(k.surface.trim());
                if k.surface.is_empty() {
                    return Err(invalid(field, "empty keyword surface"));
                }
                if k.mode == MatchMode::Ngram {
                    let ok = match self.tokenizer {
                        Tokenizer::Whitespace => k.surface.split_whitespace().count() >= 2,
                        Tokenizer::HanChar => k.surface.chars().filter(|c| !c.is_whitespace()).count() >= 2,
                    };
                    if !ok {
                        return Err(invalid(field, format!("n-gram keyword `{}` has a single unit", k.surface)));
                    }
                }
                if let Some(prev) = seen.insert(fold(&k.surface), name) {
                    let message = if prev == name {
                        format!("keyword `{}` listed twice", k.surface)
                    } else {
                        format!("keyword `{}` appears in both yes_keywords and no_keywords", k.surface)
                    };
                    return Err(invalid(field, message));
                }
            }
        }
        for (i, rule) in self.special_rules.iter_mut().enumerate() {
            match rule {
                SpecialRule::VerbEcho { lexicon, negators } => {
                    if lexicon.is_empty() {
                        return Err(RuleError::EmptyLexicon);
                    }
                    for t in lexicon.iter_mut() {
                        t.text = nfc(t.text.trim());
                        if t.text.is_empty() {
                            return Err(invalid(format!("special_rules[{i}].lexicon"), "empty verb"));
                        }
                    }
                    for n in negators.iter_mut() {
                        *n = nfc(n.trim());
                    }
                }
            }
        }
        Ok(self)
    }

    pub fn keywords(&self) -> impl Iterator<Item = (&Keyword, Interpretation)> {
        self.yes_keywords
            .iter()
            .map(|k| (k, Interpretation::Yes))
            .chain(self.no_keywords.iter().map(|k| (k, Interpretation::No)))
    }

    /// Human-readable listing of every predicate and keyword.
    pub fn listing(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("language: {}\ntokenizer: {}\n", self.language, self.tokenizer));
        out.push_str("question rules (all must hold):\n");
        for (i, p) in self.question_rules.iter().enumerate() {
            out.push_str(&format!("  {}. {}\n", i + 1, p));
        }
        out.push_str("answer constraints (all must hold):\n");
        for (i, p) in self.answer_constraints.iter().enumerate() {
            out.push_str(&format!("  {}. {}\n", i + 1, p));
        }
        out.push_str(&format!("yes keywords ({}):\n", self.yes_keywords.len()));
        for k in &self.yes_keywords {
            out.push_str(&format!("  {k}\n"));
        }
        out.push_str(&format!("no keywords ({}):\n", self.no_keywords.len()));
        for k in &self.no_keywords {
            out.push_str(&format!("  {k}\n"));
        }
        for rule in &self.special_rules {
            match rule {
                SpecialRule::VerbEcho { lexicon, negators } => {
                    let verbs: Vec<String> = lexicon.iter().map(Term::to_string).collect();
                    out.push_str(&format!(
                        "special rule verb-echo:\n  verbs: {}\n  negators: {}\n",
                        verbs.join(", "),
                        negators.join(", ")
                    ));
                }
            }
        }
        out
    }
}

fn check_kinds(doc: &toml::Value) -> Result<(), RuleError> {
    for list in ["question_rules", "answer_constraints"] {
        let Some(items) = doc.get(list).and_then(toml::Value::as_array) else { continue };
        for (i, item) in items.iter().enumerate() {
            match item.get("kind").and_then(toml::Value::as_str) {
                Some(kind) if PREDICATE_KINDS.contains(&kind) => {}
                Some(kind) => return Err(invalid(format!("{list}[{i}].kind"), format!("unknown predicate kind `{kind}`"))),
                None => return Err(invalid(format!("{list}[{i}].kind"), "missing predicate kind")),
            }
        }
    }
    Ok(())
}

fn validate_predicate(p: &mut Predicate, tokenizer: Tokenizer, field: &str) -> Result<(), RuleError> {
    match p {
        Predicate::TokenCountBetween { min, max } => {
            if min > max {
                return Err(invalid(field, format!("token_count_between has min {min} > max {max}")));
            }
        }
        Predicate::ContainsAnyToken { suffixes, .. } => {
            for s in suffixes.iter_mut() {
                *s = nfc(s.trim());
                if s.is_empty() {
                    return Err(invalid(field, "empty suffix"));
                }
            }
        }
        _ => {}
    }
    let is_ngram = matches!(p, Predicate::ContainsAnyNgram { .. });
    if let Some(terms) = p.terms_mut() {
        if terms.is_empty() {
            return Err(invalid(field, "empty term list"));
        }
        for t in terms.iter_mut() {
            t.text = nfc(t.text.trim());
            if t.text.is_empty() {
                return Err(invalid(field, "empty term"));
            }
            if is_ngram && eval::phrase_units(&t.text, tokenizer).len() < 2 {
                return Err(invalid(field, format!("n-gram `{}` has a single unit", t.text)));
            }
        }
    }
    Ok(())
}

pub fn load_rule_pack(path: &Path) -> Result<RulePack, RuleError> {
    let src = std::fs::read_to_string(path).map_err(|source| RuleError::Io { path: path.to_path_buf(), source })?;
    RulePack::from_toml_str(&src)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
language = "tr"
tokenizer = "whitespace"
yes_keywords = [{ surface = "evet", mode = "token" }]
no_keywords = [{ surface = "hayır", mode = "token" }]

[[question_rules]]
kind = "contains_any_token"
terms = ["mi", { text = "musun", gloss = "are you" }]
"#;

    #[test]
    fn parses_minimal_pack() {
        let pack = RulePack::from_toml_str(MINIMAL).unwrap();
        assert_eq!(pack.question_rules.len(), 1);
        assert_eq!(pack.yes_keywords[0].surface, "evet");
    }

    #[test]
    fn rejects_overlapping_polarity() {
        let src = MINIMAL.replace("\"hayır\"", "\"evet\"");
        let err = RulePack::from_toml_str(&src).unwrap_err();
        assert!(err.to_string().contains("both yes_keywords and no_keywords"), "{err}");
    }

    #[test]
    fn rejects_inverted_token_bounds() {
        let src = format!("{MINIMAL}\n[[question_rules]]\nkind = \"token_count_between\"\nmin = 5\nmax = 3\n");
        let err = RulePack::from_toml_str(&src).unwrap_err();
        assert!(matches!(&err, RuleError::Invalid { field, .. } if field == "question_rules[1]"), "{err}");
    }

    #[test]
    fn rejects_unknown_kind_with_field_path() {
        let src = format!("{MINIMAL}\n[[answer_constraints]]\nkind = \"sounds_polite\"\n");
        let err = RulePack::from_toml_str(&src).unwrap_err();
        assert!(matches!(&err, RuleError::Invalid { field, .. } if field == "answer_constraints[0].kind"), "{err}");
    }

    #[test]
    fn rejects_single_word_ngram() {
        let src = MINIMAL.replace("mode = \"token\" }]\nno", "mode = \"ngram\" }]\nno");
        assert!(RulePack::from_toml_str(&src).is_err());
    }

    #[test]
    fn rejects_empty_verb_lexicon() {
        let src = format!("{MINIMAL}\n[[special_rules]]\nname = \"verb-echo\"\nlexicon = []\nnegators = [\"不\"]\n");
        assert!(matches!(RulePack::from_toml_str(&src), Err(RuleError::EmptyLexicon)));
    }

    #[test]
    fn normalizes_payloads_to_nfc() {
        let src = MINIMAL.replace("\"evet\"", "\"sı\u{301}\"");
        let pack = RulePack::from_toml_str(&src).unwrap();
        assert_eq!(pack.yes_keywords[0].surface, nfc("sı\u{301}"));
    }

    #[test]
    fn toml_round_trip() {
        let pack = RulePack::from_toml_str(MINIMAL).unwrap();
        let again = RulePack::from_toml_str(&pack.to_toml_string()).unwrap();
        assert_eq!(pack, again);
    }
}
