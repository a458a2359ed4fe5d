//! Turns, question-answer pairs and the JSON-lines ingestion profiles.
//!
//! Three input profiles are supported. All of them read one JSON object per
//! line; unknown fields are ignored.
//!
//! | profile            | one line is | pairing                         |
//! |--------------------|-------------|---------------------------------|
//! | `flat-turns`       | a turn      | successive turns of a `conv`    |
//! | `threaded-replies` | a post      | each post with each direct reply|
//! | `faq-pairs`        | a Q/A pair  | the question with its answer    |
//!
//! Metadata counts (`link_count`, `hashtag_count`, `mention_count`,
//! `digit_present`) are taken from explicit fields when present, from the
//! `urls` / `hashtags` / `mentions` lists for threaded posts, and otherwise
//! derived from the text.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Number of turns kept on each side of a dialogue pair as context.
pub const CONTEXT_WINDOW: usize = 2;

/// Characters split off the end of a whitespace token into their own tokens.
pub const TERMINAL_PUNCTUATION: [char; 5] = ['?', '？', '.', '!', '。'];

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("unknown format profile `{0}` (expected flat-turns, threaded-replies or faq-pairs)")]
    UnknownProfile(String),
    #[error("unknown tokenizer scheme `{0}` (expected whitespace or han-char)")]
    UnknownTokenizer(String),
    #[error("invalid turn `{id}`: {reason}")]
    InvalidTurn { id: String, reason: String },
    #[error("pair {question_id}->{answer_id} mixes languages {question_lang} and {answer_lang}")]
    MixedPair {
        question_id: String,
        answer_id: String,
        question_lang: String,
        answer_lang: String,
    },
    #[error("write failed: {0}")]
    Write(#[from] io::Error),
}

/// A malformed input line. Ingestion reports it and moves on.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

/// Interpretation of an answer to a yes-no question.
///
/// The derived ordering is the ordinal scale used by weighted agreement:
/// `Yes < Middle < No`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Interpretation {
    Yes,
    Middle,
    No,
}

impl Interpretation {
    pub const ALL: [Interpretation; 3] = [Interpretation::Yes, Interpretation::Middle, Interpretation::No];

    pub fn ordinal(self) -> usize {
        match self {
            Interpretation::Yes => 0,
            Interpretation::Middle => 1,
            Interpretation::No => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Interpretation::Yes => "Yes",
            Interpretation::Middle => "Middle",
            Interpretation::No => "No",
        }
    }
}

impl fmt::Display for Interpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown label `{0}` (expected Yes, No or Middle)")]
pub struct UnknownLabel(pub String);

impl FromStr for Interpretation {
    type Err = UnknownLabel;

    /// Accepts `Yes`/`No`/`Middle` in any letter case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().as_str() {
            "yes" => Ok(Interpretation::Yes),
            "no" => Ok(Interpretation::No),
            "middle" => Ok(Interpretation::Middle),
            _ => Err(UnknownLabel(s.to_string())),
        }
    }
}

/// Source-level metadata used by the structural rule predicates.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceMeta {
    pub link_count: u32,
    pub hashtag_count: u32,
    pub mention_count: u32,
    pub digit_present: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_verified: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_retweet: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_reply: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub is_accepted: Option<bool>,
}

impl SourceMeta {
    /// Counts links, hashtags, mentions and digits found in `text`.
    pub fn from_text(text: &str) -> Self {
        let mut meta = SourceMeta::default();
        for word in text.split_whitespace() {
            let lower = word.to_lowercase();
            if lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.") {
                meta.link_count += 1;
            } else if word.starts_with('#') && word.chars().count() > 1 {
                meta.hashtag_count += 1;
            } else if word.starts_with('@') && word.chars().count() > 1 {
                meta.mention_count += 1;
            }
        }
        meta.digit_present = text.chars().any(char::is_numeric);
        meta
    }
}

/// One utterance or post.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Turn {
    pub id: String,
    pub text: String,
    pub language: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub speaker: Option<String>,
    /// Conversation or thread the turn belongs to.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub thread: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reply_to: Option<String>,
    pub meta: SourceMeta,
}

impl Turn {
    /// Builds a turn, NFC-normalizing and trimming the text.
    pub fn new(
        id: impl Into<String>,
        text: &str,
        language: impl Into<String>,
        meta: SourceMeta,
    ) -> Result<Self, CorpusError> {
        let id = id.into();
        let language = language.into();
        let text = normalize_text(text);
        if text.is_empty() {
            return Err(CorpusError::InvalidTurn { id, reason: "empty text".into() });
        }
        if !is_language_code(&language) {
            return Err(CorpusError::InvalidTurn {
                id,
                reason: format!("`{language}` is not an ISO-639-1 code"),
            });
        }
        Ok(Turn { id, text, language, speaker: None, thread: None, reply_to: None, meta })
    }

    /// Builds a turn with metadata derived from its own text.
    pub fn from_text(id: impl Into<String>, text: &str, language: impl Into<String>) -> Result<Self, CorpusError> {
        let text = normalize_text(text);
        let meta = SourceMeta::from_text(&text);
        Turn::new(id, &text, language, meta)
    }

    pub fn with_thread(mut self, thread: impl Into<String>) -> Self {
        self.thread = Some(thread.into());
        self
    }

    pub fn with_reply_to(mut self, parent: impl Into<String>) -> Self {
        self.reply_to = Some(parent.into());
        self
    }
}

/// NFC normalization followed by whitespace trimming.
pub fn normalize_text(text: &str) -> String {
    text.nfc().collect::<String>().trim().to_string()
}

fn is_language_code(code: &str) -> bool {
    code.len() == 2 && code.bytes().all(|b| b.is_ascii_lowercase())
}

/// A question candidate, its answer candidate and surrounding context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: Turn,
    pub answer: Turn,
    #[serde(default)]
    pub context_before: Vec<Turn>,
    #[serde(default)]
    pub context_after: Vec<Turn>,
    pub source: String,
}

impl QAPair {
    pub fn new(question: Turn, answer: Turn, source: impl Into<String>) -> Result<Self, CorpusError> {
        if question.language != answer.language {
            return Err(CorpusError::MixedPair {
                question_id: question.id,
                answer_id: answer.id,
                question_lang: question.language,
                answer_lang: answer.language,
            });
        }
        Ok(QAPair {
            question,
            answer,
            context_before: Vec::new(),
            context_after: Vec::new(),
            source: source.into(),
        })
    }

    /// `question-id>answer-id`, unique within a corpus.
    pub fn id(&self) -> String {
        format!("{}>{}", self.question.id, self.answer.id)
    }

    pub fn language(&self) -> &str {
        &self.question.language
    }
}

/// Tokenizer scheme named by a rule pack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tokenizer {
    #[serde(rename = "whitespace")]
    Whitespace,
    #[serde(rename = "han-char")]
    HanChar,
}

impl FromStr for Tokenizer {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" => Ok(Tokenizer::Whitespace),
            "han-char" => Ok(Tokenizer::HanChar),
            other => Err(CorpusError::UnknownTokenizer(other.to_string())),
        }
    }
}

impl fmt::Display for Tokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenizer::Whitespace => "whitespace",
            Tokenizer::HanChar => "han-char",
        })
    }
}

/// A token with its byte range in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpannedToken<'a> {
    pub text: &'a str,
    pub start: usize,
    pub end: usize,
}

pub fn tokenize(text: &str, scheme: Tokenizer) -> Vec<String> {
    tokenize_spans(text, scheme).into_iter().map(|t| t.text.to_string()).collect()
}

pub fn tokenize_spans(text: &str, scheme: Tokenizer) -> Vec<SpannedToken<'_>> {
    match scheme {
        Tokenizer::HanChar => text
            .char_indices()
            .filter(|(_, c)| !c.is_whitespace())
            .map(|(i, c)| SpannedToken { text: &text[i..i + c.len_utf8()], start: i, end: i + c.len_utf8() })
            .collect(),
        Tokenizer::Whitespace => {
            let mut out = Vec::new();
            for (start, word) in word_spans(text) {
                // Peel terminal punctuation off the end, one token per mark.
                let mut cut = word.len();
                let mut tail = Vec::new();
                while let Some(c) = word[..cut].chars().next_back() {
                    if !TERMINAL_PUNCTUATION.contains(&c) {
                        break;
                    }
                    cut -= c.len_utf8();
                    tail.push(SpannedToken {
                        text: &word[cut..cut + c.len_utf8()],
                        start: start + cut,
                        end: start + cut + c.len_utf8(),
                    });
                }
                if cut > 0 {
                    out.push(SpannedToken { text: &word[..cut], start, end: start + cut });
                }
                out.extend(tail.into_iter().rev());
            }
            out
        }
    }
}

/// Whitespace-delimited chunks with their starting byte offsets.
pub(crate) fn word_spans(text: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &text[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &text[s..]));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FormatProfile {
    FlatTurns,
    ThreadedReplies,
    FaqPairs,
}

impl FormatProfile {
    pub fn name(self) -> &'static str {
        match self {
            FormatProfile::FlatTurns => "flat-turns",
            FormatProfile::ThreadedReplies => "threaded-replies",
            FormatProfile::FaqPairs => "faq-pairs",
        }
    }

    /// Pairing strategy implied by the input layout.
    pub fn pairing(self) -> PairingProfile {
        match self {
            FormatProfile::FlatTurns => PairingProfile::Dialogue,
            FormatProfile::ThreadedReplies | FormatProfile::FaqPairs => PairingProfile::Threaded,
        }
    }
}

impl FromStr for FormatProfile {
    type Err = CorpusError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "flat-turns" => Ok(FormatProfile::FlatTurns),
            "threaded-replies" => Ok(FormatProfile::ThreadedReplies),
            "faq-pairs" => Ok(FormatProfile::FaqPairs),
            other => Err(CorpusError::UnknownProfile(other.to_string())),
        }
    }
}

impl fmt::Display for FormatProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairingProfile {
    /// Each turn paired with its successor inside a conversation.
    Dialogue,
    /// Each post paired with each of its direct replies.
    Threaded,
}

/// Raw record: the union of the fields read by all profiles.
#[derive(Debug, Default, Deserialize)]
struct RawRecord {
    id: Option<Value>,
    text: Option<String>,
    lang: Option<String>,
    speaker: Option<String>,
    #[serde(alias = "conversation", alias = "thread")]
    conv: Option<Value>,
    reply_to: Option<Value>,
    question: Option<String>,
    answer: Option<String>,
    mentions: Option<Vec<Value>>,
    hashtags: Option<Vec<Value>>,
    urls: Option<Vec<Value>>,
    link_count: Option<u32>,
    hashtag_count: Option<u32>,
    mention_count: Option<u32>,
    digit_present: Option<bool>,
    #[serde(alias = "author_verified")]
    verified: Option<bool>,
    is_retweet: Option<bool>,
    is_reply: Option<bool>,
    is_accepted: Option<bool>,
}

fn value_to_id(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

impl RawRecord {
    fn meta_for(&self, text: &str) -> SourceMeta {
        let derived = SourceMeta::from_text(text);
        let list_len = |l: &Option<Vec<Value>>| l.as_ref().map(|v| v.len() as u32);
        SourceMeta {
            link_count: self.link_count.or(list_len(&self.urls)).unwrap_or(derived.link_count),
            hashtag_count: self.hashtag_count.or(list_len(&self.hashtags)).unwrap_or(derived.hashtag_count),
            mention_count: self.mention_count.or(list_len(&self.mentions)).unwrap_or(derived.mention_count),
            digit_present: self.digit_present.unwrap_or(derived.digit_present),
            author_verified: self.verified,
            is_retweet: self.is_retweet,
            is_reply: self.is_reply,
            is_accepted: self.is_accepted,
        }
    }

    fn into_turns(self, profile: FormatProfile) -> Result<Vec<Turn>, String> {
        let id = self
            .id
            .as_ref()
            .and_then(value_to_id)
            .ok_or_else(|| "missing or non-scalar `id`".to_string())?;
        let lang = self.lang.clone().ok_or("missing `lang`")?;
        let make = |id: String, text: &str, meta: SourceMeta| {
            Turn::new(id, text, lang.clone(), meta).map_err(|e| e.to_string())
        };
        match profile {
            FormatProfile::FlatTurns | FormatProfile::ThreadedReplies => {
                let text = normalize_text(self.text.as_deref().ok_or("missing `text`")?);
                let mut meta = self.meta_for(&text);
                let reply_to = self.reply_to.as_ref().and_then(value_to_id);
                if profile == FormatProfile::ThreadedReplies && meta.is_reply.is_none() {
                    meta.is_reply = Some(reply_to.is_some());
                }
                let mut turn = make(id, &text, meta)?;
                turn.speaker = self.speaker.clone();
                turn.thread = self.conv.as_ref().and_then(value_to_id);
                turn.reply_to = reply_to;
                Ok(vec![turn])
            }
            FormatProfile::FaqPairs => {
                let q = normalize_text(self.question.as_deref().ok_or("missing `question`")?);
                let a = normalize_text(self.answer.as_deref().ok_or("missing `answer`")?);
                let mut q_meta = SourceMeta::from_text(&q);
                q_meta.is_reply = Some(false);
                let mut a_meta = SourceMeta::from_text(&a);
                a_meta.is_reply = Some(true);
                a_meta.is_accepted = self.is_accepted;
                let qid = format!("{id}/q");
                let question = make(qid.clone(), &q, q_meta)?.with_thread(id.clone());
                let answer = make(format!("{id}/a"), &a, a_meta)?.with_thread(id).with_reply_to(qid);
                Ok(vec![question, answer])
            }
        }
    }
}

/// Streaming reader over a JSON-lines corpus.
///
/// Yields turns in file order; malformed lines come through as [`LineError`]
/// items and do not stop the stream.
pub struct TurnReader<R> {
    lines: io::Lines<R>,
    profile: FormatProfile,
    languages: Option<Vec<String>>,
    line_no: usize,
    pending: std::vec::IntoIter<Turn>,
}

pub fn ingest_jsonl(path: &Path, profile: FormatProfile) -> Result<TurnReader<BufReader<File>>, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    Ok(TurnReader::new(BufReader::new(file), profile))
}

impl<R: BufRead> TurnReader<R> {
    pub fn new(reader: R, profile: FormatProfile) -> Self {
        TurnReader { lines: reader.lines(), profile, languages: None, line_no: 0, pending: Vec::new().into_iter() }
    }

    /// Restricts accepted turns to the given language codes.
    pub fn with_languages<I, S>(mut self, codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.languages = Some(codes.into_iter().map(Into::into).collect());
        self
    }

    fn parse_line(&self, line: &str) -> Result<Vec<Turn>, String> {
        let raw: RawRecord = serde_json::from_str(line).map_err(|e| format!("malformed JSON: {e}"))?;
        let turns = raw.into_turns(self.profile)?;
        if let Some(allowed) = &self.languages {
            if let Some(t) = turns.iter().find(|t| !allowed.contains(&t.language)) {
                return Err(format!("language `{}` is not configured", t.language));
            }
        }
        Ok(turns)
    }
}

impl<R: BufRead> Iterator for TurnReader<R> {
    type Item = Result<Turn, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if let Some(turn) = self.pending.next() {
                return Some(Ok(turn));
            }
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => return Some(Err(LineError { line: self.line_no, message: e.to_string() })),
            };
            if line.trim().is_empty() {
                continue;
            }
            match self.parse_line(&line) {
                Ok(turns) => self.pending = turns.into_iter(),
                Err(message) => return Some(Err(LineError { line: self.line_no, message })),
            }
        }
    }
}

/// Builds question/answer candidate pairs.
///
/// Dialogue pairing groups consecutive turns sharing a `thread` value; a turn
/// without a thread joins the run of turns without one. Threaded pairing
/// pairs every post with each turn whose `reply_to` names it, in file order.
pub fn pair_adjacent<I>(turns: I, profile: PairingProfile, source: &str) -> Vec<QAPair>
where
    I: IntoIterator<Item = Turn>,
{
    match profile {
        PairingProfile::Dialogue => {
            let mut out = Vec::new();
            let mut run: Vec<Turn> = Vec::new();
            for turn in turns {
                if run.last().is_some_and(|last| last.thread != turn.thread) {
                    pair_dialogue(&run, source, &mut out);
                    run.clear();
                }
                run.push(turn);
            }
            pair_dialogue(&run, source, &mut out);
            out
        }
        PairingProfile::Threaded => {
            let turns: Vec<Turn> = turns.into_iter().collect();
            let mut replies: HashMap<&str, Vec<usize>> = HashMap::new();
            for (i, t) in turns.iter().enumerate() {
                if let Some(parent) = &t.reply_to {
                    replies.entry(parent.as_str()).or_default().push(i);
                }
            }
            let mut out = Vec::new();
            for post in &turns {
                let Some(children) = replies.get(post.id.as_str()) else { continue };
                for &ci in children {
                    let reply = &turns[ci];
                    if reply.language != post.language {
                        continue;
                    }
                    out.push(QAPair {
                        question: post.clone(),
                        answer: reply.clone(),
                        context_before: Vec::new(),
                        context_after: Vec::new(),
                        source: source.to_string(),
                    });
                }
            }
            out
        }
    }
}

fn pair_dialogue(run: &[Turn], source: &str, out: &mut Vec<QAPair>) {
    for i in 0..run.len().saturating_sub(1) {
        let (q, a) = (&run[i], &run[i + 1]);
        if q.language != a.language {
            continue;
        }
        out.push(QAPair {
            question: q.clone(),
            answer: a.clone(),
            context_before: run[i.saturating_sub(CONTEXT_WINDOW)..i].to_vec(),
            context_after: run[i + 2..(i + 2 + CONTEXT_WINDOW).min(run.len())].to_vec(),
            source: source.to_string(),
        });
    }
}

/// Flat record written by [`write_turns_jsonl`]; readable by the
/// `flat-turns` and `threaded-replies` profiles.
#[derive(Serialize)]
struct FlatRecord<'a> {
    id: &'a str,
    text: &'a str,
    lang: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    speaker: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    conv: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reply_to: Option<&'a str>,
    link_count: u32,
    hashtag_count: u32,
    mention_count: u32,
    digit_present: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    is_retweet: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    is_reply: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    is_accepted: Option<bool>,
}

/// Writes turns one per line with all metadata explicit.
pub fn write_turns_jsonl<'a, W, I>(turns: I, mut out: W) -> Result<(), CorpusError>
where
    W: Write,
    I: IntoIterator<Item = &'a Turn>,
{
    for t in turns {
        let rec = FlatRecord {
            id: &t.id,
            text: &t.text,
            lang: &t.language,
            speaker: t.speaker.as_deref(),
            conv: t.thread.as_deref(),
            reply_to: t.reply_to.as_deref(),
            link_count: t.meta.link_count,
            hashtag_count: t.meta.hashtag_count,
            mention_count: t.meta.mention_count,
            digit_present: t.meta.digit_present,
            verified: t.meta.author_verified,
            is_retweet: t.meta.is_retweet,
            is_reply: t.meta.is_reply,
            is_accepted: t.meta.is_accepted,
        };
        serde_json::to_writer(&mut out, &rec).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// Writes normalized pairs, one JSON object per line.
pub fn write_pairs_jsonl<'a, W, I>(pairs: I, mut out: W) -> Result<(), CorpusError>
where
    W: Write,
    I: IntoIterator<Item = &'a QAPair>,
{
    for p in pairs {
        serde_json::to_writer(&mut out, p).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(profile: FormatProfile, input: &str) -> Vec<Result<Turn, LineError>> {
        TurnReader::new(input.as_bytes(), profile).collect()
    }

    #[test]
    fn flat_turn_copies_fields() {
        let out = read(FormatProfile::FlatTurns, r#"{"id":"1","text":"hola?","lang":"es"}"#);
        let turn = out[0].as_ref().unwrap();
        assert_eq!(turn.id, "1");
        assert_eq!(turn.text, "hola?");
        assert_eq!(turn.language, "es");
    }

    #[test]
    fn missing_text_is_reported_and_stream_continues() {
        let input = "{\"id\":\"1\",\"lang\":\"es\"}\n{\"id\":\"2\",\"text\":\"si\",\"lang\":\"es\"}\nnot json\n";
        let out = read(FormatProfile::FlatTurns, input);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].as_ref().unwrap_err().line, 1);
        assert_eq!(out[1].as_ref().unwrap().id, "2");
        assert_eq!(out[2].as_ref().unwrap_err().line, 3);
    }

    #[test]
    fn threaded_reply_counts_mentions() {
        let out = read(
            FormatProfile::ThreadedReplies,
            r#"{"id":"r1","text":"sure thing","lang":"hi","reply_to":"q7","mentions":["@a","@b"]}"#,
        );
        let turn = out[0].as_ref().unwrap();
        assert_eq!(turn.meta.mention_count, 2);
        assert_eq!(turn.meta.is_reply, Some(true));
        assert_eq!(turn.reply_to.as_deref(), Some("q7"));
    }

    #[test]
    fn faq_line_yields_question_and_answer() {
        let out = read(
            FormatProfile::FaqPairs,
            r#"{"id":9,"lang":"tr","question":"geliyor musun?","answer":"evet","is_accepted":false}"#,
        );
        let turns: Vec<Turn> = out.into_iter().map(Result::unwrap).collect();
        assert_eq!(turns.len(), 2);
        assert_eq!(turns[0].id, "9/q");
        assert_eq!(turns[1].reply_to.as_deref(), Some("9/q"));
        assert_eq!(turns[1].meta.is_accepted, Some(false));
        let pairs = pair_adjacent(turns, PairingProfile::Threaded, "mfaq");
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn text_is_nfc_normalized() {
        // "e" + combining acute
        let out = read(FormatProfile::FlatTurns, "{\"id\":\"1\",\"text\":\" cafe\u{301} \",\"lang\":\"es\"}");
        assert_eq!(out[0].as_ref().unwrap().text, "caf\u{e9}");
    }

    #[test]
    fn language_restriction() {
        let out: Vec<_> = TurnReader::new(r#"{"id":"1","text":"x","lang":"fr"}"#.as_bytes(), FormatProfile::FlatTurns)
            .with_languages(["es", "tr"])
            .collect();
        assert!(out[0].is_err());
    }

    #[test]
    fn meta_derived_from_text() {
        let m = SourceMeta::from_text("see https://x.co and #tag @bob @ 9");
        assert_eq!((m.link_count, m.hashtag_count, m.mention_count, m.digit_present), (1, 1, 1, true));
    }

    fn t(id: &str) -> Turn {
        Turn::from_text(id, id, "es").unwrap()
    }

    #[test]
    fn dialogue_pairs_successive_turns() {
        let pairs = pair_adjacent(vec![t("t1"), t("t2"), t("t3")], PairingProfile::Dialogue, "d");
        let ids: Vec<_> = pairs.iter().map(QAPair::id).collect();
        assert_eq!(ids, ["t1>t2", "t2>t3"]);
        assert_eq!(pairs[0].context_after.len(), 1);
        assert!(pair_adjacent(vec![t("t1")], PairingProfile::Dialogue, "d").is_empty());
    }

    #[test]
    fn dialogue_respects_conversation_boundaries() {
        let turns = vec![t("a").with_thread("c1"), t("b").with_thread("c1"), t("c").with_thread("c2")];
        assert_eq!(pair_adjacent(turns, PairingProfile::Dialogue, "d").len(), 1);
    }

    #[test]
    fn thread_fans_out_to_replies() {
        let turns = vec![t("q"), t("r1").with_reply_to("q"), t("x"), t("r2").with_reply_to("q")];
        let ids: Vec<_> = pair_adjacent(turns, PairingProfile::Threaded, "th").iter().map(QAPair::id).collect();
        assert_eq!(ids, ["q>r1", "q>r2"]);
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("do we go?", Tokenizer::Whitespace), ["do", "we", "go", "?"]);
        assert_eq!(tokenize("你好吗？", Tokenizer::HanChar), ["你", "好", "吗", "？"]);
        assert_eq!(tokenize("  a  b ", Tokenizer::Whitespace), ["a", "b"]);
        assert_eq!(tokenize("", Tokenizer::Whitespace), Vec::<String>::new());
        assert_eq!(tokenize("really?!", Tokenizer::Whitespace), ["really", "?", "!"]);
        assert_eq!(tokenize("...", Tokenizer::Whitespace), [".", ".", "."]);
    }

    #[test]
    fn spans_point_into_source() {
        let text = "¿vienes mañana?";
        for tok in tokenize_spans(text, Tokenizer::Whitespace) {
            assert_eq!(&text[tok.start..tok.end], tok.text);
        }
    }

    #[test]
    fn mixed_pair_rejected() {
        let q = Turn::from_text("q", "¿vienes?", "es").unwrap();
        let a = Turn::from_text("a", "evet", "tr").unwrap();
        assert!(matches!(QAPair::new(q, a, "s"), Err(CorpusError::MixedPair { .. })));
    }
}
