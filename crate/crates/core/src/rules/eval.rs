use serde::Serialize;

use super::{fold, Keyword, MatchMode, Predicate, RuleError, RulePack, SpecialRule, Term};
use crate::corpus::{tokenize, tokenize_spans, word_spans, Interpretation, Tokenizer, Turn};

/// Discard reason when both polarities match.
pub const AMBIGUOUS_POLARITY: &str = "ambiguous-polarity";

/// Characters trimmed from both ends of a token before comparison.
const TRIM: &[char] = &[
    '.', ',', ';', ':', '!', '?', '¿', '¡', '"', '(', ')', '[', ']', '{', '}', '«', '»', '“', '”', '‘', '’', '„',
    '…', '。', '，', '、', '！', '？', '；', '：', '（', '）', '「', '」', '『', '』', '《', '》', '·', '।', '~', '*',
];

fn trim_token(s: &str) -> &str {
    s.trim_matches(TRIM)
}

/// Byte range into the case-folded turn text plus the matched string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RuleRef {
    Predicate { index: usize, kind: &'static str },
    Keyword { surface: String, polarity: Interpretation },
    VerbEcho { verb: String, polarity: Interpretation },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceEntry {
    pub rule: RuleRef,
    pub held: bool,
    /// Matched span. For negative predicates, the offending match when the
    /// predicate fails.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<Span>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceDecision {
    Question(bool),
    Polarity(Option<Interpretation>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MatchTrace {
    pub decision: TraceDecision,
    pub entries: Vec<TraceEntry>,
}

impl MatchTrace {
    /// Surfaces of the keywords (and echoed verbs) that decided polarity.
    pub fn fired_keywords(&self) -> Vec<String> {
        self.entries
            .iter()
            .filter(|e| e.held)
            .filter_map(|e| match &e.rule {
                RuleRef::Keyword { surface, .. } => Some(surface.clone()),
                RuleRef::VerbEcho { verb, .. } => Some(format!("verb-echo:{verb}")),
                RuleRef::Predicate { .. } => None,
            })
            .collect()
    }

    /// Index and kind of the first predicate that failed.
    pub fn first_failure(&self) -> Option<(usize, &'static str)> {
        self.entries.iter().find(|e| !e.held).and_then(|e| match e.rule {
            RuleRef::Predicate { index, kind } => Some((index, kind)),
            _ => None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "class", rename_all = "snake_case")]
pub enum AnswerClass {
    Direct { label: Interpretation, trace: MatchTrace },
    Indirect { trace: MatchTrace },
    Discarded { reason: String, trace: MatchTrace },
}

impl AnswerClass {
    pub fn trace(&self) -> &MatchTrace {
        match self {
            AnswerClass::Direct { trace, .. } | AnswerClass::Indirect { trace } | AnswerClass::Discarded { trace, .. } => {
                trace
            }
        }
    }
}

/// How much of the answer-constraint list is evaluated once one fails.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum TraceMode {
    #[default]
    FirstFailure,
    Full,
}

#[derive(Debug, Clone)]
struct Unit {
    text: String,
    start: usize,
    end: usize,
}

/// Case-folded turn with its comparison tokens and words.
struct View {
    folded: String,
    token_count: usize,
    units: Vec<Unit>,
    words: Vec<Unit>,
}

impl View {
    fn new(text: &str, tokenizer: Tokenizer) -> Self {
        let folded = fold(text);
        let token_count = tokenize(text, tokenizer).len();
        let units = comparable_units(&folded, tokenizer);
        let words = word_spans(&folded)
            .into_iter()
            .filter_map(|(start, w)| {
                let t = trim_token(w);
                if t.is_empty() {
                    return None;
                }
                let offset = start + (w.len() - w.trim_start_matches(TRIM).len());
                Some(Unit { text: t.to_string(), start: offset, end: offset + t.len() })
            })
            .collect();
        View { folded, token_count, units, words }
    }

    fn span(&self, start: usize, end: usize) -> Span {
        Span { start, end, text: self.folded[start..end].to_string() }
    }

    /// All occurrences of `phrase` as a contiguous unit sequence.
    fn find_phrase(&self, phrase: &[String]) -> Vec<Span> {
        if phrase.is_empty() || phrase.len() > self.units.len() {
            return Vec::new();
        }
        self.units
            .windows(phrase.len())
            .filter(|w| w.iter().zip(phrase).all(|(u, p)| &u.text == p))
            .map(|w| self.span(w[0].start, w[w.len() - 1].end))
            .collect()
    }

    fn find_substring(&self, needle: &str, at_token_end: bool) -> Vec<Span> {
        self.folded
            .match_indices(needle)
            .filter(|(i, m)| {
                !at_token_end || {
                    let rest = &self.folded[i + m.len()..];
                    rest.chars().next().is_none_or(|c| c.is_whitespace() || TRIM.contains(&c))
                }
            })
            .map(|(i, m)| self.span(i, i + m.len()))
            .collect()
    }

    fn find_prefix(&self, surface: &str, tokenizer: Tokenizer) -> Vec<Span> {
        match tokenizer {
            Tokenizer::HanChar => {
                let body = self.folded.trim_start_matches(|c: char| c.is_whitespace() || TRIM.contains(&c));
                let offset = self.folded.len() - body.len();
                if body.starts_with(surface) {
                    vec![self.span(offset, offset + surface.len())]
                } else {
                    Vec::new()
                }
            }
            Tokenizer::Whitespace => {
                let parts: Vec<&str> = surface.split_whitespace().collect();
                let Some((last, init)) = parts.split_last() else { return Vec::new() };
                if parts.len() > self.words.len() {
                    return Vec::new();
                }
                self.words
                    .windows(parts.len())
                    .filter(|w| {
                        w.iter().zip(init).all(|(u, p)| u.text == *p) && w[parts.len() - 1].text.starts_with(last)
                    })
                    .map(|w| self.span(w[0].start, w[parts.len() - 1].start + last.len()))
                    .collect()
            }
        }
    }

    fn ends_with(&self, term: &str) -> Option<Span> {
        let body = self.folded.trim_end();
        if body.ends_with(term) {
            return Some(self.span(body.len() - term.len(), body.len()));
        }
        let stripped = body.trim_end_matches(|c: char| c.is_whitespace() || TRIM.contains(&c));
        if stripped.ends_with(term) {
            return Some(self.span(stripped.len() - term.len(), stripped.len()));
        }
        None
    }
}

fn comparable_units(folded: &str, tokenizer: Tokenizer) -> Vec<Unit> {
    tokenize_spans(folded, tokenizer)
        .into_iter()
        .filter_map(|t| {
            let trimmed = trim_token(t.text);
            if trimmed.is_empty() {
                return None;
            }
            let offset = t.start + (t.text.len() - t.text.trim_start_matches(TRIM).len());
            Some(Unit { text: trimmed.to_string(), start: offset, end: offset + trimmed.len() })
        })
        .collect()
}

/// Comparison units of a rule payload.
pub(crate) fn phrase_units(text: &str, tokenizer: Tokenizer) -> Vec<String> {
    comparable_units(&fold(text), tokenizer).into_iter().map(|u| u.text).collect()
}

fn first_phrase(view: &View, terms: &[Term], tokenizer: Tokenizer) -> Option<Span> {
    terms.iter().find_map(|t| view.find_phrase(&phrase_units(&t.text, tokenizer)).into_iter().next())
}

fn first_substring(view: &View, terms: &[Term]) -> Option<Span> {
    terms.iter().find_map(|t| view.find_substring(&fold(&t.text), false).into_iter().next())
}

fn first_suffix(view: &View, terms: &[Term]) -> Option<Span> {
    terms.iter().find_map(|t| view.ends_with(&fold(&t.text)))
}

fn char_span(view: &View, c: char) -> Option<Span> {
    let c = fold(&c.to_string());
    view.find_substring(&c, false).into_iter().next()
}

fn flag(value: Option<bool>, predicate: &Predicate, turn: &Turn) -> Result<bool, RuleError> {
    value.ok_or_else(|| RuleError::MissingMetadata {
        predicate: predicate.kind(),
        turn_id: turn.id.clone(),
        source_name: turn.thread.clone().unwrap_or_else(|| "-".into()),
    })
}

fn eval_predicate(p: &Predicate, turn: &Turn, view: &View, tokenizer: Tokenizer) -> Result<(bool, Option<Span>), RuleError> {
    let meta = &turn.meta;
    let positive = |s: Option<Span>| (s.is_some(), s);
    let negative = |s: Option<Span>| (s.is_none(), s);
    Ok(match p {
        Predicate::ContainsAnyToken { terms, suffixes, suffix_min_chars } => {
            let hit = first_phrase(view, terms, tokenizer).or_else(|| {
                let suffixes: Vec<String> = suffixes.iter().map(|s| fold(s)).collect();
                view.units
                    .iter()
                    .find(|u| u.text.chars().count() >= *suffix_min_chars && suffixes.iter().any(|s| u.text.ends_with(s)))
                    .map(|u| view.span(u.start, u.end))
            });
            positive(hit)
        }
        Predicate::ContainsAnyNgram { terms } => positive(first_phrase(view, terms, tokenizer)),
        Predicate::ContainsAnySubstring { terms } => positive(first_substring(view, terms)),
        Predicate::NotContainsAnyToken { terms } => negative(first_phrase(view, terms, tokenizer)),
        Predicate::NotContainsAnySubstring { terms } => negative(first_substring(view, terms)),
        Predicate::EndsWithAny { terms } => positive(first_suffix(view, terms)),
        Predicate::NotEndsWithAny { terms } => negative(first_suffix(view, terms)),
        Predicate::ContainsChar { char } => positive(char_span(view, *char)),
        Predicate::NotContainsChar { char } => negative(char_span(view, *char)),
        Predicate::TokenCountBetween { min, max } => ((*min..=*max).contains(&view.token_count), None),
        Predicate::MaxMentions { max } => (meta.mention_count <= *max, None),
        Predicate::NoLinks => (meta.link_count == 0, None),
        Predicate::NoHashtags => (meta.hashtag_count == 0, None),
        Predicate::NoDigits => (!meta.digit_present, None),
        Predicate::AuthorVerified => (flag(meta.author_verified, p, turn)?, None),
        Predicate::NotRetweet => (!flag(meta.is_retweet, p, turn)?, None),
        Predicate::NotReply => (!flag(meta.is_reply, p, turn)?, None),
        Predicate::AcceptedAnswer => (flag(meta.is_accepted, p, turn)?, None),
    })
}

fn check_language(turn: &Turn, pack: &RulePack) -> Result<(), RuleError> {
    if turn.language != pack.language {
        return Err(RuleError::LanguageMismatch {
            turn_id: turn.id.clone(),
            turn_lang: turn.language.clone(),
            pack_lang: pack.language.clone(),
        });
    }
    Ok(())
}

/// Evaluates every question rule and reports whether all of them hold.
pub fn eval_question_rules(turn: &Turn, pack: &RulePack) -> Result<(bool, MatchTrace), RuleError> {
    check_language(turn, pack)?;
    let view = View::new(&turn.text, pack.tokenizer);
    let mut entries = Vec::with_capacity(pack.question_rules.len());
    for (index, p) in pack.question_rules.iter().enumerate() {
        let (held, span) = eval_predicate(p, turn, &view, pack.tokenizer)?;
        entries.push(TraceEntry { rule: RuleRef::Predicate { index, kind: p.kind() }, held, span });
    }
    let decision = entries.iter().all(|e| e.held);
    Ok((decision, MatchTrace { decision: TraceDecision::Question(decision), entries }))
}

pub fn classify_answer(question: &Turn, answer: &Turn, pack: &RulePack) -> Result<AnswerClass, RuleError> {
    classify_answer_with(question, answer, pack, TraceMode::FirstFailure)
}

struct Candidate {
    rule: RuleRef,
    polarity: Interpretation,
    span: Span,
    chars: usize,
}

/// Constraints first, then keywords under longest-match-first.
pub fn classify_answer_with(
    question: &Turn,
    answer: &Turn,
    pack: &RulePack,
    mode: TraceMode,
) -> Result<AnswerClass, RuleError> {
    check_language(answer, pack)?;
    let view = View::new(&answer.text, pack.tokenizer);
    let mut entries = Vec::new();
    let mut reason = None;
    for (index, p) in pack.answer_constraints.iter().enumerate() {
        let (held, span) = eval_predicate(p, answer, &view, pack.tokenizer)?;
        entries.push(TraceEntry { rule: RuleRef::Predicate { index, kind: p.kind() }, held, span });
        if !held && reason.is_none() {
            reason = Some(p.kind().to_string());
            if mode == TraceMode::FirstFailure {
                break;
            }
        }
    }
    if let Some(reason) = reason {
        let trace = MatchTrace { decision: TraceDecision::Polarity(None), entries };
        return Ok(AnswerClass::Discarded { reason, trace });
    }

    let mut candidates: Vec<Candidate> = Vec::new();
    for (kw, polarity) in pack.keywords() {
        for span in keyword_matches(&view, kw, pack.tokenizer) {
            candidates.push(Candidate {
                rule: RuleRef::Keyword { surface: kw.surface.clone(), polarity },
                polarity,
                chars: kw.surface.chars().count(),
                span,
            });
        }
    }
    for rule in &pack.special_rules {
        let SpecialRule::VerbEcho { lexicon, negators } = rule;
        let verbs: Vec<String> = lexicon.iter().map(|t| t.text.clone()).collect();
        if let Some(echo) = echo_match(question, &view, &verbs, negators)? {
            candidates.push(Candidate {
                rule: RuleRef::VerbEcho { verb: echo.verb, polarity: echo.polarity },
                polarity: echo.polarity,
                chars: view.folded[echo.span.start..echo.span.end].chars().count(),
                span: echo.span,
            });
        }
    }

    // Longest surface first; a shorter match overlapping an accepted one is dropped.
    candidates.sort_by(|a, b| b.chars.cmp(&a.chars).then(a.span.start.cmp(&b.span.start)));
    let mut accepted: Vec<Candidate> = Vec::new();
    for c in candidates {
        if accepted.iter().all(|a| c.span.end <= a.span.start || c.span.start >= a.span.end) {
            accepted.push(c);
        }
    }
    accepted.sort_by_key(|c| c.span.start);
    let has_yes = accepted.iter().any(|c| c.polarity == Interpretation::Yes);
    let has_no = accepted.iter().any(|c| c.polarity == Interpretation::No);
    entries.extend(accepted.into_iter().map(|c| TraceEntry { rule: c.rule, held: true, span: Some(c.span) }));

    Ok(match (has_yes, has_no) {
        (true, true) => AnswerClass::Discarded {
            reason: AMBIGUOUS_POLARITY.to_string(),
            trace: MatchTrace { decision: TraceDecision::Polarity(None), entries },
        },
        (false, false) => AnswerClass::Indirect { trace: MatchTrace { decision: TraceDecision::Polarity(None), entries } },
        (yes, _) => {
            let label = if yes { Interpretation::Yes } else { Interpretation::No };
            AnswerClass::Direct { label, trace: MatchTrace { decision: TraceDecision::Polarity(Some(label)), entries } }
        }
    })
}

fn keyword_matches(view: &View, kw: &Keyword, tokenizer: Tokenizer) -> Vec<Span> {
    let surface = fold(&kw.surface);
    match kw.mode {
        MatchMode::Token | MatchMode::Ngram => view.find_phrase(&phrase_units(&surface, tokenizer)),
        MatchMode::Substring => view.find_substring(&surface, kw.at_token_end),
        MatchMode::Prefix => view.find_prefix(&surface, tokenizer),
    }
}

struct Echo {
    verb: String,
    polarity: Interpretation,
    span: Span,
}

fn first_verb<'a>(question: &str, lexicon: &'a [String]) -> Option<&'a str> {
    question.char_indices().find_map(|(i, _)| {
        lexicon
            .iter()
            .filter(|v| !v.is_empty() && question[i..].starts_with(v.as_str()))
            .max_by_key(|v| v.len())
            .map(String::as_str)
    })
}

fn echo_match(question: &Turn, answer: &View, lexicon: &[String], negators: &[String]) -> Result<Option<Echo>, RuleError> {
    if lexicon.is_empty() {
        return Err(RuleError::EmptyLexicon);
    }
    let lexicon: Vec<String> = lexicon.iter().map(|v| fold(v)).collect();
    let Some(verb) = first_verb(&fold(&question.text), &lexicon) else { return Ok(None) };
    let body = answer.folded.trim_start_matches(|c: char| c.is_whitespace() || TRIM.contains(&c));
    let offset = answer.folded.len() - body.len();
    if body.starts_with(verb) {
        return Ok(Some(Echo {
            verb: verb.to_string(),
            polarity: Interpretation::Yes,
            span: answer.span(offset, offset + verb.len()),
        }));
    }
    for neg in negators.iter().map(|n| fold(n)).filter(|n| !n.is_empty()) {
        if body.starts_with(&neg) && body[neg.len()..].starts_with(verb) {
            let end = offset + neg.len() + verb.len();
            return Ok(Some(Echo { verb: verb.to_string(), polarity: Interpretation::No, span: answer.span(offset, end) }));
        }
    }
    Ok(None)
}

/// Polarity implied by the answer echoing the question's first lexicon verb.
///
/// The first verb is the leftmost lexicon entry found in the question, the
/// longest one when several start at that position.
pub fn verb_echo(
    question: &Turn,
    answer: &Turn,
    verb_lexicon: &[String],
    negators: &[String],
) -> Result<Option<Interpretation>, RuleError> {
    let view = View::new(&answer.text, Tokenizer::HanChar);
    Ok(echo_match(question, &view, verb_lexicon, negators)?.map(|e| e.polarity))
}
