//! Built-in rule packs and their hand-labeled fixture corpora.

use std::collections::HashMap;
use std::sync::OnceLock;

use serde::Deserialize;

use crate::corpus::{Interpretation, QAPair, SourceMeta, Turn};
use crate::rules::{RuleError, RulePack};

pub const SUPPORTED_LANGUAGES: [&str; 5] = ["hi", "tr", "es", "zh", "ko"];

const PACK_SOURCES: [(&str, &str); 5] = [
    ("hi", include_str!("../data/packs/hi.toml")),
    ("tr", include_str!("../data/packs/tr.toml")),
    ("es", include_str!("../data/packs/es.toml")),
    ("zh", include_str!("../data/packs/zh.toml")),
    ("ko", include_str!("../data/packs/ko.toml")),
];

const FIXTURE_SOURCES: [(&str, &str); 5] = [
    ("hi", include_str!("../data/fixtures/hi.jsonl")),
    ("tr", include_str!("../data/fixtures/tr.jsonl")),
    ("es", include_str!("../data/fixtures/es.jsonl")),
    ("zh", include_str!("../data/fixtures/zh.jsonl")),
    ("ko", include_str!("../data/fixtures/ko.jsonl")),
];

fn unsupported(code: &str) -> RuleError {
    RuleError::UnsupportedLanguage {
        code: code.to_string(),
        supported: SUPPORTED_LANGUAGES.iter().map(|s| s.to_string()).collect(),
    }
}

/// TOML source of a built-in pack.
pub fn builtin_pack_source(code: &str) -> Result<&'static str, RuleError> {
    PACK_SOURCES.iter().find(|(c, _)| *c == code).map(|(_, s)| *s).ok_or_else(|| unsupported(code))
}

/// Parsed and validated built-in pack; parsed once per process.
pub fn builtin_pack(code: &str) -> Result<RulePack, RuleError> {
    static CACHE: OnceLock<HashMap<&'static str, RulePack>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| {
        PACK_SOURCES
            .iter()
            .map(|(c, src)| {
                let pack = RulePack::from_toml_str(src).unwrap_or_else(|e| panic!("built-in pack `{c}` is invalid: {e}"));
                (*c, pack)
            })
            .collect()
    });
    cache.get(code).cloned().ok_or_else(|| unsupported(code))
}

/// Hand-labeled expectation for one fixture pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expected {
    NotQuestion,
    Direct(Interpretation),
    Indirect,
    Discarded(String),
}

impl Expected {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "yes" => Expected::Direct(Interpretation::Yes),
            "no" => Expected::Direct(Interpretation::No),
            "indirect" => Expected::Indirect,
            "not-question" => Expected::NotQuestion,
            _ => Expected::Discarded(s.strip_prefix("discard:")?.to_string()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Fixture {
    pub pair: QAPair,
    pub expected: Expected,
    pub note: Option<String>,
}

#[derive(Deserialize)]
struct FixtureLine {
    q: String,
    a: String,
    expect: String,
    #[serde(default)]
    qm: MetaOverride,
    #[serde(default)]
    am: MetaOverride,
    #[serde(default)]
    note: Option<String>,
}

#[derive(Deserialize, Default, Clone, Copy)]
#[serde(deny_unknown_fields)]
struct MetaOverride {
    author_verified: Option<bool>,
    is_retweet: Option<bool>,
    is_reply: Option<bool>,
    is_accepted: Option<bool>,
}

impl MetaOverride {
    fn or(self, base: MetaOverride) -> MetaOverride {
        MetaOverride {
            author_verified: self.author_verified.or(base.author_verified),
            is_retweet: self.is_retweet.or(base.is_retweet),
            is_reply: self.is_reply.or(base.is_reply),
            is_accepted: self.is_accepted.or(base.is_accepted),
        }
    }

    fn apply(self, meta: &mut SourceMeta) {
        meta.author_verified = self.author_verified;
        meta.is_retweet = self.is_retweet;
        meta.is_reply = self.is_reply;
        meta.is_accepted = self.is_accepted;
    }
}

/// Source metadata a fixture turn carries unless the line overrides it.
fn default_meta(code: &str) -> (MetaOverride, MetaOverride) {
    match code {
        "hi" => (
            MetaOverride { author_verified: Some(true), is_retweet: Some(false), is_reply: Some(false), ..Default::default() },
            MetaOverride { is_retweet: Some(false), is_reply: Some(true), ..Default::default() },
        ),
        "tr" => (MetaOverride::default(), MetaOverride { is_accepted: Some(true), ..Default::default() }),
        _ => (MetaOverride::default(), MetaOverride::default()),
    }
}

/// Hand-labeled question-answer pairs for a built-in pack.
pub fn fixture_corpus(code: &str) -> Result<Vec<Fixture>, RuleError> {
    let src = FIXTURE_SOURCES.iter().find(|(c, _)| *c == code).map(|(_, s)| *s).ok_or_else(|| unsupported(code))?;
    let (qd, ad) = default_meta(code);
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let bad = |message: String| RuleError::Invalid { field: format!("fixtures/{code}.jsonl:{}", i + 1), message };
        let fx: FixtureLine = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
        let expected = Expected::parse(&fx.expect).ok_or_else(|| bad(format!("unknown expectation `{}`", fx.expect)))?;
        let mut q = Turn::from_text(format!("{code}-{}q", i + 1), &fx.q, code).map_err(|e| bad(e.to_string()))?;
        let mut a = Turn::from_text(format!("{code}-{}a", i + 1), &fx.a, code).map_err(|e| bad(e.to_string()))?;
        fx.qm.or(qd).apply(&mut q.meta);
        fx.am.or(ad).apply(&mut a.meta);
        a.reply_to = Some(q.id.clone());
        let pair = QAPair::new(q, a, format!("fixtures/{code}")).map_err(|e| bad(e.to_string()))?;
        out.push(Fixture { pair, expected, note: fx.note });
    }
    Ok(out)
}
