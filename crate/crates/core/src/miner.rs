//! Distant-supervision pipeline: pairs in, labeled direct answers and
//! indirect-answer candidates out.

use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Interpretation, QAPair};
use crate::rules::{classify_answer_with, eval_question_rules, AnswerClass, MatchTrace, RuleError, RulePack, TraceMode};
use crate::sampling;

#[derive(Debug, Error)]
pub enum MineError {
    #[error("pair `{pair_id}` is in `{found}` but the pack is for `{expected}`")]
    MixedLanguage { pair_id: String, found: String, expected: String },
    #[error("pair `{pair_id}` from `{source_name}`: {error}")]
    Rule {
        pair_id: String,
        source_name: String,
        #[source]
        error: RuleError,
    },
    #[error("instance `{0}` is labeled Middle; distant supervision only yields Yes or No")]
    MiddleLabel(String),
    #[error("requested {requested} candidates but only {available} are available")]
    NotEnough { requested: usize, available: usize },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// A direct answer with its keyword-derived label.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistantInstance {
    pub pair: QAPair,
    pub label: Interpretation,
    pub trace: MatchTrace,
}

/// A yes-no question followed by an answer without polarity keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndirectCandidate {
    pub pair: QAPair,
}

/// Per-pair outcome of the rule pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum PairDecision {
    NotQuestion { trace: MatchTrace },
    Answered { question_trace: MatchTrace, class: AnswerClass },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MiningReport {
    pub language: String,
    /// Every input pair.
    pub pairs_examined: u64,
    /// Distinct question turns passing the question rules.
    pub questions_found: u64,
    /// Pairs whose question passed; equals direct + indirect + discarded.
    pub answers_examined: u64,
    pub direct_count: u64,
    pub indirect_count: u64,
    pub discarded_count: u64,
    pub yes_count: u64,
    pub no_count: u64,
    /// Over direct instances; both 0 when there are none.
    pub yes_ratio: f64,
    pub no_ratio: f64,
    pub per_reason_discards: BTreeMap<String, u64>,
}

impl MiningReport {
    pub fn indirect_ratio(&self) -> f64 {
        if self.answers_examined == 0 {
            0.0
        } else {
            self.indirect_count as f64 / self.answers_examined as f64
        }
    }

    /// Plain-text table: language, questions, direct answers with yes/no
    /// split, indirect answers and discards.
    pub fn to_table(&self) -> String {
        let pct = |n: u64, d: u64| if d == 0 { 0.0 } else { 100.0 * n as f64 / d as f64 };
        let mut out = String::new();
        out.push_str("lang\tpairs\tyes-no questions\tanswers\tdirect\t%direct\t%yes\t%no\tindirect\t%indirect\tdiscarded\n");
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{:.1}\t{:.1}\t{:.1}\t{}\t{:.1}\t{}\n",
            self.language,
            self.pairs_examined,
            self.questions_found,
            self.answers_examined,
            self.direct_count,
            pct(self.direct_count, self.answers_examined),
            100.0 * self.yes_ratio,
            100.0 * self.no_ratio,
            self.indirect_count,
            100.0 * self.indirect_ratio(),
            self.discarded_count,
        ));
        if !self.per_reason_discards.is_empty() {
            out.push_str("discard reasons:\n");
            for (reason, n) in &self.per_reason_discards {
                out.push_str(&format!("  {reason}\t{n}\n"));
            }
        }
        out
    }
}

/// Single-pass tally of pipeline outcomes.
#[derive(Debug, Default)]
struct Tally {
    report: MiningReport,
    seen_questions: HashSet<String>,
}

impl Tally {
    fn record(&mut self, pair: &QAPair, decision: &PairDecision) {
        let r = &mut self.report;
        r.pairs_examined += 1;
        let PairDecision::Answered { class, .. } = decision else { return };
        if self.seen_questions.insert(pair.question.id.clone()) {
            r.questions_found += 1;
        }
        r.answers_examined += 1;
        match class {
            AnswerClass::Direct { label, .. } => {
                r.direct_count += 1;
                match label {
                    Interpretation::Yes => r.yes_count += 1,
                    _ => r.no_count += 1,
                }
            }
            AnswerClass::Indirect { .. } => r.indirect_count += 1,
            AnswerClass::Discarded { reason, .. } => {
                r.discarded_count += 1;
                *r.per_reason_discards.entry(reason.clone()).or_default() += 1;
            }
        }
    }

    fn finish(mut self) -> MiningReport {
        let r = &mut self.report;
        if r.direct_count > 0 {
            r.yes_ratio = r.yes_count as f64 / r.direct_count as f64;
            r.no_ratio = r.no_count as f64 / r.direct_count as f64;
        }
        self.report
    }
}

#[derive(Debug, Clone, Default)]
pub struct MineOutput {
    pub instances: Vec<DistantInstance>,
    pub candidates: Vec<IndirectCandidate>,
    pub report: MiningReport,
}

/// Item handed to a streaming sink, in input order.
#[derive(Debug, Clone)]
pub enum Mined {
    Direct(DistantInstance),
    Indirect(IndirectCandidate),
}

pub struct Miner<'p> {
    pack: &'p RulePack,
    mode: TraceMode,
}

impl<'p> Miner<'p> {
    pub fn new(pack: &'p RulePack) -> Self {
        Miner { pack, mode: TraceMode::FirstFailure }
    }

    /// Evaluate every answer constraint even after one fails.
    pub fn full_trace(mut self, on: bool) -> Self {
        self.mode = if on { TraceMode::Full } else { TraceMode::FirstFailure };
        self
    }

    pub fn decide(&self, pair: &QAPair) -> Result<PairDecision, MineError> {
        for turn in [&pair.question, &pair.answer] {
            if turn.language != self.pack.language {
                return Err(MineError::MixedLanguage {
                    pair_id: pair.id(),
                    found: turn.language.clone(),
                    expected: self.pack.language.clone(),
                });
            }
        }
        let wrap = |error| MineError::Rule { pair_id: pair.id(), source_name: pair.source.clone(), error };
        let (is_question, question_trace) = eval_question_rules(&pair.question, self.pack).map_err(wrap)?;
        if !is_question {
            return Ok(PairDecision::NotQuestion { trace: question_trace });
        }
        let class = classify_answer_with(&pair.question, &pair.answer, self.pack, self.mode).map_err(wrap)?;
        Ok(PairDecision::Answered { question_trace, class })
    }

    /// Streams outputs to `sink` while keeping only the tally in memory.
    pub fn mine_streaming<I, F>(&self, corpus: I, mut sink: F) -> Result<MiningReport, MineError>
    where
        I: IntoIterator<Item = QAPair>,
        F: FnMut(Mined) -> Result<(), MineError>,
    {
        let mut tally = Tally { report: MiningReport { language: self.pack.language.clone(), ..Default::default() }, ..Default::default() };
        for pair in corpus {
            let decision = self.decide(&pair)?;
            tally.record(&pair, &decision);
            if let PairDecision::Answered { class, .. } = decision {
                match class {
                    AnswerClass::Direct { label, trace } => sink(Mined::Direct(DistantInstance { pair, label, trace }))?,
                    AnswerClass::Indirect { .. } => sink(Mined::Indirect(IndirectCandidate { pair }))?,
                    AnswerClass::Discarded { .. } => {}
                }
            }
        }
        Ok(tally.finish())
    }

    pub fn mine<I>(&self, corpus: I) -> Result<MineOutput, MineError>
    where
        I: IntoIterator<Item = QAPair>,
    {
        let mut instances = Vec::new();
        let mut candidates = Vec::new();
        let report = self.mine_streaming(corpus, |item| {
            match item {
                Mined::Direct(d) => instances.push(d),
                Mined::Indirect(c) => candidates.push(c),
            }
            Ok(())
        })?;
        Ok(MineOutput { instances, candidates, report })
    }
}

pub fn mine<I>(corpus: I, pack: &RulePack) -> Result<MineOutput, MineError>
where
    I: IntoIterator<Item = QAPair>,
{
    Miner::new(pack).mine(corpus)
}

/// One line of an exported direct-answer dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub label: Interpretation,
    pub language: String,
    pub source: String,
    pub trace: Vec<String>,
}

impl From<&DistantInstance> for DatasetRecord {
    fn from(d: &DistantInstance) -> Self {
        DatasetRecord {
            id: d.pair.id(),
            question: d.pair.question.text.clone(),
            answer: d.pair.answer.text.clone(),
            label: d.label,
            language: d.pair.language().to_string(),
            source: d.pair.source.clone(),
            trace: d.trace.fired_keywords(),
        }
    }
}

/// One line of an exported indirect-candidate file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateRecord {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub language: String,
    pub source: String,
    pub context_before: Vec<String>,
    pub context_after: Vec<String>,
}

impl From<&IndirectCandidate> for CandidateRecord {
    fn from(c: &IndirectCandidate) -> Self {
        let texts = |ts: &[crate::corpus::Turn]| ts.iter().map(|t| t.text.clone()).collect();
        CandidateRecord {
            id: c.pair.id(),
            question: c.pair.question.text.clone(),
            answer: c.pair.answer.text.clone(),
            language: c.pair.language().to_string(),
            source: c.pair.source.clone(),
            context_before: texts(&c.pair.context_before),
            context_after: texts(&c.pair.context_after),
        }
    }
}

/// Writes `records` as JSON lines to `path` via a temporary sibling file, so
/// a failed write never leaves a partial file behind.
pub fn write_jsonl_atomic<T: Serialize>(records: impl IntoIterator<Item = T>, path: &Path) -> Result<(), MineError> {
    let io_err = |source| MineError::Io { path: path.to_path_buf(), source };
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| -> io::Result<()> {
        let mut out = BufWriter::new(File::create(&tmp)?);
        for r in records {
            serde_json::to_writer(&mut out, &r)?;
            out.write_all(b"\n")?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(io_err(e));
    }
    Ok(())
}

pub fn export_dataset(instances: &[DistantInstance], path: &Path) -> Result<(), MineError> {
    if let Some(bad) = instances.iter().find(|d| d.label == Interpretation::Middle) {
        return Err(MineError::MiddleLabel(bad.pair.id()));
    }
    write_jsonl_atomic(instances.iter().map(DatasetRecord::from), path)
}

pub fn export_candidates(candidates: &[IndirectCandidate], path: &Path) -> Result<(), MineError> {
    write_jsonl_atomic(candidates.iter().map(CandidateRecord::from), path)
}

/// Uniform seeded sample without replacement. No content filtering, so the
/// sample keeps the natural distribution of interpretations.
pub fn sample_candidates(candidates: &[IndirectCandidate], n: usize, seed: u64) -> Result<Vec<IndirectCandidate>, MineError> {
    if n > candidates.len() {
        return Err(MineError::NotEnough { requested: n, available: candidates.len() });
    }
    Ok(sampling::sample(candidates.to_vec(), n, seed))
}
