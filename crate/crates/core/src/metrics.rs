//! Scoring, benchmark splits, annotator agreement and audit sheets.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Interpretation;
use crate::sampling;
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("at least {min} items are required, got {got}")]
    TooFew { min: usize, got: usize },
    #[error("requested {requested} items but only {available} are available")]
    NotEnough { requested: usize, available: usize },
    #[error("duplicate item id `{0}`")]
    DuplicateId(String),
    #[error("rows without a human judgment: {}", .0.join(", "))]
    MissingJudgments(Vec<String>),
    #[error("row `{id}`: `{value}` is not a valid {audit} judgment")]
    BadJudgment { id: String, value: String, audit: AuditType },
    #[error("at least two annotators are required")]
    TooFewAnnotators,
    #[error("audit sheet {path}: {message}")]
    Sheet { path: PathBuf, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelScores<S> {
    pub precision: S,
    pub recall: S,
    pub f1: S,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<S> {
    pub per_label: BTreeMap<Interpretation, LabelScores<S>>,
    pub macro_f1: S,
    pub accuracy: S,
    /// `confusion[gold][pred]`, indexed by ordinal.
    pub confusion: [[usize; 3]; 3],
    pub n: usize,
}

fn f1<S: Scalar>(p: S, r: S) -> S {
    if p + r == S::zero() {
        S::zero()
    } else {
        S::two() * p * r / (p + r)
    }
}

/// One-vs-rest precision, recall and F1 per label, with their unweighted
/// mean as the headline score.
pub fn score<S: Scalar>(preds: &[Interpretation], gold: &[Interpretation]) -> Result<EvalReport<S>, MetricsError> {
    if preds.len() != gold.len() {
        return Err(MetricsError::LengthMismatch(preds.len(), gold.len()));
    }
    if gold.is_empty() {
        return Err(MetricsError::TooFew { min: 1, got: 0 });
    }
    let mut confusion = [[0usize; 3]; 3];
    for (p, g) in preds.iter().zip(gold) {
        confusion[g.ordinal()][p.ordinal()] += 1;
    }
    let mut per_label = BTreeMap::new();
    for label in Interpretation::ALL {
        let i = label.ordinal();
        let tp = confusion[i][i];
        let predicted: usize = (0..3).map(|g| confusion[g][i]).sum();
        let support: usize = confusion[i].iter().sum();
        let precision = S::ratio(tp, predicted);
        let recall = S::ratio(tp, support);
        per_label.insert(label, LabelScores { precision, recall, f1: f1(precision, recall), support });
    }
    let macro_f1 = per_label.values().fold(S::zero(), |acc, s| acc + s.f1) / S::from_usize(3).unwrap();
    let correct = (0..3).map(|i| confusion[i][i]).sum();
    Ok(EvalReport { per_label, macro_f1, accuracy: S::ratio(correct, gold.len()), confusion, n: gold.len() })
}

/// Size of the validation part for `n` items: 20% rounded half to even.
pub fn validation_size(n: usize) -> usize {
    let (q, r) = (n / 5, n % 5);
    if r >= 3 {
        q + 1
    } else {
        q
    }
}

/// Seeded shuffle; the first 20% go to validation, the rest to test.
pub fn split_benchmark<T: Clone>(instances: &[T], seed: u64) -> Result<(Vec<T>, Vec<T>), MetricsError> {
    if instances.len() < 5 {
        return Err(MetricsError::TooFew { min: 5, got: instances.len() });
    }
    let mut all = instances.to_vec();
    sampling::shuffle(&mut all, seed);
    let test = all.split_off(validation_size(instances.len()));
    Ok((all, test))
}

fn weights<S: Scalar>() -> [[S; 3]; 3] {
    let mut w = [[S::zero(); 3]; 3];
    for (i, row) in w.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            *cell = S::ratio(i.abs_diff(j), 2);
        }
    }
    w
}

/// Linearly weighted Cohen's kappa with Yes < Middle < No.
pub fn weighted_kappa<S: Scalar>(ann_a: &[Interpretation], ann_b: &[Interpretation]) -> Result<S, MetricsError> {
    if ann_a.len() != ann_b.len() {
        return Err(MetricsError::LengthMismatch(ann_a.len(), ann_b.len()));
    }
    if ann_a.is_empty() {
        return Err(MetricsError::TooFew { min: 1, got: 0 });
    }
    let n = ann_a.len();
    let mut counts = [[0usize; 3]; 3];
    let mut row = [0usize; 3];
    let mut col = [0usize; 3];
    for (a, b) in ann_a.iter().zip(ann_b) {
        counts[a.ordinal()][b.ordinal()] += 1;
        row[a.ordinal()] += 1;
        col[b.ordinal()] += 1;
    }
    let w = weights::<S>();
    let nn = S::from_usize(n).unwrap();
    let (mut observed, mut expected) = (S::zero(), S::zero());
    for i in 0..3 {
        for j in 0..3 {
            observed = observed + w[i][j] * S::ratio(counts[i][j], n);
            expected = expected + w[i][j] * S::from_usize(row[i]).unwrap() / nn * S::from_usize(col[j]).unwrap() / nn;
        }
    }
    if expected == S::zero() {
        // Only reachable when both annotators use one and the same label.
        return Ok(S::one());
    }
    Ok(S::one() - observed / expected)
}

/// Mean of pairwise weighted kappa over all annotator pairs.
pub fn mean_pairwise_kappa<S: Scalar>(annotators: &[Vec<Interpretation>]) -> Result<S, MetricsError> {
    if annotators.len() < 2 {
        return Err(MetricsError::TooFewAnnotators);
    }
    let mut sum = S::zero();
    let mut pairs = 0;
    for i in 0..annotators.len() {
        for j in i + 1..annotators.len() {
            sum = sum + weighted_kappa::<S>(&annotators[i], &annotators[j])?;
            pairs += 1;
        }
    }
    Ok(sum / S::from_usize(pairs).unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelShare<S> {
    pub count: usize,
    pub fraction: S,
}

/// Count and fraction per label; every label is present, with zeros for an
/// empty input.
pub fn label_distribution<S: Scalar>(labels: &[Interpretation]) -> BTreeMap<Interpretation, LabelShare<S>> {
    Interpretation::ALL
        .into_iter()
        .map(|l| {
            let count = labels.iter().filter(|x| **x == l).count();
            (l, LabelShare { count, fraction: S::ratio(count, labels.len()) })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AuditType {
    QuestionDetection,
    Interpretation,
}

impl std::fmt::Display for AuditType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AuditType::QuestionDetection => "question-detection",
            AuditType::Interpretation => "interpretation",
        })
    }
}

/// Question-detection judgments are `yes` (a yes-no question) or `no`;
/// interpretation judgments are `Yes`, `No` or `Middle`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Judgment {
    IsQuestion(bool),
    Label(Interpretation),
}

impl Judgment {
    pub fn parse(audit: AuditType, value: &str) -> Option<Judgment> {
        let v = value.trim();
        match audit {
            AuditType::QuestionDetection => match v.to_ascii_lowercase().as_str() {
                "yes" | "y" | "1" | "true" => Some(Judgment::IsQuestion(true)),
                "no" | "n" | "0" | "false" => Some(Judgment::IsQuestion(false)),
                _ => None,
            },
            AuditType::Interpretation => v.parse().ok().map(Judgment::Label),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRow {
    pub id: String,
    pub question: String,
    pub answer: String,
    pub machine: String,
    pub human: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditSheet {
    pub audit: AuditType,
    pub rows: Vec<AuditRow>,
}

pub const AUDIT_HEADER: [&str; 5] = ["id", "question", "answer", "machine", "human"];

/// Seeded sample of `n` rows with an empty human column.
pub fn make_audit_sheet(items: &[AuditRow], n: usize, seed: u64, audit: AuditType) -> Result<AuditSheet, MetricsError> {
    if n > items.len() {
        return Err(MetricsError::NotEnough { requested: n, available: items.len() });
    }
    let mut seen = HashSet::new();
    for r in items {
        if !seen.insert(r.id.as_str()) {
            return Err(MetricsError::DuplicateId(r.id.clone()));
        }
    }
    let rows = sampling::sample(items.to_vec(), n, seed).into_iter().map(|r| AuditRow { human: None, ..r }).collect();
    Ok(AuditSheet { audit, rows })
}

impl AuditSheet {
    /// Tab-separated UTF-8 with the header `id question answer machine human`.
    pub fn write_tsv(&self, path: &Path) -> Result<(), MetricsError> {
        let io_err = |source| MetricsError::Io { path: path.to_path_buf(), source };
        let file = File::create(path).map_err(io_err)?;
        let mut w = csv::WriterBuilder::new().delimiter(b'\t').quote_style(csv::QuoteStyle::Necessary).from_writer(file);
        let sheet_err = |e: csv::Error| MetricsError::Sheet { path: path.to_path_buf(), message: e.to_string() };
        w.write_record(AUDIT_HEADER).map_err(sheet_err)?;
        for r in &self.rows {
            w.write_record([&r.id, &r.question, &r.answer, &r.machine, r.human.as_deref().unwrap_or("")]).map_err(sheet_err)?;
        }
        w.flush().map_err(io_err)
    }

    pub fn read_tsv(path: &Path, audit: AuditType) -> Result<AuditSheet, MetricsError> {
        let file = File::open(path).map_err(|source| MetricsError::Io { path: path.to_path_buf(), source })?;
        let sheet_err = |message: String| MetricsError::Sheet { path: path.to_path_buf(), message };
        let mut r = csv::ReaderBuilder::new().delimiter(b'\t').from_reader(file);
        let header = r.headers().map_err(|e| sheet_err(e.to_string()))?.clone();
        if header.iter().collect::<Vec<_>>() != AUDIT_HEADER {
            return Err(sheet_err(format!("expected header `{}`", AUDIT_HEADER.join("\t"))));
        }
        let mut rows = Vec::new();
        let mut seen = HashSet::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| sheet_err(e.to_string()))?;
            let field = |i: usize| rec.get(i).unwrap_or("").to_string();
            let human = field(4);
            let row = AuditRow {
                id: field(0),
                question: field(1),
                answer: field(2),
                machine: field(3),
                human: (!human.trim().is_empty()).then_some(human),
            };
            if !seen.insert(row.id.clone()) {
                return Err(MetricsError::DuplicateId(row.id));
            }
            rows.push(row);
        }
        Ok(AuditSheet { audit, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditScore<S> {
    pub n: usize,
    pub agreements: usize,
    pub precision: S,
    /// Interpretation audits only: precision per machine label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_class: BTreeMap<Interpretation, LabelShare<S>>,
}

/// Question detection: share of rows the human confirms as yes-no questions.
/// Interpretation: share of rows where the human label equals the machine's.
pub fn score_audit<S: Scalar>(sheet: &AuditSheet) -> Result<AuditScore<S>, MetricsError> {
    let missing: Vec<String> = sheet.rows.iter().filter(|r| r.human.is_none()).map(|r| r.id.clone()).collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingJudgments(missing));
    }
    let bad = |r: &AuditRow, value: &str| MetricsError::BadJudgment { id: r.id.clone(), value: value.to_string(), audit: sheet.audit };
    let mut agreements = 0;
    let mut per_class: BTreeMap<Interpretation, (usize, usize)> = BTreeMap::new();
    for r in &sheet.rows {
        let human = r.human.as_deref().unwrap_or_default();
        let judged = Judgment::parse(sheet.audit, human).ok_or_else(|| bad(r, human))?;
        match judged {
            Judgment::IsQuestion(ok) => agreements += usize::from(ok),
            Judgment::Label(h) => {
                let m: Interpretation = r.machine.trim().parse().map_err(|_| bad(r, &r.machine))?;
                let entry = per_class.entry(m).or_default();
                entry.0 += 1;
                if h == m {
                    agreements += 1;
                    entry.1 += 1;
                }
            }
        }
    }
    let n = sheet.rows.len();
    let per_class = per_class
        .into_iter()
        .map(|(l, (total, ok))| (l, LabelShare { count: total, fraction: S::ratio(ok, total) }))
        .collect();
    Ok(AuditScore { n, agreements, precision: S::ratio(agreements, n), per_class })
}
