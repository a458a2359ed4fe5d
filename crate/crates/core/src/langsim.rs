//! Typological similarity between languages from feature vectors.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

/// Cell marking a missing feature value.
pub const MISSING: &str = "--";

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Table { line: usize, message: String },
    #[error("language `{0}` appears more than once")]
    DuplicateLanguage(String),
    #[error("language `{0}` has no non-missing feature")]
    AllMissing(String),
    #[error("no feature is present in both `{0}` and `{1}`")]
    NoSharedFeatures(String, String),
    #[error("`{0}` has zero norm over the features shared with `{1}`")]
    ZeroNorm(String, String),
    #[error("no vector for language `{0}`")]
    UnknownLanguage(String),
    #[error("feature vectors have different lengths ({0} vs {1})")]
    ShapeMismatch(usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangVector<S> {
    pub language: String,
    pub features: Vec<(String, Option<S>)>,
}

impl<S: Scalar> LangVector<S> {
    /// Unnamed features `f0, f1, ...`.
    pub fn from_values(language: impl Into<String>, values: &[Option<S>]) -> Self {
        LangVector {
            language: language.into(),
            features: values.iter().enumerate().map(|(i, v)| (format!("f{i}"), *v)).collect(),
        }
    }

    pub fn scaled(&self, factor: S) -> Self {
        LangVector {
            language: self.language.clone(),
            features: self.features.iter().map(|(id, v)| (id.clone(), v.map(|x| x * factor))).collect(),
        }
    }
}

/// Reads a tab-separated table: a header `language<TAB>feature...`, then one
/// row per language. `--` marks a missing value.
pub fn load_vectors<S: Scalar>(path: &Path) -> Result<BTreeMap<String, LangVector<S>>, SimilarityError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|source| SimilarityError::Io { path: path.to_path_buf(), source })?;
    parse_vectors(&text)
}

pub fn parse_vectors<S: Scalar>(text: &str) -> Result<BTreeMap<String, LangVector<S>>, SimilarityError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(SimilarityError::Table { line: 1, message: "empty table".into() })?;
    let features: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
    let mut unique = HashSet::new();
    if let Some(dup) = features.iter().find(|f| !unique.insert(f.as_str())) {
        return Err(SimilarityError::Table { line: 1, message: format!("duplicate feature `{dup}`") });
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines {
        let table_err = |message: String| SimilarityError::Table { line: i + 1, message };
        let mut cells = line.split('\t').map(str::trim);
        let language = cells.next().unwrap_or_default().to_string();
        let values: Vec<&str> = cells.collect();
        if values.len() != features.len() {
            return Err(table_err(format!("expected {} values, found {}", features.len(), values.len())));
        }
        let mut parsed = Vec::with_capacity(values.len());
        for (id, cell) in features.iter().zip(values) {
            let v = if cell == MISSING {
                None
            } else {
                let x: f64 = cell.parse().map_err(|_| table_err(format!("`{cell}` is not a number")))?;
                Some(S::from_f64_lossy(x))
            };
            parsed.push((id.clone(), v));
        }
        if parsed.iter().all(|(_, v)| v.is_none()) {
            return Err(SimilarityError::AllMissing(language));
        }
        if out.contains_key(&language) {
            return Err(SimilarityError::DuplicateLanguage(language));
        }
        out.insert(language.clone(), LangVector { language, features: parsed });
    }
    Ok(out)
}

/// Cosine over the dimensions present in both vectors.
pub fn cosine_similarity<S: Scalar>(a: &LangVector<S>, b: &LangVector<S>) -> Result<S, SimilarityError> {
    if a.features.len() != b.features.len() {
        return Err(SimilarityError::ShapeMismatch(a.features.len(), b.features.len()));
    }
    let (mut dot, mut na, mut nb, mut shared) = (S::zero(), S::zero(), S::zero(), 0usize);
    for ((_, x), (_, y)) in a.features.iter().zip(&b.features) {
        if let (Some(x), Some(y)) = (x, y) {
            dot = dot + *x * *y;
            na = na + *x * *x;
            nb = nb + *y * *y;
            shared += 1;
        }
    }
    if shared == 0 {
        return Err(SimilarityError::NoSharedFeatures(a.language.clone(), b.language.clone()));
    }
    if na == S::zero() {
        return Err(SimilarityError::ZeroNorm(a.language.clone(), b.language.clone()));
    }
    if nb == S::zero() {
        return Err(SimilarityError::ZeroNorm(b.language.clone(), a.language.clone()));
    }
    let cos = dot / (na * nb).sqrt();
    Ok(cos.max(-S::one()).min(S::one()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedPair<S> {
    pub eval: String,
    pub sup: String,
    pub similarity: S,
}

/// Every (evaluation, supervision) pair, most similar first; ties by codes.
pub fn rank_pairs<S: Scalar>(
    vectors: &BTreeMap<String, LangVector<S>>,
    eval_langs: &[String],
    sup_langs: &[String],
) -> Result<Vec<RankedPair<S>>, SimilarityError> {
    let get = |code: &String| vectors.get(code).ok_or_else(|| SimilarityError::UnknownLanguage(code.clone()));
    let mut out = Vec::with_capacity(eval_langs.len() * sup_langs.len());
    for e in eval_langs {
        let ve = get(e)?;
        for s in sup_langs {
            let similarity = if e == s { S::one() } else { cosine_similarity(ve, get(s)?)? };
            out.push(RankedPair { eval: e.clone(), sup: s.clone(), similarity });
        }
    }
    out.sort_by(|x, y| {
        y.similarity
            .partial_cmp(&x.similarity)
            .unwrap_or(Ordering::Equal)
            .then_with(|| x.eval.cmp(&y.eval))
            .then_with(|| x.sup.cmp(&y.sup))
    });
    Ok(out)
}

/// Tab-separated `eval sup similarity` table.
pub fn similarity_table<S: Scalar>(pairs: &[RankedPair<S>]) -> String {
    let mut out = String::from("eval\tsup\tsimilarity\n");
    for p in pairs {
        out.push_str(&format!("{}\t{}\t{:.6}\n", p.eval, p.sup, p.similarity));
    }
    out
}
