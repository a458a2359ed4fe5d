//! Greedy forward selection of auxiliary datasets, external evaluators and
//! McNemar's test for paired predictions.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;
use wait_timeout::ChildExt;

/// Discordant-pair count below which the exact binomial test is used.
pub const EXACT_THRESHOLD: u64 = 25;

#[derive(Debug, Error)]
pub enum EvaluatorError {
    #[error("cannot start evaluator `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: io::Error,
    },
    #[error("evaluator I/O failed: {0}")]
    Io(#[from] io::Error),
    #[error("evaluator exited with {0}")]
    Exit(String),
    #[error("evaluator did not answer within {0:?}")]
    Timeout(Duration),
    #[error("malformed evaluator response: {0}")]
    Malformed(String),
    #[error("evaluator score {0} is outside [0, 1]")]
    OutOfRange(f64),
    #[error("no score for dataset set {{{}}}", .0.join(","))]
    UnknownSet(Vec<String>),
    #[error("evaluator failed after {attempts} attempts: {last}")]
    Exhausted {
        attempts: u32,
        #[source]
        last: Box<EvaluatorError>,
    },
}

/// Scores a set of training datasets on the validation data.
pub trait Evaluator {
    fn evaluate(&mut self, datasets: &[String]) -> Result<f64, EvaluatorError>;
}

/// Deterministic evaluator answering from a fixed table keyed by dataset set.
#[derive(Debug, Clone, Default)]
pub struct LookupEvaluator {
    table: BTreeMap<BTreeSet<String>, f64>,
    calls: usize,
}

impl LookupEvaluator {
    pub fn new<I, S, T>(entries: I) -> Self
    where
        I: IntoIterator<Item = (T, f64)>,
        T: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let table = entries.into_iter().map(|(set, score)| (set.into_iter().map(Into::into).collect(), score)).collect();
        LookupEvaluator { table, calls: 0 }
    }

    pub fn calls(&self) -> usize {
        self.calls
    }
}

impl Evaluator for LookupEvaluator {
    fn evaluate(&mut self, datasets: &[String]) -> Result<f64, EvaluatorError> {
        self.calls += 1;
        let key: BTreeSet<String> = datasets.iter().cloned().collect();
        self.table.get(&key).copied().ok_or_else(|| EvaluatorError::UnknownSet(key.into_iter().collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvaluatorSpec {
    pub program: String,
    pub args: Vec<String>,
    pub timeout: Duration,
    pub retries: u32,
}

impl EvaluatorSpec {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        EvaluatorSpec { program: program.into(), args, timeout: Duration::from_secs(3600), retries: 0 }
    }
}

/// Request record written as one JSON line to the evaluator's stdin.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRequest {
    pub datasets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_manifest: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation: Option<PathBuf>,
    pub seed: u64,
}

#[derive(Deserialize)]
struct EvalResponse {
    score: f64,
}

fn run_once(spec: &EvaluatorSpec, line: &[u8]) -> Result<f64, EvaluatorError> {
    let mut child = Command::new(&spec.program)
        .args(&spec.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|source| EvaluatorError::Spawn { program: spec.program.clone(), source })?;
    let mut stdout = child.stdout.take().expect("stdout is piped");
    let reader = thread::spawn(move || {
        let mut buf = String::new();
        stdout.read_to_string(&mut buf).map(|_| buf)
    });
    {
        let mut stdin = child.stdin.take().expect("stdin is piped");
        if let Err(e) = stdin.write_all(line) {
            if e.kind() != io::ErrorKind::BrokenPipe {
                return Err(e.into());
            }
        }
    }
    let status = match child.wait_timeout(spec.timeout)? {
        Some(status) => status,
        None => {
            let _ = child.kill();
            let _ = child.wait();
            return Err(EvaluatorError::Timeout(spec.timeout));
        }
    };
    let out = reader.join().map_err(|_| EvaluatorError::Malformed("stdout reader panicked".into()))??;
    if !status.success() {
        return Err(EvaluatorError::Exit(status.to_string()));
    }
    let first = BufReader::new(out.as_bytes()).lines().next().transpose()?.unwrap_or_default();
    let resp: EvalResponse = serde_json::from_str(first.trim()).map_err(|e| EvaluatorError::Malformed(format!("{e}: `{first}`")))?;
    if !(0.0..=1.0).contains(&resp.score) {
        return Err(EvaluatorError::OutOfRange(resp.score));
    }
    Ok(resp.score)
}

/// Runs the evaluator, retrying failed attempts up to `spec.retries` times.
pub fn run_evaluator(spec: &EvaluatorSpec, request: &EvalRequest) -> Result<f64, EvaluatorError> {
    let mut line = serde_json::to_vec(request).expect("request serializes");
    line.push(b'\n');
    let attempts = spec.retries + 1;
    let mut last = None;
    for _ in 0..attempts {
        match run_once(spec, &line) {
            Ok(score) => return Ok(score),
            Err(e) => last = Some(e),
        }
    }
    let last = last.expect("at least one attempt");
    if attempts == 1 {
        Err(last)
    } else {
        Err(EvaluatorError::Exhausted { attempts, last: Box::new(last) })
    }
}

/// Evaluator backed by an external command speaking the JSON-line protocol.
#[derive(Debug, Clone)]
pub struct ProcessEvaluator {
    pub spec: EvaluatorSpec,
    pub validation: Option<PathBuf>,
    pub seed: u64,
}

impl Evaluator for ProcessEvaluator {
    fn evaluate(&mut self, datasets: &[String]) -> Result<f64, EvaluatorError> {
        let req = EvalRequest {
            datasets: datasets.to_vec(),
            train_manifest: None,
            validation: self.validation.clone(),
            seed: self.seed,
        };
        run_evaluator(&self.spec, &req)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    /// Adoption round; 0 is the base set.
    pub round: usize,
    /// Sorted dataset ids.
    pub set: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchState {
    pub base_set: Vec<String>,
    /// Datasets added to the base, in adoption order.
    pub adopted: Vec<String>,
    pub remaining: Vec<String>,
    pub history: Vec<Evaluation>,
    pub best: Option<Evaluation>,
}

#[derive(Debug, Error)]
#[error("search aborted after {} evaluations: {error}", state.history.len())]
pub struct SearchAborted {
    pub state: Box<SearchState>,
    #[source]
    pub error: EvaluatorError,
}

fn sorted(ids: impl IntoIterator<Item = String>) -> Vec<String> {
    ids.into_iter().collect::<BTreeSet<_>>().into_iter().collect()
}

/// Adds one candidate at a time, keeping the best-scoring extension while it
/// strictly improves on the incumbent. Ties go to the smallest id.
pub fn greedy_select(
    base: &[String],
    candidates: &[String],
    evaluator: &mut dyn Evaluator,
) -> Result<SearchState, SearchAborted> {
    let base_set = sorted(base.iter().cloned());
    let mut state = SearchState {
        remaining: candidates.iter().filter(|c| !base_set.contains(c)).cloned().collect::<BTreeSet<_>>().into_iter().collect(),
        base_set: base_set.clone(),
        adopted: Vec::new(),
        history: Vec::new(),
        best: None,
    };
    macro_rules! eval {
        ($set:expr, $round:expr) => {{
            let set: Vec<String> = $set;
            match evaluator.evaluate(&set) {
                Ok(score) => {
                    state.history.push(Evaluation { round: $round, set, score });
                    score
                }
                Err(error) => return Err(SearchAborted { state: Box::new(state), error }),
            }
        }};
    }

    let base_score = eval!(base_set.clone(), 0);
    state.best = state.history.last().cloned();
    let mut incumbent = base_score;
    let mut current = base_set;
    let mut round = 0;
    while !state.remaining.is_empty() {
        round += 1;
        let mut winner: Option<(usize, f64)> = None;
        for (i, c) in state.remaining.clone().iter().enumerate() {
            let score = eval!(sorted(current.iter().cloned().chain([c.clone()])), round);
            if winner.is_none_or(|(_, s)| score > s) {
                winner = Some((i, score));
            }
        }
        let Some((i, score)) = winner else { break };
        if score <= incumbent {
            break;
        }
        let chosen = state.remaining.remove(i);
        current = sorted(current.into_iter().chain([chosen.clone()]));
        state.adopted.push(chosen);
        incumbent = score;
        state.best = Some(Evaluation { round, set: current.clone(), score });
    }
    Ok(state)
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("prediction lists differ in length: {a}, {b} and {gold} gold labels")]
pub struct LengthMismatch {
    pub a: usize,
    pub b: usize,
    pub gold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemar {
    /// A correct, B wrong.
    pub b: u64,
    /// A wrong, B correct.
    pub c: u64,
    pub p_value: f64,
    pub exact: bool,
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Two-sided p-value for `b` and `c` discordant pairs.
pub fn mcnemar_p(b: u64, c: u64) -> (f64, bool) {
    let n = b + c;
    if n == 0 {
        return (1.0, true);
    }
    if n < EXACT_THRESHOLD {
        let tail: u64 = (0..=b.min(c)).map(|k| binomial(n, k)).sum();
        let p = 2.0 * tail as f64 / (1u64 << n) as f64;
        return (p.min(1.0), true);
    }
    let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
    let stat = diff * diff / n as f64;
    (erfc((stat / 2.0).sqrt()), false)
}

pub fn mcnemar_test<T: PartialEq>(preds_a: &[T], preds_b: &[T], gold: &[T]) -> Result<McNemar, LengthMismatch> {
    if preds_a.len() != gold.len() || preds_b.len() != gold.len() || gold.is_empty() {
        return Err(LengthMismatch { a: preds_a.len(), b: preds_b.len(), gold: gold.len() });
    }
    let (mut b, mut c) = (0, 0);
    for ((pa, pb), g) in preds_a.iter().zip(preds_b).zip(gold) {
        match (pa == g, pb == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    let (p_value, exact) = mcnemar_p(b, c);
    Ok(McNemar { b, c, p_value, exact })
}
