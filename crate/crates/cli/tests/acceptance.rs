//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use polarq::blend::{make_blend_plan, DatasetSize};
use polarq::corpus::{write_turns_jsonl, Interpretation, QAPair, Turn};
use polarq::labels::{map_label, Mapped, Scheme};
use polarq::langsim::{cosine_similarity, LangVector};
use polarq::metrics::{score, score_audit, split_benchmark, weighted_kappa, AuditRow, AuditSheet, AuditType};
use polarq::miner::{export_dataset, Miner, PairDecision};
use polarq::packs::{builtin_pack, fixture_corpus, Expected, SUPPORTED_LANGUAGES};
use polarq::rules::{eval_question_rules, AnswerClass};
use polarq::search::{greedy_select, mcnemar_p, mcnemar_test, LookupEvaluator, EXACT_THRESHOLD};

use Interpretation::{Middle as M, No as N, Yes as Y};

type Check = Result<String, String>;

type Criterion = (&'static str, Box<dyn Fn() -> Check>);
type MappingTable = [(Scheme, &'static [(&'static str, Option<Interpretation>)]); 3];

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn c1_rule_pack_fidelity() -> Check {
    let start = Instant::now();
    let mut total = 0;
    for code in SUPPORTED_LANGUAGES {
        let pack = builtin_pack(code).map_err(|e| e.to_string())?;
        let miner = Miner::new(&pack);
        let fixtures = fixture_corpus(code).map_err(|e| e.to_string())?;
        ensure!(fixtures.len() >= 40, "{code}: only {} fixtures", fixtures.len());
        for f in &fixtures {
            let got = match miner.decide(&f.pair).map_err(|e| e.to_string())? {
                PairDecision::NotQuestion { .. } => Expected::NotQuestion,
                PairDecision::Answered { class: AnswerClass::Direct { label, .. }, .. } => Expected::Direct(label),
                PairDecision::Answered { class: AnswerClass::Indirect { .. }, .. } => Expected::Indirect,
                PairDecision::Answered { class: AnswerClass::Discarded { reason, .. }, .. } => Expected::Discarded(reason),
            };
            ensure!(got == f.expected, "{code}: `{}` / `{}` gave {got:?}, expected {:?}", f.pair.question.text, f.pair.answer.text, f.expected);
        }
        total += fixtures.len();
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{total}/{total} fixtures across 5 packs match the hand labels; {:.3} s (limit 1 s)", elapsed.as_secs_f64()))
}

fn c2_label_mapping_totality() -> Check {
    let expected: MappingTable = [
        (
            Scheme::CircaRelaxed,
            &[
                ("Yes", Some(Y)),
                ("No", Some(N)),
                ("Yes, subject to some conditions", Some(Y)),
                ("In the middle, neither yes nor no", Some(M)),
                ("Other", None),
                ("N/A", None),
            ],
        ),
        (
            Scheme::SwdaIa,
            &[("Yes", Some(Y)), ("Probably Yes", Some(Y)), ("Middle", Some(M)), ("Probably No", Some(N)), ("No", Some(N))],
        ),
        (
            Scheme::FriendsQia,
            &[
                ("Yes", Some(Y)),
                ("No", Some(N)),
                ("Yes, subject to some conditions", Some(Y)),
                ("Neither yes nor no", Some(M)),
                ("Other", None),
                ("N/A", None),
            ],
        ),
    ];
    let mut sizes = Vec::new();
    for (scheme, lines) in expected {
        ensure!(scheme.table().len() == lines.len(), "{scheme}: table has {} entries, expected {}", scheme.table().len(), lines.len());
        for (label, want) in lines {
            let want = want.map_or(Mapped::Discard, Mapped::Label);
            let got = map_label(scheme, label).map_err(|e| e.to_string())?;
            ensure!(got == want, "{scheme}: `{label}` mapped to {got:?}");
        }
        for bad in ["yes", "Maybe", "", "Probably", "neither yes nor no"] {
            ensure!(map_label(scheme, bad).is_err(), "{scheme}: `{bad}` accepted");
        }
        sizes.push(lines.len().to_string());
    }
    Ok(format!("all mapping lines reproduced exactly ({} entries), unknown labels rejected", sizes.join("/")))
}

fn synthetic_tr_pair(rng: &mut ChaCha8Rng, i: usize, yes: &[String], no: &[String]) -> QAPair {
    const FILLER: [&str; 10] = ["bu", "kitap", "yarın", "güzel", "açık", "sen", "okul", "çok", "bugün", "kargo"];
    const PARTICLES: [&str; 5] = ["mi", "mı", "musun", "misiniz", "mü"];
    const WH: [&str; 4] = ["ne", "neden", "kim", "hangi"];
    let pick = |pool: &[&str], rng: &mut ChaCha8Rng| pool[rng.gen_range(0..pool.len())].to_string();
    let mut q: Vec<String> = (0..rng.gen_range(1..8)).map(|_| pick(&FILLER, rng)).collect();
    if rng.gen_bool(0.7) {
        q.push(pick(&PARTICLES, rng));
    }
    if rng.gen_bool(0.2) {
        q.insert(0, pick(&WH, rng));
    }
    let mut a: Vec<String> = (0..rng.gen_range(1..6)).map(|_| pick(&FILLER, rng)).collect();
    if rng.gen_bool(0.4) {
        a.insert(0, yes[rng.gen_range(0..yes.len())].clone());
    }
    if rng.gen_bool(0.3) {
        a.push(no[rng.gen_range(0..no.len())].clone());
    }
    let qt = Turn::from_text(format!("q{i}"), &format!("{}?", q.join(" ")), "tr").unwrap();
    let mut at = Turn::from_text(format!("a{i}"), &a.join(" "), "tr").unwrap().with_reply_to(format!("q{i}"));
    at.meta.is_accepted = Some(rng.gen_bool(0.85));
    QAPair::new(qt, at, "synthetic").unwrap()
}

fn c3_mining_partition() -> Check {
    let pack = builtin_pack("tr").map_err(|e| e.to_string())?;
    let yes: Vec<String> = pack.yes_keywords.iter().map(|k| k.surface.clone()).collect();
    let no: Vec<String> = pack.no_keywords.iter().map(|k| k.surface.clone()).collect();
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut summary = String::new();
    for seed in 0..3u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<QAPair> = (0..10_000).map(|i| synthetic_tr_pair(&mut rng, i, &yes, &no)).collect();
        let questions = pairs.iter().filter(|p| eval_question_rules(&p.question, &pack).unwrap().0).count() as u64;
        let out = Miner::new(&pack).mine(pairs).map_err(|e| e.to_string())?;
        let r = &out.report;
        ensure!(r.pairs_examined == 10_000, "pairs_examined {}", r.pairs_examined);
        ensure!(r.answers_examined == questions, "answers examined {} vs recount {questions}", r.answers_examined);
        ensure!(
            r.direct_count + r.indirect_count + r.discarded_count == r.answers_examined,
            "partition broken: {} + {} + {} != {}",
            r.direct_count,
            r.indirect_count,
            r.discarded_count,
            r.answers_examined
        );
        ensure!(r.direct_count > 0 && r.indirect_count > 0 && r.discarded_count > 0, "degenerate corpus: {r:?}");
        let path = dir.path().join(format!("direct-{seed}.jsonl"));
        export_dataset(&out.instances, &path).map_err(|e| e.to_string())?;
        let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let labels: Vec<String> = text
            .lines()
            .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["label"].as_str().unwrap().to_string())
            .collect();
        let yes_lines = labels.iter().filter(|l| *l == "Yes").count();
        ensure!(labels.len() as u64 == r.direct_count, "exported {} lines, direct_count {}", labels.len(), r.direct_count);
        let recount = yes_lines as f64 / labels.len() as f64;
        ensure!(recount == r.yes_ratio, "yes_ratio {} vs recount {recount}", r.yes_ratio);
        if seed == 0 {
            summary = format!(
                "seed 0: {} answers = {} direct + {} indirect + {} discarded, yes_ratio {:.4}",
                r.answers_examined, r.direct_count, r.indirect_count, r.discarded_count, r.yes_ratio
            );
        }
    }
    Ok(format!("3 corpora x 10k pairs partition exactly, yes_ratio equals export recount (exact); {summary}"))
}

/// `n * (p/4)^(e-1)` rounded half to even, in integer arithmetic.
fn oracle_count(n: u64, quarter: u64, epoch: u32) -> u64 {
    let num = n * quarter.pow(epoch - 1);
    let den = 4u64.pow(epoch - 1);
    let (q, r) = (num / den, num % den);
    match (2 * r).cmp(&den) {
        std::cmp::Ordering::Greater => q + 1,
        std::cmp::Ordering::Equal => q + (q % 2),
        std::cmp::Ordering::Less => q,
    }
}

fn c4_blend_decay() -> Check {
    let mut grids = 0;
    for quarter in [0u64, 1, 2, 4] {
        let alpha = quarter as f64 / 4.0;
        for n in [1usize, 10, 1000] {
            for epochs in 1..=6usize {
                let plan = make_blend_plan(&[], &[DatasetSize::new("noisy", n)], alpha, epochs, 0).map_err(|e| e.to_string())?;
                for m in &plan.manifests {
                    let want = oracle_count(n as u64, quarter, m.epoch as u32) as usize;
                    ensure!(m.item_refs.len() == want, "alpha {alpha} N {n} epoch {}: {} != {want}", m.epoch, m.item_refs.len());
                }
                grids += 1;
            }
        }
    }
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let gold = [DatasetSize::new("circa", rng.gen_range(0..50)), DatasetSize::new("swda", rng.gen_range(0..50))];
        let noisy = [DatasetSize::new("tr", rng.gen_range(0..200)), DatasetSize::new("zh", rng.gen_range(0..200))];
        let alpha = [0.0, 0.25, 0.5, 1.0][rng.gen_range(0..4)];
        let plan = make_blend_plan(&gold, &noisy, alpha, rng.gen_range(1..=6), seed).map_err(|e| e.to_string())?;
        let gold_refs = |m: &polarq::blend::EpochManifest| {
            m.item_refs.iter().filter(|r| r.dataset == "circa" || r.dataset == "swda").cloned().collect::<BTreeSet<_>>()
        };
        let g0 = gold_refs(&plan.manifests[0]);
        ensure!(g0.len() == gold[0].size + gold[1].size, "seed {seed}: gold incomplete");
        for w in plan.manifests.windows(2) {
            ensure!(gold_refs(&w[1]) == g0, "seed {seed}: gold changed at epoch {}", w[1].epoch);
            for id in ["tr", "zh"] {
                let prev: BTreeSet<_> = w[0].refs_for(id).collect();
                let next: Vec<_> = w[1].refs_for(id).collect();
                ensure!(next.iter().all(|r| prev.contains(r)), "seed {seed}: {id} not nested at epoch {}", w[1].epoch);
                ensure!(next.iter().collect::<BTreeSet<_>>().len() == next.len(), "seed {seed}: duplicate refs");
            }
        }
    }
    Ok(format!("{grids} (alpha, N, epochs) grids match integer round-half-even oracle exactly; nested + gold-invariant for 100 seeds"))
}

fn c5_greedy_trace() -> Check {
    let mut ev = LookupEvaluator::new([(vec![], 0.50), (vec!["zh"], 0.60), (vec!["tr"], 0.55), (vec!["zh", "tr"], 0.58)]);
    let state = greedy_select(&[], &["zh".to_string(), "tr".to_string()], &mut ev).map_err(|e| e.to_string())?;
    ensure!(state.adopted == ["zh"], "adopted {:?}", state.adopted);
    let best = state.best.as_ref().ok_or("no best set")?;
    ensure!(best.set == ["zh"] && best.score == 0.60, "best {best:?}");
    ensure!(state.history.len() == 4, "history has {} evaluations", state.history.len());
    ensure!(ev.calls() == 4, "evaluator called {} times", ev.calls());
    let per_round: BTreeMap<usize, usize> = state.history.iter().fold(BTreeMap::new(), |mut m, e| {
        *m.entry(e.round).or_default() += 1;
        m
    });
    let breakdown: Vec<String> = per_round.iter().map(|(r, n)| format!("round {r}: {n}")).collect();
    Ok(format!("adopts {{zh}} at 0.60 and stops; exactly 4 evaluations ({})", breakdown.join(", ")))
}

fn c6_mcnemar_oracle() -> Check {
    let mut row = vec![1u64];
    let mut worst = 0.0f64;
    let mut cases = 0;
    for n in 1..EXACT_THRESHOLD {
        let mut next = vec![1u64; row.len() + 1];
        for i in 1..row.len() {
            next[i] = row[i - 1] + row[i];
        }
        row = next;
        let total: u64 = row.iter().sum();
        for b in 0..=n {
            let c = n - b;
            let oracle = (2.0 * row[..=(b.min(c) as usize)].iter().sum::<u64>() as f64 / total as f64).min(1.0);
            let (p, exact) = mcnemar_p(b, c);
            ensure!(exact, "b={b} c={c} not on the exact branch");
            worst = worst.max((p - oracle).abs());
            cases += 1;
        }
    }
    ensure!(worst <= 1e-12, "max deviation {worst:e}");
    ensure!(mcnemar_p(0, 0).0 == 1.0, "b=c=0");
    let gold = [1u8; 10];
    let a = [1, 1, 0, 0, 0, 0, 0, 0, 0, 0];
    let b = [0, 0, 1, 1, 1, 1, 1, 1, 1, 1];
    let r = mcnemar_test(&a, &b, &gold).map_err(|e| e.to_string())?;
    ensure!((r.b, r.c) == (2, 8) && r.p_value == 0.109375, "b=2,c=8 gave {r:?}");
    Ok(format!("{cases} (b,c) cases with b+c<=24 within {worst:e} (tol 1e-12); b=2,c=8 -> p=0.109375 exactly"))
}

/// Weighted kappa evaluated straight from the definition.
fn kappa_oracle(a: &[Interpretation], b: &[Interpretation]) -> f64 {
    let n = a.len() as f64;
    let mut o = [[0.0f64; 3]; 3];
    for (x, y) in a.iter().zip(b) {
        o[x.ordinal()][y.ordinal()] += 1.0 / n;
    }
    let row: Vec<f64> = (0..3).map(|i| o[i].iter().sum()).collect();
    let col: Vec<f64> = (0..3).map(|j| (0..3).map(|i| o[i][j]).sum()).collect();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..3 {
        for j in 0..3 {
            let w = (i as f64 - j as f64).abs() / 2.0;
            num += w * o[i][j];
            den += w * row[i] * col[j];
        }
    }
    1.0 - num / den
}

fn c7_weighted_kappa() -> Check {
    let same = [Y, N, M, Y, N];
    let k_same = weighted_kappa::<f64>(&same, &same).map_err(|e| e.to_string())?;
    ensure!(k_same == 1.0, "identical annotations gave {k_same}");
    let (a, b) = ([Y, Y, M, N], [Y, M, M, N]);
    let k4 = weighted_kappa::<f64>(&a, &b).map_err(|e| e.to_string())?;
    let oracle = kappa_oracle(&a, &b);
    ensure!((k4 - oracle).abs() <= 1e-9, "4-item kappa {k4} vs formula {oracle}");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let draw = |rng: &mut ChaCha8Rng| Interpretation::ALL[rng.gen_range(0..3)];
    let ra: Vec<_> = (0..10_000).map(|_| draw(&mut rng)).collect();
    let rb: Vec<_> = (0..10_000).map(|_| draw(&mut rng)).collect();
    let k_rand = weighted_kappa::<f64>(&ra, &rb).map_err(|e| e.to_string())?;
    ensure!(k_rand.abs() < 0.1, "random kappa {k_rand}");
    Ok(format!("identical -> 1.0 exactly; 4-item example {k4:.9} = formula {oracle:.9} (tol 1e-9); random 10k -> {k_rand:+.4} (|k| < 0.1)"))
}

fn c8_scorer() -> Check {
    let gold = [Y, Y, N, N, M, M];
    let preds = [Y, N, N, M, M, Y];
    let r = score::<f64>(&preds, &gold).map_err(|e| e.to_string())?;
    ensure!((r.macro_f1 - 0.5).abs() <= 1e-9, "macro-F1 {}", r.macro_f1);
    let perfect = score::<f64>(&gold, &gold).map_err(|e| e.to_string())?;
    ensure!(perfect.macro_f1 == 1.0, "perfect macro-F1 {}", perfect.macro_f1);
    Ok(format!("6-item fixture macro-F1 = {} (tol 1e-9); perfect predictions -> 1.0 exactly", r.macro_f1))
}

fn c9_split_sizes() -> Check {
    for (n, val, test) in [(300usize, 60usize, 240usize), (600, 120, 480)] {
        let items: Vec<usize> = (0..n).collect();
        let (v, t) = split_benchmark(&items, 0).map_err(|e| e.to_string())?;
        ensure!((v.len(), t.len()) == (val, test), "n={n}: {}/{}", v.len(), t.len());
        ensure!(split_benchmark(&items, 0).map_err(|e| e.to_string())? == (v, t), "n={n}: not deterministic");
    }
    for seed in 0..100u64 {
        let n = 5 + (seed as usize * 37) % 700;
        let items: Vec<usize> = (0..n).collect();
        let (v, t) = split_benchmark(&items, seed).map_err(|e| e.to_string())?;
        let vs: BTreeSet<_> = v.iter().collect();
        let ts: BTreeSet<_> = t.iter().collect();
        ensure!(vs.is_disjoint(&ts), "seed {seed}: overlap");
        ensure!(vs.len() + ts.len() == n && v.len() + t.len() == n, "seed {seed}: not exhaustive");
    }
    Ok("n=300 -> 60/240, n=600 -> 120/480, deterministic; disjoint and exhaustive for 100 seeds".into())
}

fn c10_audit_arithmetic() -> Check {
    let rows = (0..200)
        .map(|i| AuditRow {
            id: format!("hi-{i}"),
            question: "q".into(),
            answer: "a".into(),
            machine: if i % 2 == 0 { "Yes" } else { "No" }.into(),
            human: Some(if i < 130 { if i % 2 == 0 { "Yes" } else { "No" } } else if i % 2 == 0 { "No" } else { "Middle" }.into()),
        })
        .collect();
    let sheet = AuditSheet { audit: AuditType::Interpretation, rows };
    let s = score_audit::<f64>(&sheet).map_err(|e| e.to_string())?;
    ensure!(s.agreements == 130 && s.precision == 0.65, "precision {} ({} agreements)", s.precision, s.agreements);
    Ok("200-row interpretation sheet with 130 matches -> precision 0.65 exactly".into())
}

fn c11_cosine() -> Check {
    let v = |xs: &[Option<f64>]| LangVector::from_values("x", xs);
    let a = v(&[Some(0.3), Some(0.7), Some(1.0), Some(0.0)]);
    let id = cosine_similarity(&a, &a).map_err(|e| e.to_string())?;
    ensure!(id == 1.0, "identity gave {id}");
    let orth = cosine_similarity(&v(&[Some(1.0), Some(0.0)]), &v(&[Some(0.0), Some(1.0)])).map_err(|e| e.to_string())?;
    ensure!(orth == 0.0, "orthogonal gave {orth}");
    let masked = cosine_similarity(&v(&[Some(1.0), Some(1.0), None]), &v(&[Some(1.0), Some(0.0), Some(1.0)])).map_err(|e| e.to_string())?;
    ensure!((masked - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12, "masked gave {masked}");
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    while checked < 1000 {
        let len = rng.gen_range(1..12);
        let gen = |rng: &mut ChaCha8Rng| -> Vec<Option<f64>> {
            (0..len).map(|_| if rng.gen_bool(0.2) { None } else { Some(rng.gen::<f64>()) }).collect()
        };
        let (x, y) = (v(&gen(&mut rng)), v(&gen(&mut rng)));
        let (Ok(xy), Ok(yx)) = (cosine_similarity(&x, &y), cosine_similarity(&y, &x)) else { continue };
        let k = rng.gen_range(0.01..100.0);
        let scaled = cosine_similarity(&x.scaled(k), &y).map_err(|e| e.to_string())?;
        worst = worst.max((xy - yx).abs()).max((xy - scaled).abs());
        checked += 1;
    }
    ensure!(worst <= 1e-12, "symmetry/scale deviation {worst:e}");
    Ok(format!("identity 1.0 and orthogonal 0.0 exactly; masked {masked:.8} (tol 1e-12); 1000 random pairs symmetric and scale-invariant within {worst:e} (tol 1e-12)"))
}

fn c12_end_to_end(suite_start: Instant) -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus = dir.path().join("zh.jsonl");
    let fixtures = fixture_corpus("zh").map_err(|e| e.to_string())?;
    let turns: Vec<&Turn> = fixtures.iter().flat_map(|f| [&f.pair.question, &f.pair.answer]).collect();
    let mut buf = Vec::new();
    write_turns_jsonl(turns, &mut buf).map_err(|e| e.to_string())?;
    fs::write(&corpus, buf).map_err(|e| e.to_string())?;
    let run = |tag: &str| -> Result<Vec<Vec<u8>>, String> {
        let out = |name: &str| dir.path().join(format!("{tag}-{name}"));
        let status = Command::new(env!("CARGO_BIN_EXE_polarq"))
            .args(["--quiet", "mine", "--pack", "zh", "--profile", "threaded-replies", "--corpus"])
            .arg(&corpus)
            .arg("--out-direct")
            .arg(out("direct.jsonl"))
            .arg("--out-indirect")
            .arg(out("indirect.jsonl"))
            .arg("--report")
            .arg(out("report.txt"))
            .status()
            .map_err(|e| e.to_string())?;
        ensure!(status.success(), "mine exited with {status}");
        ["direct.jsonl", "indirect.jsonl", "report.txt"].iter().map(|n| fs::read(out(n)).map_err(|e| e.to_string())).collect()
    };
    let first = run("a")?;
    let second = run("b")?;
    ensure!(first == second, "outputs differ between runs");
    ensure!(!first[0].is_empty() && !first[1].is_empty(), "empty outputs");
    let elapsed = suite_start.elapsed();
    ensure!(elapsed < Duration::from_secs(60), "suite took {elapsed:?}");
    let lines = |b: &[u8]| b.iter().filter(|&&c| c == b'\n').count();
    Ok(format!(
        "`mine` twice on the zh fixture corpus: 3 byte-identical files ({} direct, {} indirect lines); suite {:.2} s (limit 60 s)",
        lines(&first[0]),
        lines(&first[1]),
        elapsed.as_secs_f64()
    ))
}

fn main() {
    let start = Instant::now();
    let criteria: Vec<Criterion> = vec![
        ("rule-pack fidelity", Box::new(c1_rule_pack_fidelity)),
        ("label-mapping totality", Box::new(c2_label_mapping_totality)),
        ("mining partition", Box::new(c3_mining_partition)),
        ("blend decay", Box::new(c4_blend_decay)),
        ("greedy trace", Box::new(c5_greedy_trace)),
        ("McNemar oracle", Box::new(c6_mcnemar_oracle)),
        ("weighted kappa", Box::new(c7_weighted_kappa)),
        ("scorer", Box::new(c8_scorer)),
        ("split sizes", Box::new(c9_split_sizes)),
        ("audit arithmetic", Box::new(c10_audit_arithmetic)),
        ("cosine", Box::new(c11_cosine)),
        ("end-to-end determinism", Box::new(move || c12_end_to_end(start))),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
