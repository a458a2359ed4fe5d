use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde::Serialize;
use serde_json::{json, Value};

use polarq::blend::{emit_manifests, make_blend_plan, DatasetSize};
use polarq::corpus::{ingest_jsonl, pair_adjacent, FormatProfile, Interpretation};
use polarq::labels::{convert_corpus, Scheme, SourceRow};
use polarq::langsim::{load_vectors, rank_pairs, similarity_table};
use polarq::metrics::{
    label_distribution, make_audit_sheet, mean_pairwise_kappa, score, score_audit, split_benchmark, AuditRow,
    AuditSheet, AuditType,
};
use polarq::miner::{export_candidates, export_dataset, write_jsonl_atomic, Miner};
use polarq::packs::{builtin_pack, builtin_pack_source, SUPPORTED_LANGUAGES};
use polarq::rules::{load_rule_pack, RulePack};
use polarq::search::{greedy_select, mcnemar_test, Evaluator, EvaluatorSpec, LookupEvaluator, ProcessEvaluator};

use crate::args::{AuditCommand, AuditKind, Cli, Command, Format, PackCommand};
use crate::io::{read_dataset_labels, read_jsonl, read_labels, read_text, str_field, write_text};
use crate::{Classify, Failure};

type Outcome = Result<(), Failure>;

struct Ctx<'a> {
    cli: &'a Cli,
}

impl Ctx<'_> {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.cli.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.cli.verbose > 0 && !self.cli.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    /// Prints a report to stdout as JSON or as the given text.
    fn emit<T: Serialize>(&self, value: &T, text: impl FnOnce() -> String) {
        match self.cli.format {
            Format::Json => println!("{}", serde_json::to_string_pretty(value).expect("report serializes")),
            Format::Text => print!("{}", text()),
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    let ctx = Ctx { cli };
    match &cli.command {
        Command::Mine(a) => mine(&ctx, a),
        Command::MapLabels(a) => map_labels(&ctx, a),
        Command::BlendPlan(a) => blend_plan(&ctx, a),
        Command::Greedy(a) => greedy(&ctx, a),
        Command::Mcnemar(a) => mcnemar(&ctx, a),
        Command::Score(a) => score_cmd(&ctx, a),
        Command::Split(a) => split(&ctx, a),
        Command::Kappa(a) => kappa(&ctx, a),
        Command::Audit(a) => audit(&ctx, a),
        Command::Stats(a) => stats(&ctx, a),
        Command::Similarity(a) => similarity(&ctx, a),
        Command::Pack(a) => pack(&ctx, a),
    }
}

fn builtin(code: &str) -> Result<RulePack, Failure> {
    builtin_pack(code).usage()
}

/// A built-in code, or else a path to a pack file.
fn resolve_pack(spec: &str) -> Result<RulePack, Failure> {
    if SUPPORTED_LANGUAGES.contains(&spec) || !Path::new(spec).exists() {
        return builtin(spec);
    }
    load_rule_pack(Path::new(spec)).data()
}

fn mine(ctx: &Ctx, a: &crate::args::MineArgs) -> Outcome {
    let pack = resolve_pack(&a.pack)?;
    let profile: FormatProfile = a.profile.parse().usage()?;
    let source = a.source.clone().unwrap_or_else(|| {
        a.corpus.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into())
    });
    let mut turns = Vec::new();
    for item in ingest_jsonl(&a.corpus, profile).data()? {
        turns.push(item.map_err(|e| anyhow!("{}: {e}", a.corpus.display())).data()?);
    }
    let pairs = pair_adjacent(turns, profile.pairing(), &source);
    ctx.debug(format!("{} candidate pairs from {}", pairs.len(), a.corpus.display()));
    let out = Miner::new(&pack).full_trace(a.full_trace).mine(pairs).data()?;
    export_dataset(&out.instances, &a.out_direct).data()?;
    export_candidates(&out.candidates, &a.out_indirect).data()?;
    let report = match ctx.cli.format {
        Format::Json => serde_json::to_string_pretty(&out.report).expect("report serializes") + "\n",
        Format::Text => out.report.to_table(),
    };
    write_text(&a.report, &report).data()?;
    ctx.info(format!(
        "{}: {} pairs, {} yes-no questions, {} direct, {} indirect, {} discarded",
        pack.language,
        out.report.pairs_examined,
        out.report.questions_found,
        out.report.direct_count,
        out.report.indirect_count,
        out.report.discarded_count
    ));
    Ok(())
}

fn map_labels(ctx: &Ctx, a: &crate::args::MapLabelsArgs) -> Outcome {
    let scheme: Scheme = a.scheme.parse().usage()?;
    let mut rows = Vec::new();
    for (line, _, v) in read_jsonl(&a.input).data()? {
        let field = |name: &str| {
            str_field(&v, name)
                .map(str::to_string)
                .ok_or_else(|| anyhow!("{}:{line}: missing string field `{name}`", a.input.display()))
        };
        rows.push(SourceRow {
            question: field(&a.question_field).data()?,
            answer: field(&a.answer_field).data()?,
            context: str_field(&v, &a.context_field).map(str::to_string),
            label: field(&a.label_field).data()?,
        });
    }
    let (out, tally) = convert_corpus(rows, scheme).data()?;
    write_jsonl_atomic(&out, &a.out).data()?;
    ctx.emit(&tally, || {
        let mut s = format!("input\t{}\n", tally.input);
        for (label, n) in &tally.emitted {
            s.push_str(&format!("{label}\t{n}\n"));
        }
        s.push_str(&format!("dropped\t{}\n", tally.dropped));
        s
    });
    Ok(())
}

fn blend_plan(ctx: &Ctx, a: &crate::args::BlendArgs) -> Outcome {
    let parse = |xs: &[String]| xs.iter().map(|s| DatasetSize::parse(s)).collect::<Result<Vec<_>, _>>();
    let gold = parse(&a.gold).usage()?;
    let noisy = parse(&a.noisy).usage()?;
    let plan = make_blend_plan(&gold, &noisy, a.alpha, a.epochs, ctx.cli.seed).usage()?;
    emit_manifests(&plan, &a.out).data()?;
    let sizes: Vec<_> = plan.manifests.iter().map(|m| json!({"epoch": m.epoch, "items": m.item_refs.len()})).collect();
    ctx.emit(&sizes, || {
        let mut s = String::from("epoch\titems\n");
        for m in &plan.manifests {
            s.push_str(&format!("{}\t{}\n", m.epoch, m.item_refs.len()));
        }
        s
    });
    Ok(())
}

fn load_lookup(path: &Path) -> anyhow::Result<LookupEvaluator> {
    let table: BTreeMap<String, f64> =
        serde_json::from_str(&read_text(path)?).with_context(|| format!("{}: expected an object of scores", path.display()))?;
    Ok(LookupEvaluator::new(table.into_iter().map(|(k, v)| {
        let set: Vec<String> = k.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::to_string).collect();
        (set, v)
    })))
}

fn greedy(ctx: &Ctx, a: &crate::args::GreedyArgs) -> Outcome {
    let clean = |xs: &[String]| xs.iter().map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect::<Vec<_>>();
    let base = clean(&a.base);
    let candidates = clean(&a.candidates);
    if candidates.is_empty() {
        return Err(Failure::Usage(anyhow!("--candidates must name at least one dataset")));
    }
    let mut evaluator: Box<dyn Evaluator> = match (&a.lookup, &a.evaluator) {
        (Some(path), _) => Box::new(load_lookup(path).data()?),
        (None, Some(cmd)) => {
            let mut words = shlex::split(cmd).ok_or_else(|| Failure::Usage(anyhow!("cannot split evaluator command `{cmd}`")))?;
            if words.is_empty() {
                return Err(Failure::Usage(anyhow!("empty evaluator command")));
            }
            if !(a.timeout > 0.0 && a.timeout.is_finite()) {
                return Err(Failure::Usage(anyhow!("--timeout must be positive")));
            }
            let program = words.remove(0);
            let mut spec = EvaluatorSpec::new(program, words);
            spec.timeout = Duration::from_secs_f64(a.timeout);
            spec.retries = a.retries;
            Box::new(ProcessEvaluator { spec, validation: a.validation.clone(), seed: ctx.cli.seed })
        }
        (None, None) => return Err(Failure::Usage(anyhow!("either --evaluator or --lookup is required"))),
    };
    let write_report = |value: &Value| -> Outcome {
        write_text(&a.out, &(serde_json::to_string_pretty(value).expect("report serializes") + "\n")).data()
    };
    match greedy_select(&base, &candidates, evaluator.as_mut()) {
        Ok(state) => {
            write_report(&json!({"status": "complete", "state": state}))?;
            let best = state.best.as_ref().expect("completed search has a best set");
            ctx.emit(&state, || {
                let mut s = String::from("round\tset\tscore\n");
                for e in &state.history {
                    s.push_str(&format!("{}\t{{{}}}\t{}\n", e.round, e.set.join(","), e.score));
                }
                s.push_str(&format!("best\t{{{}}}\t{}\n", best.set.join(","), best.score));
                s
            });
            Ok(())
        }
        Err(aborted) => {
            let evaluations = aborted.state.history.len();
            let message = format!("{:#}", anyhow::Error::new(aborted.error));
            write_report(&json!({"status": "aborted", "error": message, "state": aborted.state}))?;
            Err(Failure::Evaluator(anyhow!(
                "search aborted after {evaluations} evaluations: {message}; partial history in {}",
                a.out.display()
            )))
        }
    }
}

fn mcnemar(ctx: &Ctx, a: &crate::args::McnemarArgs) -> Outcome {
    let pa = read_labels(&a.a).data()?;
    let pb = read_labels(&a.b).data()?;
    let gold = read_labels(&a.gold).data()?;
    let r = mcnemar_test(&pa, &pb, &gold).data()?;
    ctx.emit(&r, || {
        let method = if r.exact { "exact binomial" } else { "chi-square with continuity correction" };
        format!("b\t{}\nc\t{}\np\t{}\nmethod\t{method}\n", r.b, r.c, r.p_value)
    });
    Ok(())
}

fn score_cmd(ctx: &Ctx, a: &crate::args::ScoreArgs) -> Outcome {
    let preds = read_labels(&a.pred).data()?;
    let gold = read_labels(&a.gold).data()?;
    let r = score::<f64>(&preds, &gold).data()?;
    ctx.emit(&r, || {
        let mut s = String::from("label\tprecision\trecall\tf1\tsupport\n");
        for (label, m) in &r.per_label {
            s.push_str(&format!("{label}\t{:.4}\t{:.4}\t{:.4}\t{}\n", m.precision, m.recall, m.f1, m.support));
        }
        s.push_str(&format!("macro-f1\t{:.4}\naccuracy\t{:.4}\nn\t{}\n", r.macro_f1, r.accuracy, r.n));
        s
    });
    Ok(())
}

fn split(ctx: &Ctx, a: &crate::args::SplitArgs) -> Outcome {
    let lines: Vec<String> = read_jsonl(&a.input).data()?.into_iter().map(|(_, raw, _)| raw).collect();
    let (val, test) = split_benchmark(&lines, ctx.cli.seed).data()?;
    let join = |xs: &[String]| xs.iter().map(|l| format!("{l}\n")).collect::<String>();
    write_text(&a.validation, &join(&val)).data()?;
    write_text(&a.test, &join(&test)).data()?;
    ctx.emit(&json!({"validation": val.len(), "test": test.len()}), || {
        format!("validation\t{}\ntest\t{}\n", val.len(), test.len())
    });
    Ok(())
}

fn kappa(ctx: &Ctx, a: &crate::args::KappaArgs) -> Outcome {
    let anns = a.annotators.iter().map(|p| read_labels(p)).collect::<Result<Vec<_>, _>>().data()?;
    let k = mean_pairwise_kappa::<f64>(&anns).data()?;
    let pairs = anns.len() * (anns.len() - 1) / 2;
    ctx.emit(&json!({"kappa": k, "annotators": anns.len(), "pairs": pairs}), || format!("kappa\t{k}\n"));
    Ok(())
}

fn audit_type(kind: AuditKind) -> AuditType {
    match kind {
        AuditKind::QuestionDetection => AuditType::QuestionDetection,
        AuditKind::Interpretation => AuditType::Interpretation,
    }
}

fn audit(ctx: &Ctx, a: &AuditCommand) -> Outcome {
    match a {
        AuditCommand::Sample { input, n, audit, out } => {
            let audit = audit_type(*audit);
            let mut items = Vec::new();
            for (line, _, v) in read_jsonl(input).data()? {
                let field = |name: &str| {
                    str_field(&v, name)
                        .map(str::to_string)
                        .ok_or_else(|| anyhow!("{}:{line}: missing string field `{name}`", input.display()))
                };
                let machine = match audit {
                    AuditType::QuestionDetection => "yes-no".to_string(),
                    AuditType::Interpretation => field("label").data()?,
                };
                items.push(AuditRow {
                    id: field("id").data()?,
                    question: field("question").data()?,
                    answer: field("answer").data()?,
                    machine,
                    human: None,
                });
            }
            let sheet = make_audit_sheet(&items, *n, ctx.cli.seed, audit).data()?;
            sheet.write_tsv(out).data()?;
            ctx.info(format!("wrote {} rows to {}", sheet.rows.len(), out.display()));
            Ok(())
        }
        AuditCommand::Score { sheet, audit } => {
            let sheet = AuditSheet::read_tsv(sheet, audit_type(*audit)).data()?;
            let s = score_audit::<f64>(&sheet).data()?;
            ctx.emit(&s, || {
                let mut t = format!("n\t{}\nagreements\t{}\nprecision\t{}\n", s.n, s.agreements, s.precision);
                for (label, share) in &s.per_class {
                    t.push_str(&format!("precision[{label}]\t{}\t(n={})\n", share.fraction, share.count));
                }
                t
            });
            Ok(())
        }
    }
}

fn stats(ctx: &Ctx, a: &crate::args::StatsArgs) -> Outcome {
    let labels: Vec<Interpretation> = read_dataset_labels(&a.input).data()?;
    let d = label_distribution::<f64>(&labels);
    ctx.emit(&d, || {
        let mut s = String::from("label\tcount\tfraction\n");
        for (label, share) in &d {
            s.push_str(&format!("{label}\t{}\t{:.4}\n", share.count, share.fraction));
        }
        s
    });
    Ok(())
}

fn similarity(ctx: &Ctx, a: &crate::args::SimilarityArgs) -> Outcome {
    let vectors = load_vectors::<f64>(&a.vectors).data()?;
    let ranked = rank_pairs(&vectors, &a.eval, &a.sup).data()?;
    let text = match ctx.cli.format {
        Format::Json => serde_json::to_string_pretty(&ranked).expect("ranking serializes") + "\n",
        Format::Text => similarity_table(&ranked),
    };
    match &a.out {
        Some(path) => write_text(path, &text).data(),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn pack(ctx: &Ctx, a: &PackCommand) -> Outcome {
    match a {
        PackCommand::Show { language, file } => {
            let pack = match (language, file) {
                (_, Some(path)) => load_rule_pack(path).data()?,
                (Some(code), None) => builtin(code)?,
                (None, None) => return Err(Failure::Usage(anyhow!("name a pack or pass --file"))),
            };
            ctx.emit(&pack, || pack.listing());
            Ok(())
        }
        PackCommand::Export { language, out } => {
            let src = builtin_pack_source(language).usage()?;
            write_text(out, src).data()?;
            ctx.info(format!("wrote {}", out.display()));
            Ok(())
        }
    }
}
