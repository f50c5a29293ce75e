use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use laysum_core::bridge::{BridgeClient, BRIDGE_URL_ENV};
use laysum_core::config::ConfigFile;
use laysum_core::corpus::{load_corpus, load_passages, Document, Split};
use laysum_core::pipeline::{self, evaluate, with_jobs, EvalPair, EvalReport, PipelineResult};
use laysum_core::ppo::{
    build_candidate_set, feature_reward, policy_distribution, train, CandidateSet, PolicyParams,
};
use laysum_core::retrieval::{
    build_index, hit_rate_eval, load_eval_pairs, load_index, rerank, save_index, HitRateTable,
    LexicalOverlapScorer, OracleScorer, RankedHit, RerankScorer, RetrievalError,
};
use laysum_core::reward::{
    composite_reward, eq2_reward, normalized_readability, readability_component, RewardBreakdown,
    RewardMetric, RewardMode,
};
use laysum_core::rouge::{rouge_texts, RougeScores};
use laysum_core::services::{MetricProvider, Services};
use laysum_core::textstats::{compute_stats, FamiliarWords, ReadabilityReport, TextStats};
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::error::CliError;

/// What a subcommand prints: the JSON value for `--json`, text otherwise.
pub struct Output {
    pub json: String,
    pub text: String,
}

impl Output {
    fn new<T: Serialize>(value: &T, text: String) -> Self {
        let mut json = serde_json::to_string_pretty(value).expect("output serializes");
        json.push('\n');
        Output { json, text }
    }
}

fn enum_name<T: Serialize>(value: &T) -> String {
    match serde_json::to_value(value) {
        Ok(serde_json::Value::String(s)) => s,
        other => format!("{other:?}"),
    }
}

/// Writes the effective settings of a run to stderr.
fn echo(command: &str, settings: &[(&str, String)]) {
    let line: Vec<String> = settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
    eprintln!("laysum {command}: {}", line.join(" "));
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    Ok(match path {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    })
}

fn config_source(path: Option<&Path>) -> String {
    path.map_or_else(|| "defaults".to_string(), |p| p.display().to_string())
}

enum Familiar {
    Bundled,
    Loaded(FamiliarWords),
}

impl Familiar {
    fn open(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            None => Ok(Familiar::Bundled),
            Some(p) => FamiliarWords::load(p)
                .map(Familiar::Loaded)
                .map_err(|source| CliError::Io {
                    path: p.display().to_string(),
                    source,
                }),
        }
    }

    fn words(&self) -> &FamiliarWords {
        match self {
            Familiar::Bundled => FamiliarWords::bundled(),
            Familiar::Loaded(w) => w,
        }
    }
}

fn bridge(mock: bool) -> Option<BridgeClient> {
    if mock {
        None
    } else {
        BridgeClient::from_env()
    }
}

pub fn dispatch(command: Command) -> Result<Output, CliError> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Index(a) => index(a),
        Command::Retrieve(a) => retrieve(a),
        Command::Readability(a) => readability(a),
        Command::Rouge(a) => rouge(a),
        Command::Reward(a) => reward(a),
        Command::PpoTrain(a) => ppo_train(a),
        Command::Run(a) => run(a),
        Command::Evaluate(a) => evaluate_pairs(a),
        Command::HitRate(a) => hit_rate(a),
    }
}

#[derive(Serialize)]
struct SplitOut {
    train: usize,
    validation: usize,
    test: usize,
}

#[derive(Serialize)]
struct IngestOut {
    path: String,
    kind: &'static str,
    total: usize,
    splits: Option<SplitOut>,
}

fn ingest(a: IngestArgs) -> Result<Output, CliError> {
    let path = a.input.display().to_string();
    let kind = match a.kind {
        InputKind::Corpus => "corpus",
        InputKind::Passages => "passages",
    };
    echo("ingest", &[("input", path.clone()), ("kind", kind.into())]);
    let out = match a.kind {
        InputKind::Corpus => {
            let corpus = load_corpus(&a.input)?;
            let c = corpus.counts();
            IngestOut {
                path,
                kind,
                total: corpus.len(),
                splits: Some(SplitOut {
                    train: c.get(Split::Train),
                    validation: c.get(Split::Validation),
                    test: c.get(Split::Test),
                }),
            }
        }
        InputKind::Passages => IngestOut {
            path,
            kind,
            total: load_passages(&a.input)?.len(),
            splits: None,
        },
    };
    let mut text = format!("{}: {} {} records\n", out.path, out.total, out.kind);
    if let Some(s) = &out.splits {
        let _ = writeln!(
            text,
            "train {} / validation {} / test {}",
            s.train, s.validation, s.test
        );
    }
    Ok(Output::new(&out, text))
}

#[derive(Serialize)]
struct Bm25Out {
    k1: f64,
    b: f64,
}

#[derive(Serialize)]
struct IndexOut {
    out: String,
    passages: usize,
    terms: usize,
    avg_doc_length: f64,
    bm25: Bm25Out,
}

fn index(a: IndexArgs) -> Result<Output, CliError> {
    let cfg = load_config(a.config.as_deref())?;
    let mut params = cfg.bm25;
    if let Some(k1) = a.k1 {
        params.k1 = k1;
    }
    if let Some(b) = a.b {
        params.b = b;
    }
    echo(
        "index",
        &[
            ("passages", a.passages.display().to_string()),
            ("out", a.out.display().to_string()),
            ("config", config_source(a.config.as_deref())),
            ("k1", params.k1.to_string()),
            ("b", params.b.to_string()),
        ],
    );
    let passages = load_passages(&a.passages)?;
    let idx = build_index(&passages, params)?;
    save_index(&idx, &a.out)?;
    let out = IndexOut {
        out: a.out.display().to_string(),
        passages: idx.len(),
        terms: idx.term_count(),
        avg_doc_length: idx.avg_doc_length(),
        bm25: Bm25Out {
            k1: params.k1,
            b: params.b,
        },
    };
    let text = format!(
        "indexed {} passages ({} terms, mean length {:.2}) into {}\n",
        out.passages, out.terms, out.avg_doc_length, out.out
    );
    Ok(Output::new(&out, text))
}

#[derive(Serialize)]
struct HitOut {
    rank: usize,
    passage_id: String,
    score: f64,
    text: String,
}

#[derive(Serialize)]
struct RetrieveOut {
    query: String,
    topk: usize,
    rerank: Option<usize>,
    scorer: Option<String>,
    retrieved: usize,
    hits: Vec<HitOut>,
}

fn retrieve(a: RetrieveArgs) -> Result<Output, CliError> {
    let client = bridge(a.mock);
    let scorer: Box<dyn RerankScorer> = match client {
        Some(c) => Box::new(c),
        None => Box::new(LexicalOverlapScorer),
    };
    echo(
        "retrieve",
        &[
            ("index", a.index.display().to_string()),
            ("topk", a.topk.to_string()),
            ("rerank", a.rerank.map_or("none".into(), |m| m.to_string())),
            ("scorer", scorer.name().to_string()),
        ],
    );
    let idx = load_index(&a.index)?;
    let retrieved = idx.search(&a.query, a.topk)?;
    let hits = match a.rerank {
        Some(m) if m > a.topk => {
            return Err(RetrievalError::InvalidParam(format!(
                "--rerank {m} exceeds --topk {}",
                a.topk
            ))
            .into())
        }
        Some(m) => rerank(
            &idx,
            &retrieved,
            &a.query,
            scorer.as_ref(),
            m.min(retrieved.len()),
        )?,
        None => retrieved.clone(),
    };
    let to_out = |h: &RankedHit| HitOut {
        rank: h.rank,
        passage_id: h.passage_id.clone(),
        score: h.score,
        text: idx.passage_text(h.ordinal).to_string(),
    };
    let out = RetrieveOut {
        query: a.query.clone(),
        topk: a.topk,
        rerank: a.rerank,
        scorer: a.rerank.map(|_| scorer.name().to_string()),
        retrieved: retrieved.len(),
        hits: hits.iter().map(to_out).collect(),
    };
    let mut text = String::new();
    for h in &out.hits {
        let _ = writeln!(
            text,
            "{}\t{}\t{:.6}\t{}",
            h.rank, h.passage_id, h.score, h.text
        );
    }
    Ok(Output::new(&out, text))
}

#[derive(Serialize)]
struct ReadabilityOut {
    #[serde(flatten)]
    report: ReadabilityReport,
    stats: TextStats,
}

fn readability(a: ReadabilityArgs) -> Result<Output, CliError> {
    echo(
        "readability",
        &[
            ("text", a.text.display().to_string()),
            (
                "familiar",
                a.familiar
                    .as_ref()
                    .map_or("bundled".into(), |p| p.display().to_string()),
            ),
        ],
    );
    let familiar = Familiar::open(a.familiar.as_deref())?;
    let stats = compute_stats(&read_text(&a.text)?, familiar.words())?;
    let report = ReadabilityReport::from_stats(&stats);
    let text = format!(
        "FRE {:.4}\nFKGL {:.4}\nDCRS {:.4}\nCLI {:.4}\n",
        report.fre, report.fkgl, report.dcrs, report.cli
    );
    Ok(Output::new(&ReadabilityOut { report, stats }, text))
}

fn rouge(a: RougeArgs) -> Result<Output, CliError> {
    echo(
        "rouge",
        &[
            ("hyp", a.hyp.display().to_string()),
            ("ref", a.reference.display().to_string()),
            ("rouge", laysum_core::rouge::ROUGE_CONFIG.to_string()),
        ],
    );
    let scores: RougeScores = rouge_texts(&read_text(&a.hyp)?, &read_text(&a.reference)?)?;
    let mut text = String::from("metric\tprecision\trecall\tf1\n");
    for (name, s) in [
        ("rouge1", scores.rouge1),
        ("rouge2", scores.rouge2),
        ("rougeL", scores.rouge_l),
    ] {
        let _ = writeln!(
            text,
            "{name}\t{:.6}\t{:.6}\t{:.6}",
            s.precision, s.recall, s.f1
        );
    }
    Ok(Output::new(&scores, text))
}

#[derive(Serialize)]
struct RewardOut {
    metric: RewardMetric,
    score: f64,
    target: f64,
    sigma: f64,
    mode: RewardMode,
    eq2_reward: f64,
    normalized_readability: f64,
    readability_component: f64,
    composite: Option<RewardBreakdown>,
}

fn reward(a: RewardArgs) -> Result<Output, CliError> {
    let mut file = load_config(a.config.as_deref())?.with_length_target_from(None);
    let (metric, score) = match (a.fre, a.fkgl) {
        (Some(v), _) => (RewardMetric::Fre, v),
        (None, Some(v)) => (RewardMetric::Fkgl, v),
        (None, None) => unreachable!("clap requires one of --fre/--fkgl"),
    };
    file.reward.metric = metric;
    let cfg = file.reward_config()?;
    let [w_r, w_b, w_l] = cfg.weights();
    echo(
        "reward",
        &[
            ("config", config_source(a.config.as_deref())),
            ("target", cfg.target().to_string()),
            ("sigma", cfg.sigma().to_string()),
            ("weights", format!("{w_r}/{w_b}/{w_l}")),
            ("length_target", cfg.length_target().to_string()),
            ("length_sigma", cfg.length_sigma().to_string()),
            ("mode", enum_name(&cfg.mode())),
        ],
    );
    let composite = match (a.relevance, a.words) {
        (Some(r), Some(w)) => Some(composite_reward(score, r, w, &cfg)?),
        _ => None,
    };
    let out = RewardOut {
        metric,
        score,
        target: cfg.target(),
        sigma: cfg.sigma(),
        mode: cfg.mode(),
        eq2_reward: eq2_reward(score, &cfg),
        normalized_readability: normalized_readability(score, &cfg),
        readability_component: readability_component(score, &cfg),
        composite,
    };
    let mut text = format!(
        "eq2_reward {}\nnormalized_readability {}\nreadability_component {}\n",
        out.eq2_reward, out.normalized_readability, out.readability_component
    );
    if let Some(c) = &out.composite {
        let _ = writeln!(
            text,
            "composite {} (readability {}, relevance {}, length {})",
            c.total, c.readability_component, c.relevance_component, c.length_component
        );
    }
    Ok(Output::new(&out, text))
}

/// One line of a `ppo-train` input file: precomputed features, or raw
/// summary variants to featurize.
#[derive(Deserialize)]
#[serde(untagged)]
enum SetLine {
    Scored(CandidateSet),
    Texts {
        doc_id: String,
        texts: Vec<String>,
        #[serde(default)]
        reference: Option<String>,
        #[serde(default)]
        keyphrases: Vec<String>,
    },
}

#[derive(Serialize)]
struct SetOut {
    doc_id: String,
    probabilities: Vec<f64>,
    selected: usize,
}

#[derive(Serialize)]
struct PpoOut {
    seed: u64,
    iterations: usize,
    params: Vec<f64>,
    final_mean_reward: f64,
    sets: Vec<SetOut>,
}

fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold(0, |best, (i, v)| if *v > values[best] { i } else { best })
}

fn ppo_train(a: PpoTrainArgs) -> Result<Output, CliError> {
    let mut file = load_config(a.config.as_deref())?.with_length_target_from(None);
    if let Some(seed) = a.seed {
        file.ppo.seed = seed;
    }
    if let Some(it) = a.iterations {
        file.ppo.iterations = it;
    }
    let reward_cfg = file.reward_config()?;
    let ppo = file.ppo;
    echo(
        "ppo-train",
        &[
            ("candidates", a.candidates.display().to_string()),
            ("config", config_source(a.config.as_deref())),
            ("clip_epsilon", ppo.clip_epsilon.to_string()),
            ("learning_rate", ppo.learning_rate.to_string()),
            ("epochs_per_batch", ppo.epochs_per_batch.to_string()),
            ("batch_size", ppo.batch_size.to_string()),
            ("iterations", ppo.iterations.to_string()),
            ("baseline", enum_name(&ppo.baseline)),
            ("seed", ppo.seed.to_string()),
        ],
    );
    let path = a.candidates.display().to_string();
    let mut sets = Vec::new();
    for (i, line) in read_text(&a.candidates)?.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: SetLine = serde_json::from_str(line).map_err(|e| CliError::Input {
            path: path.clone(),
            detail: format!("line {}: {e}", i + 1),
        })?;
        sets.push(match parsed {
            SetLine::Scored(s) => s,
            SetLine::Texts {
                doc_id,
                texts,
                reference,
                keyphrases,
            } => build_candidate_set(
                &doc_id,
                &texts,
                reference.as_deref(),
                &keyphrases,
                FamiliarWords::bundled(),
                &reward_cfg,
            )?,
        });
    }
    let (params, trace) = train(&sets, feature_reward(&reward_cfg), &ppo)?;
    if let Some(p) = &a.trace {
        write_file(p, &trace.to_csv())?;
    }
    let set_out = sets
        .iter()
        .map(|s| {
            let probabilities = policy_distribution(&params, s)?;
            Ok(SetOut {
                doc_id: s.doc_id.clone(),
                selected: argmax(&probabilities),
                probabilities,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let out = PpoOut {
        seed: ppo.seed,
        iterations: ppo.iterations,
        final_mean_reward: trace.rows.last().map_or(0.0, |r| r.mean_reward),
        params: params.0.clone(),
        sets: set_out,
    };
    let PolicyParams(theta) = &params;
    let mut text = format!(
        "theta {theta:?}\nfinal mean reward {:.6}\n",
        out.final_mean_reward
    );
    for s in &out.sets {
        let _ = writeln!(
            text,
            "{}\tselected {}\tp={:.4}",
            s.doc_id, s.selected, s.probabilities[s.selected]
        );
    }
    Ok(Output::new(&out, text))
}

#[derive(Serialize)]
struct RunOut<'a> {
    mode: &'static str,
    documents: usize,
    results: &'a [PipelineResult],
    report: Option<EvalReport>,
}

fn split_of(s: SplitArg) -> Split {
    match s {
        SplitArg::Train => Split::Train,
        SplitArg::Validation => Split::Validation,
        SplitArg::Test => Split::Test,
    }
}

fn run(a: RunArgs) -> Result<Output, CliError> {
    let corpus = load_corpus(&a.corpus)?;
    let file = load_config(a.config.as_deref())?.with_length_target_from(Some(&corpus));
    let cfg = file.pipeline_config()?;
    let client = bridge(a.mock);
    let (mode, services) = match (&client, a.mock) {
        (_, true) => ("mock", Services::mock()),
        (Some(c), false) => (
            "bridge",
            Services {
                generator: Some(Box::new(c.clone())),
                scorer: Box::new(c.clone()),
                relevance: Some(Box::new(c.clone())),
            },
        ),
        (None, false) => ("offline", Services::offline()),
    };
    echo(
        "run",
        &[
            ("corpus", a.corpus.display().to_string()),
            ("index", a.index.display().to_string()),
            ("config", config_source(a.config.as_deref())),
            ("mode", mode.into()),
            ("jobs", a.jobs.to_string()),
            (
                "split",
                a.split
                    .map_or("all".into(), |s| split_of(s).as_str().into()),
            ),
            (
                "settings",
                serde_json::to_string(&file).expect("config serializes"),
            ),
        ],
    );
    cfg.validate()?;
    let idx = load_index(&a.index)?;
    let docs: Vec<Document> = corpus
        .documents()
        .iter()
        .filter(|d| a.split.is_none_or(|s| d.split == split_of(s)))
        .cloned()
        .collect();
    let familiar = FamiliarWords::bundled();
    let results = with_jobs(a.jobs, || {
        pipeline::run_batch(&docs, &idx, &services, &cfg, familiar)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;

    let pairs: Vec<EvalPair> = docs
        .iter()
        .zip(&results)
        .filter(|(d, _)| !d.summary.trim().is_empty())
        .map(|(d, r)| EvalPair {
            id: Some(d.id.clone()),
            prediction: r.final_summary.clone(),
            reference: d.summary.clone(),
        })
        .collect();
    let provider = client
        .as_ref()
        .filter(|_| !a.mock)
        .map(|c| c as &dyn MetricProvider);
    let report = if pairs.is_empty() {
        None
    } else {
        Some(with_jobs(a.jobs, || evaluate(&pairs, familiar, provider))?)
    };

    if let Some(dir) = &a.out {
        create_dir(dir)?;
        let mut lines = String::new();
        for r in &results {
            lines.push_str(&serde_json::to_string(r).expect("result serializes"));
            lines.push('\n');
        }
        write_file(&dir.join("results.jsonl"), &lines)?;
        if let Some(rep) = &report {
            write_file(&dir.join("report.md"), &rep.to_markdown())?;
            write_file(&dir.join("report.json"), &rep.to_json())?;
        }
    }

    let mut text = String::new();
    for r in &results {
        let _ = writeln!(
            text,
            "{}\treward {:.6}\t{}",
            r.doc_id, r.reward.total, r.final_summary
        );
    }
    if let Some(rep) = &report {
        text.push('\n');
        text.push_str(&rep.to_markdown());
    }
    let out = RunOut {
        mode,
        documents: results.len(),
        results: &results,
        report,
    };
    Ok(Output::new(&out, text))
}

fn evaluate_pairs(a: EvaluateArgs) -> Result<Output, CliError> {
    let client = bridge(a.mock);
    echo(
        "evaluate",
        &[
            ("pairs", a.pairs.display().to_string()),
            (
                "familiar",
                a.familiar
                    .as_ref()
                    .map_or("bundled".into(), |p| p.display().to_string()),
            ),
            ("jobs", a.jobs.to_string()),
            (
                "bridge",
                client
                    .as_ref()
                    .map_or("none".into(), |c| c.base_url().to_string()),
            ),
        ],
    );
    let path = a.pairs.display().to_string();
    let pairs = read_text(&a.pairs)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<EvalPair>(l).map_err(|e| CliError::Input {
                path: path.clone(),
                detail: format!("line {}: {e}", i + 1),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let familiar = Familiar::open(a.familiar.as_deref())?;
    let provider = client.as_ref().map(|c| c as &dyn MetricProvider);
    let report = with_jobs(a.jobs, || evaluate(&pairs, familiar.words(), provider))?;
    if let Some(dir) = &a.out {
        create_dir(dir)?;
        write_file(&dir.join("report.md"), &report.to_markdown())?;
        write_file(&dir.join("report.json"), &report.to_json())?;
    }
    let text = report.to_markdown();
    Ok(Output::new(&report, text))
}

#[derive(Serialize)]
struct HitRateOut {
    queries: usize,
    #[serde(flatten)]
    table: HitRateTable,
}

fn method_label(m: Method) -> &'static str {
    match m {
        Method::Bm25 => "BM25",
        Method::Lexical => "BM25 + lexical rerank",
        Method::Oracle => "BM25 + oracle rerank",
        Method::Bridge => "BM25 + bridge rerank",
    }
}

fn hit_rate(a: HitRateArgs) -> Result<Output, CliError> {
    let client = BridgeClient::from_env();
    let methods = if a.methods.is_empty() {
        let mut m = vec![Method::Bm25, Method::Lexical];
        if client.is_some() {
            m.push(Method::Bridge);
        }
        m
    } else {
        a.methods.clone()
    };
    let names: Vec<&str> = methods.iter().map(|m| method_label(*m)).collect();
    echo(
        "hit-rate",
        &[
            ("index", a.index.display().to_string()),
            ("eval", a.eval.display().to_string()),
            ("methods", names.join(";")),
        ],
    );
    let idx = load_index(&a.index)?;
    let pairs = load_eval_pairs(&a.eval)?;
    let mut table = HitRateTable::default();
    for m in methods {
        let scorer: Option<Box<dyn RerankScorer>> = match m {
            Method::Bm25 => None,
            Method::Lexical => Some(Box::new(LexicalOverlapScorer)),
            Method::Oracle => Some(Box::new(OracleScorer::new(pairs.iter().filter_map(|p| {
                idx.ordinal_of(&p.gold)
                    .map(|o| (p.query.clone(), idx.passage_text(o).to_string()))
            })))),
            Method::Bridge => Some(Box::new(client.clone().ok_or_else(|| {
                CliError::Unavailable(format!("method `bridge` needs {BRIDGE_URL_ENV} to be set"))
            })?)),
        };
        table.push(
            method_label(m),
            hit_rate_eval(&idx, &pairs, scorer.as_deref())?,
        );
    }
    let text = table.to_markdown();
    Ok(Output::new(
        &HitRateOut {
            queries: pairs.len(),
            table,
        },
        text,
    ))
}
