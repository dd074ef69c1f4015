use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use direval::conicity::{group_by_context, load_sentence_embeddings, set_analysis};
use direval::corpus::{
    build_eval_instances, corpus_stats, id_set, load_dataset, sample_random_negatives, split, EvalInstance,
    NegativeType, SplitManifest, SplitSpec,
};
use direval::io::{join_ids, load_ratings, load_scores, read_jsonl, sort_canonical, to_jsonl};
use direval::metrics::{
    score_instance, ContextualEmbeddingSet, ExtremaRule, MetricConfig, MetricKind, MetricSpec, RefStrategy,
    Resources,
};
use direval::mutate::{mutate_corpus, MutationKind, MutationSpec};
use direval::stats::{
    accuracy_at, best_threshold, chi_squared_2x2, evaluate, kendall_tau, pearson, spearman, williams_test,
    Correlation, EvalReport, Labeled, ScoreRecord, ScoreTransform, TestResult, ThresholdGrid, ThresholdMode,
};
use direval::text::{load_embeddings_filtered, tokenize, Lexicons, PosLexicon, StopwordList, SynonymLexicon};

use crate::output::{Destination, RunManifest};
use crate::{Command, CompareArgs, EvaluateArgs, Failure, LexiconArgs, OutArgs, ScoreArgs};

pub(crate) fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Ingest { dataset, out } => ingest(&dataset, out),
        Command::Split {
            dataset,
            train,
            valid,
            test,
            seed,
            out,
        } => split_cmd(&dataset, train, valid, test, seed.seed, out),
        Command::SampleNegatives {
            dataset,
            k,
            min_words,
            seed,
            out,
        } => sample_negatives(&dataset, k, min_words, seed.seed, out),
        Command::Score(args) => score(args),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::Mutate {
            dataset,
            kind,
            swap_rate,
            lexicons,
            seed,
            out,
        } => mutate(&dataset, &kind, swap_rate, &lexicons, seed.seed, out),
        Command::Conicity {
            vectors,
            split_manifest,
            slice,
            out,
        } => conicity(&vectors, split_manifest.as_deref(), slice.as_deref(), out),
        Command::Correlate { scores, ratings, out } => correlate(&scores, &ratings, out),
        Command::Compare(args) => compare(args),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn destination(out: OutArgs) -> Destination {
    Destination {
        out: out.out,
        manifest: out.manifest,
    }
}

fn json_doc<T: Serialize>(value: &T) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text.into_bytes()
}

fn ingest(dataset: &Path, out: OutArgs) -> Result<(), Failure> {
    let corpus = load_dataset(dataset)?;
    let stats = corpus_stats(&corpus)?;
    let mut m = RunManifest::new("ingest");
    m.input("dataset", dataset)?;
    destination(out).emit(&json_doc(&stats), m)
}

fn split_cmd(dataset: &Path, train: f64, valid: f64, test: f64, seed: u64, out: OutArgs) -> Result<(), Failure> {
    let corpus = load_dataset(dataset)?;
    let spec = SplitSpec::new(train, valid, test, seed)?;
    let manifest = SplitManifest::from_split(spec, &split(&corpus, &spec)?);
    let mut m = RunManifest::new("split");
    m.input("dataset", dataset)?;
    m.seed = Some(seed);
    m.config("fractions", [train, valid, test]);
    destination(out).emit(&json_doc(&manifest), m)
}

fn sample_negatives(dataset: &Path, k: usize, min_words: usize, seed: u64, out: OutArgs) -> Result<(), Failure> {
    let corpus = load_dataset(dataset)?;
    let sampled = sample_random_negatives(&corpus, k, min_words, seed)?;
    let mut m = RunManifest::new("sample-negatives");
    m.input("dataset", dataset)?;
    m.seed = Some(seed);
    m.config("k", k);
    m.config("min_words", min_words);
    destination(out).emit(sampled.to_jsonl().as_bytes(), m)
}

fn load_lexicons(args: &LexiconArgs, m: &mut RunManifest) -> Result<Lexicons, Failure> {
    let mut lexicons = Lexicons::default();
    if let Some(p) = &args.stopwords {
        m.input("stopwords", p)?;
        lexicons.stopwords = Some(StopwordList::load(p)?);
    }
    if let Some(p) = &args.synonyms {
        m.input("synonyms", p)?;
        lexicons.synonyms = Some(SynonymLexicon::load(p)?);
    }
    if let Some(p) = &args.pos_lexicon {
        m.input("pos-lexicon", p)?;
        lexicons.pos = Some(PosLexicon::load(p)?);
    }
    Ok(lexicons)
}

fn load_instances(path: &Path) -> Result<Vec<EvalInstance>, Failure> {
    let file = std::fs::File::open(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let instances: Vec<EvalInstance> = read_jsonl(std::io::BufReader::new(file))?;
    let mut seen = HashSet::new();
    for inst in &instances {
        let id = &inst.candidate_id;
        if !seen.insert(id.as_str()) {
            return Err(usage(format!("duplicate candidate id {id:?} in {}", path.display())));
        }
        if inst.references.len() != inst.reference_ids.len() || inst.references.len() != inst.reference_weights.len() {
            return Err(usage(format!("{id:?}: references, reference_ids and reference_weights differ in length")));
        }
        if inst.label != inst.candidate_type.label() {
            return Err(usage(format!("{id:?}: label {} contradicts type {}", inst.label, inst.candidate_type)));
        }
    }
    if instances.is_empty() {
        return Err(usage(format!("{} contains no instances", path.display())));
    }
    Ok(instances)
}

fn vocabulary(instances: &[EvalInstance]) -> HashSet<String> {
    let mut vocab = HashSet::new();
    for inst in instances {
        for text in std::iter::once(&inst.candidate).chain(&inst.references) {
            vocab.extend(tokenize(text).into_tokens());
        }
    }
    vocab
}

fn parse_extrema(s: &str) -> Result<ExtremaRule, Failure> {
    match s {
        "abs" => Ok(ExtremaRule::Abs),
        "signed_max" | "signed-max" => Ok(ExtremaRule::SignedMax),
        _ => Err(usage(format!("unknown extrema rule {s:?}; expected abs or signed_max"))),
    }
}

fn score(args: ScoreArgs) -> Result<(), Failure> {
    let kind: MetricKind = args.metric.parse()?;
    let strategy = match (&args.refs, kind) {
        (Some(s), _) => s.parse()?,
        (None, MetricKind::DeltaBleu(_)) => RefStrategy::Delta,
        (None, _) => RefStrategy::MultiMax,
    };
    let spec = MetricSpec::new(kind, strategy)?;
    let config = MetricConfig {
        extrema_rule: parse_extrema(&args.extrema)?,
        ..MetricConfig::default()
    };

    let mut m = RunManifest::new("score");
    let instances = match (&args.dataset, &args.instances) {
        (Some(path), _) => {
            let negatives: NegativeType = args.negatives.parse()?;
            m.input("dataset", path)?;
            m.config("negatives", negatives);
            build_eval_instances(&load_dataset(path)?, negatives, strategy.reference_mode())?
        }
        (None, Some(path)) => {
            if matches!(strategy, RefStrategy::Single | RefStrategy::Delta) {
                return Err(usage("--instances supports --refs multi-max, multi-avg or standard"));
            }
            m.input("instances", path)?;
            load_instances(path)?
        }
        (None, None) => return Err(usage("one of --dataset or --instances is required")),
    };

    let mut resources = Resources {
        config,
        lexicons: load_lexicons(&args.lexicons, &mut m)?,
        ..Resources::default()
    };
    if let Some(path) = &args.embeddings {
        m.input("embeddings", path)?;
        let vocab = vocabulary(&instances);
        resources.embeddings = Some(load_embeddings_filtered(path, |w| vocab.contains(w))?);
    }
    if let Some(path) = &args.ctx_embeddings {
        m.input("ctx-embeddings", path)?;
        resources.contextual = Some(ContextualEmbeddingSet::load(path)?);
    }
    resources.check(kind)?;

    let results: Vec<direval::Result<f64>> = instances
        .par_iter()
        .map(|inst| score_instance(inst, spec, &resources))
        .collect();
    let mut records = Vec::with_capacity(instances.len());
    let mut skipped = Vec::new();
    for (inst, result) in instances.iter().zip(results) {
        match result {
            Ok(score) => records.push(ScoreRecord {
                context_id: inst.context_id.clone(),
                candidate_id: inst.candidate_id.clone(),
                candidate_type: inst.candidate_type,
                metric: spec.to_string(),
                score,
            }),
            Err(direval::Error::Degenerate(_)) if args.skip_degenerate => skipped.push(inst.candidate_id.clone()),
            Err(e) => return Err(usage(format!("scoring {:?}: {e}", inst.candidate_id))),
        }
    }
    if !skipped.is_empty() {
        eprintln!("direval: skipped {} degenerate candidate(s)", skipped.len());
    }
    sort_canonical(&mut records);
    m.config("metric", spec.to_string());
    m.config("metric_config", resources.config);
    m.config("skipped", &skipped);
    destination(args.out).emit(to_jsonl(&records).as_bytes(), m)
}

fn load_score_files(paths: &[PathBuf], flag: &str, m: &mut RunManifest) -> Result<Vec<ScoreRecord>, Failure> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for path in paths {
        m.input(flag, path)?;
        for r in load_scores(path)? {
            if !seen.insert(r.candidate_id.clone()) {
                return Err(usage(format!("candidate {:?} appears in more than one score file", r.candidate_id)));
            }
            records.push(r);
        }
    }
    if records.is_empty() {
        return Err(usage("score input contains no records"));
    }
    Ok(records)
}

fn single_metric(records: &[ScoreRecord]) -> Result<String, Failure> {
    let metrics: BTreeSet<&str> = records.iter().map(|r| r.metric.as_str()).collect();
    if metrics.len() > 1 {
        let names: Vec<&str> = metrics.into_iter().collect();
        return Err(usage(format!("score input mixes metrics: {}", names.join(", "))));
    }
    Ok(records[0].metric.clone())
}

fn parse_threshold(s: &str) -> Result<ThresholdMode, Failure> {
    if s == "grid" {
        return Ok(ThresholdMode::Grid(ThresholdGrid::default()));
    }
    match s.parse::<f64>() {
        Ok(t) if t.is_finite() => Ok(ThresholdMode::Fixed { threshold: t }),
        _ => Err(usage(format!("--threshold expects grid or a number, got {s:?}"))),
    }
}

fn parse_transform(s: &str, metric: &str) -> Result<ScoreTransform, Failure> {
    match s {
        "identity" => Ok(ScoreTransform::Identity),
        "cosine" => Ok(ScoreTransform::CosineToUnit),
        "auto" => {
            let name = metric.split('/').next().unwrap_or(metric);
            let cosine = name.parse::<MetricKind>().is_ok_and(MetricKind::is_cosine_based);
            Ok(if cosine {
                ScoreTransform::CosineToUnit
            } else {
                ScoreTransform::Identity
            })
        }
        _ => Err(usage(format!("unknown transform {s:?}; expected auto, identity or cosine"))),
    }
}

/// Context ids of the fitting and reporting slices; `None` means every record.
struct Slices {
    fit: Option<HashSet<String>>,
    test: Option<HashSet<String>>,
}

impl Slices {
    fn load(path: Option<&Path>, m: &mut RunManifest) -> Result<Slices, Failure> {
        let Some(path) = path else {
            return Ok(Slices { fit: None, test: None });
        };
        m.input("split-manifest", path)?;
        let manifest = SplitManifest::load(path)?;
        let set = |ids: &[String]| Some(ids.iter().cloned().collect::<HashSet<String>>());
        Ok(Slices {
            fit: set(&manifest.valid),
            test: set(&manifest.test),
        })
    }

    fn names(&self) -> (&'static str, &'static str) {
        if self.fit.is_some() {
            ("valid", "test")
        } else {
            ("all", "all")
        }
    }
}

fn select<'a>(records: &'a [ScoreRecord], ids: &Option<HashSet<String>>) -> Vec<&'a ScoreRecord> {
    records
        .iter()
        .filter(|r| ids.as_ref().is_none_or(|s| s.contains(&r.context_id)))
        .collect()
}

fn columns(records: &[&ScoreRecord]) -> (Vec<f64>, Vec<u8>) {
    records.iter().map(|r| (r.score, r.label())).unzip()
}

#[derive(Serialize)]
struct EvaluateOutput {
    #[serde(flatten)]
    report: EvalReport,
    fit_slice: Option<&'static str>,
    test_slice: &'static str,
}

fn evaluate_cmd(args: EvaluateArgs) -> Result<(), Failure> {
    let mut m = RunManifest::new("evaluate");
    let records = load_score_files(&args.scores, "scores", &mut m)?;
    let metric = single_metric(&records)?;
    let mode = parse_threshold(&args.threshold)?;
    let transform = parse_transform(&args.transform, &metric)?;
    let slices = Slices::load(args.split_manifest.as_deref(), &mut m)?;
    let (fit_name, test_name) = slices.names();

    let fit_records = select(&records, &slices.fit);
    let test_records = select(&records, &slices.test);
    if test_records.is_empty() {
        return Err(usage(format!("no score records fall in the {test_name} slice")));
    }
    let (fit_scores, fit_labels) = columns(&fit_records);
    let (test_scores, test_labels) = columns(&test_records);
    let report = evaluate(
        &metric,
        Labeled {
            scores: &fit_scores,
            labels: &fit_labels,
        },
        Labeled {
            scores: &test_scores,
            labels: &test_labels,
        },
        mode,
        transform,
    )?;
    m.config("threshold", mode);
    m.config("transform", transform);
    let out = EvaluateOutput {
        report,
        fit_slice: matches!(mode, ThresholdMode::Grid(_)).then_some(fit_name),
        test_slice: test_name,
    };
    destination(args.out).emit(&json_doc(&out), m)
}

fn mutate(
    dataset: &Path,
    kind: &str,
    swap_rate: f64,
    lexicon_args: &LexiconArgs,
    seed: u64,
    out: OutArgs,
) -> Result<(), Failure> {
    let kind: MutationKind = kind.parse()?;
    let spec = MutationSpec::new(kind, seed).with_swap_rate(swap_rate)?;
    let mut m = RunManifest::new("mutate");
    m.input("dataset", dataset)?;
    let lexicons = load_lexicons(lexicon_args, &mut m)?;
    let corpus = load_dataset(dataset)?;
    let batch = mutate_corpus(&corpus, &spec, &lexicons)?;
    let empty: HashSet<&str> = batch.empty_outputs.iter().map(String::as_str).collect();
    let kept: Vec<&EvalInstance> = batch
        .instances
        .iter()
        .filter(|i| !empty.contains(i.candidate_id.as_str()))
        .collect();
    if !empty.is_empty() {
        eprintln!("direval: {} response(s) became empty and were left out", empty.len());
    }
    m.seed = Some(seed);
    m.config("mutation", spec);
    m.config("empty_outputs", &batch.empty_outputs);
    destination(out).emit(to_jsonl(&kept).as_bytes(), m)
}

fn conicity(vectors: &Path, split_manifest: Option<&Path>, slice: Option<&str>, out: OutArgs) -> Result<(), Failure> {
    let mut m = RunManifest::new("conicity");
    m.input("vectors", vectors)?;
    let embeddings = load_sentence_embeddings(vectors)?;
    let manifest = match split_manifest {
        Some(p) => {
            m.input("split-manifest", p)?;
            Some(SplitManifest::load(p)?)
        }
        None => None,
    };
    let only = match (&manifest, slice) {
        (Some(man), Some(name)) => Some(id_set(match name {
            "train" => &man.train,
            "valid" => &man.valid,
            "test" => &man.test,
            _ => return Err(usage(format!("unknown slice {name:?}; expected train, valid or test"))),
        })),
        (Some(man), None) => Some(
            man.train
                .iter()
                .chain(&man.valid)
                .chain(&man.test)
                .map(String::as_str)
                .collect(),
        ),
        _ => None,
    };
    let report = set_analysis(&group_by_context(&embeddings), only.as_ref())?;
    m.config("slice", slice);
    destination(out).emit(&json_doc(&report), m)
}

#[derive(Serialize)]
struct CorrelateOutput {
    metric: String,
    n: usize,
    pearson: Correlation,
    spearman: Correlation,
    kendall: Correlation,
}

fn candidate_ids<T>(rows: &[T], id: impl Fn(&T) -> &str) -> Vec<&str> {
    rows.iter().map(id).collect()
}

fn correlate(scores: &Path, ratings: &Path, out: OutArgs) -> Result<(), Failure> {
    let mut m = RunManifest::new("correlate");
    let records = load_score_files(&[scores.to_path_buf()], "scores", &mut m)?;
    let metric = single_metric(&records)?;
    m.input("ratings", ratings)?;
    let rated = load_ratings(ratings)?;
    let pairs = join_ids(
        &candidate_ids(&records, |r| &r.candidate_id),
        &candidate_ids(&rated, |r| &r.candidate_id),
        "scores",
        "ratings",
    )?;
    let mut x = Vec::with_capacity(pairs.len());
    let mut y = Vec::with_capacity(pairs.len());
    for (i, j) in pairs {
        if records[i].context_id != rated[j].context_id {
            return Err(usage(format!(
                "{:?}: context {:?} in scores but {:?} in ratings",
                records[i].candidate_id, records[i].context_id, rated[j].context_id
            )));
        }
        x.push(records[i].score);
        y.push(rated[j].rating);
    }
    let report = CorrelateOutput {
        metric,
        n: x.len(),
        pearson: pearson(&x, &y)?,
        spearman: spearman(&x, &y)?,
        kendall: kendall_tau(&x, &y)?,
    };
    destination(out).emit(&json_doc(&report), m)
}

#[derive(Serialize)]
struct CompareOutput {
    metric_a: String,
    metric_b: String,
    n: usize,
    /// `rating` or `label`.
    target: &'static str,
    r_a: f64,
    r_b: f64,
    r_ab: f64,
    williams: TestResult,
    threshold_a: f64,
    threshold_b: f64,
    accuracy_a: f64,
    accuracy_b: f64,
    chi_squared: Option<TestResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chi_squared_error: Option<String>,
    test_slice: &'static str,
}

fn fit_threshold(records: &[&ScoreRecord], mode: ThresholdMode, transform: ScoreTransform) -> Result<f64, Failure> {
    match mode {
        ThresholdMode::Fixed { threshold } => Ok(threshold),
        ThresholdMode::Grid(grid) => {
            let (scores, labels) = columns(records);
            let mapped: Vec<f64> = scores.iter().map(|&s| transform.apply(s)).collect();
            Ok(best_threshold(&mapped, &labels, &grid)?)
        }
    }
}

fn compare(args: CompareArgs) -> Result<(), Failure> {
    let mut m = RunManifest::new("compare");
    let a = load_score_files(std::slice::from_ref(&args.scores_a), "scores-a", &mut m)?;
    let b = load_score_files(std::slice::from_ref(&args.scores_b), "scores-b", &mut m)?;
    let (metric_a, metric_b) = (single_metric(&a)?, single_metric(&b)?);
    let mode = parse_threshold(&args.threshold)?;
    let (ta, tb) = (parse_transform(&args.transform, &metric_a)?, parse_transform(&args.transform, &metric_b)?);
    let slices = Slices::load(args.split_manifest.as_deref(), &mut m)?;

    let pairs = join_ids(
        &candidate_ids(&a, |r| &r.candidate_id),
        &candidate_ids(&b, |r| &r.candidate_id),
        "scores-a",
        "scores-b",
    )?;
    let b_sorted: Vec<ScoreRecord> = pairs.iter().map(|&(_, j)| b[j].clone()).collect();
    if let Some((x, y)) = a.iter().zip(&b_sorted).find(|(x, y)| x.candidate_type != y.candidate_type) {
        return Err(usage(format!(
            "{:?} is {} in scores-a but {} in scores-b",
            x.candidate_id, x.candidate_type, y.candidate_type
        )));
    }

    let threshold_a = fit_threshold(&select(&a, &slices.fit), mode, ta)?;
    let threshold_b = fit_threshold(&select(&b_sorted, &slices.fit), mode, tb)?;

    let mut test_a = select(&a, &slices.test);
    let mut test_b = select(&b_sorted, &slices.test);
    let mut target = "label";
    let mut ratings = None;
    if let Some(path) = &args.ratings {
        // Rated items must exist in the score files; only rated items are compared.
        m.input("ratings", path)?;
        let rated = load_ratings(path)?;
        let known: HashSet<&str> = a.iter().map(|r| r.candidate_id.as_str()).collect();
        let rated_ids = candidate_ids(&rated, |r| &r.candidate_id);
        let present: Vec<&str> = rated_ids.iter().copied().filter(|id| known.contains(id)).collect();
        join_ids(&present, &rated_ids, "scores", "ratings")?;
        let index: HashMap<&str, f64> = rated.iter().map(|r| (r.candidate_id.as_str(), r.rating)).collect();
        test_a.retain(|r| index.contains_key(r.candidate_id.as_str()));
        test_b.retain(|r| index.contains_key(r.candidate_id.as_str()));
        ratings = Some(test_a.iter().map(|r| index[r.candidate_id.as_str()]).collect::<Vec<f64>>());
        target = "rating";
    }
    let (sa, labels) = columns(&test_a);
    let (sb, _) = columns(&test_b);
    let y = ratings.unwrap_or_else(|| labels.iter().map(|&l| f64::from(l)).collect());

    let r_a = pearson(&sa, &y)?.r;
    let r_b = pearson(&sb, &y)?.r;
    let r_ab = pearson(&sa, &sb)?.r;
    let williams = williams_test(r_a, r_b, r_ab, sa.len())?;

    let apply = |s: &[f64], t: ScoreTransform| s.iter().map(|&x| t.apply(x)).collect::<Vec<f64>>();
    let (accuracy_a, cm_a) = accuracy_at(&apply(&sa, ta), &labels, threshold_a)?;
    let (accuracy_b, cm_b) = accuracy_at(&apply(&sb, tb), &labels, threshold_b)?;
    let (chi_squared, chi_squared_error) = match chi_squared_2x2(cm_a.correct(), cm_a.errors(), cm_b.correct(), cm_b.errors()) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };

    m.config("threshold", mode);
    let report = CompareOutput {
        metric_a,
        metric_b,
        n: sa.len(),
        target,
        r_a,
        r_b,
        r_ab,
        williams,
        threshold_a,
        threshold_b,
        accuracy_a,
        accuracy_b,
        chi_squared,
        chi_squared_error,
        test_slice: slices.names().1,
    };
    destination(args.out).emit(&json_doc(&report), m)
}
