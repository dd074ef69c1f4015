use std::collections::HashSet;
use std::path::PathBuf;

use direval::conicity::{group_by_context, load_sentence_embeddings, set_analysis};
use direval::corpus::{
    build_eval_instances, load_dataset, parse_dataset, sample_random_negatives, split, CandidateType, Corpus,
    NegativeType, ReferenceMode, SplitManifest, SplitSpec,
};
use direval::io::to_jsonl;
use direval::metrics::{score_instance, ContextualEmbeddingSet, MetricSpec, Resources};
use direval::mutate::{mutate_corpus, MutationKind, MutationSpec};
use direval::stats::{evaluate, Labeled, ScoreTransform, ThresholdGrid, ThresholdMode};
use direval::text::{load_embeddings, Lexicons, StopwordList};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../testdata").join(name)
}

fn toy() -> Corpus {
    load_dataset(&data("toy10.jsonl")).unwrap()
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(data("golden").join(name)).unwrap()
}

#[test]
fn negative_sampling_matches_golden() {
    let sampled = sample_random_negatives(&toy(), 5, 6, 7).unwrap();
    assert_eq!(sampled.to_jsonl(), golden("toy10_negatives_k5_w6_seed7.jsonl"));
}

#[test]
fn sampled_negatives_come_from_other_contexts() {
    let corpus = toy();
    let sampled = sample_random_negatives(&corpus, 5, 6, 7).unwrap();
    for record in sampled.records() {
        let own: HashSet<&String> = record.responses.positives.iter().collect();
        assert_eq!(record.responses.random_negatives.len(), 5);
        for neg in &record.responses.random_negatives {
            assert!(!own.contains(neg));
            assert!(neg.split_whitespace().count() >= 6);
        }
    }
}

#[test]
fn jumble_matches_golden() {
    let spec = MutationSpec::new(MutationKind::Jumble, 13);
    let batch = mutate_corpus(&toy(), &spec, &Lexicons::default()).unwrap();
    assert!(batch.empty_outputs.is_empty());
    assert_eq!(to_jsonl(&batch.instances), golden("toy10_mutate_jumble_seed13.jsonl"));
}

#[test]
fn drop_stopwords_on_corpus() {
    let stop = StopwordList::load(&data("stopwords.txt")).unwrap();
    let lexicons = Lexicons {
        stopwords: Some(stop.clone()),
        ..Lexicons::default()
    };
    let spec = MutationSpec::new(MutationKind::DropStopwords, 0);
    let batch = mutate_corpus(&toy(), &spec, &lexicons).unwrap();
    assert_eq!(batch.instances.len(), 50);
    for inst in &batch.instances {
        assert!(inst.candidate.split(' ').all(|t| !stop.contains(t)), "{}", inst.candidate);
        assert_eq!(inst.candidate_type, CandidateType::Generated);
    }
}

#[test]
fn ten_instances_per_context() {
    let corpus = sample_random_negatives(&toy(), 5, 6, 7).unwrap();
    for mode in [ReferenceMode::Single, ReferenceMode::Multi, ReferenceMode::Delta] {
        let instances = build_eval_instances(&corpus, NegativeType::Random, mode).unwrap();
        assert_eq!(instances.len(), 100);
        assert_eq!(instances.iter().filter(|i| i.label == 1).count(), 50);
    }
    // The toy corpus ships without random negatives.
    assert!(build_eval_instances(&toy(), NegativeType::Random, ReferenceMode::Multi).is_err());
}

#[test]
fn split_is_a_partition_and_reproducible() {
    let corpus = toy();
    let spec = SplitSpec::new(0.6, 0.2, 0.2, 5).unwrap();
    let a = SplitManifest::from_split(spec, &split(&corpus, &spec).unwrap());
    let b = SplitManifest::from_split(spec, &split(&corpus, &spec).unwrap());
    assert_eq!(a, b);
    assert_eq!((a.train.len(), a.valid.len(), a.test.len()), (6, 2, 2));
    let all: HashSet<&String> = a.train.iter().chain(&a.valid).chain(&a.test).collect();
    assert_eq!(all.len(), 10);
}

#[test]
fn dataset_round_trip() {
    let corpus = toy();
    let again = parse_dataset(std::io::Cursor::new(corpus.to_jsonl())).unwrap();
    assert_eq!(corpus, again);
}

#[test]
fn all_metrics_score_the_toy_corpus() {
    let corpus = toy();
    let mut resources = Resources {
        embeddings: Some(load_embeddings(&data("vectors16.txt")).unwrap()),
        contextual: Some(ContextualEmbeddingSet::load(&data("ctx8.jsonl")).unwrap()),
        ..Resources::default()
    };
    resources.lexicons.stopwords = Some(StopwordList::load(&data("stopwords.txt")).unwrap());
    let specs = [
        "bleu1/multi-max",
        "bleu4/standard",
        "rougel/multi-avg",
        "meteor/single",
        "embavg/multi-max",
        "extrema/multi-max",
        "greedy/multi-max",
        "bertscore/multi-max",
        "deltableu/delta",
    ];
    for name in specs {
        let spec: MetricSpec = name.parse().unwrap();
        let instances = build_eval_instances(&corpus, NegativeType::Adversarial, spec.strategy.reference_mode()).unwrap();
        let scores: Vec<f64> = instances
            .iter()
            .map(|i| score_instance(i, spec, &resources).unwrap())
            .collect();
        assert!(scores.iter().all(|s| s.is_finite()), "{name}");
        let labels: Vec<u8> = instances.iter().map(|i| i.label).collect();
        let data = Labeled {
            scores: &scores,
            labels: &labels,
        };
        let transform = if spec.kind.is_cosine_based() {
            ScoreTransform::CosineToUnit
        } else {
            ScoreTransform::Identity
        };
        let report = evaluate(name, data, data, ThresholdMode::Grid(ThresholdGrid::default()), transform).unwrap();
        assert!(report.accuracy >= 0.5, "{name}: {}", report.accuracy);
        assert_eq!(report.confusion.total(), 100);
    }
}

#[test]
fn conicity_from_sentence_vectors() {
    let rows = load_sentence_embeddings(&data("sentence8.jsonl")).unwrap();
    let report = set_analysis(&group_by_context(&rows), None).unwrap();
    assert_eq!(report.n_contexts, 10);
    assert_eq!(report.n_with_a, 10);
    assert_eq!(report.mean_p_union_r, None);
    // Positives were generated tighter than adversarial responses.
    assert!(report.mean_p > report.mean_p_union_a.unwrap());
}
