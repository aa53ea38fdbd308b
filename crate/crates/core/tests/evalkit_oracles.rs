mod common;

use std::collections::BTreeMap;

use looksearch::evalkit::detection::{detection_map, detection_pr, select_operating_threshold, DetectionSet};
use looksearch::evalkit::labels::{agreement_by_question, calibration_rate, label_accuracy, label_consistency, LabelEvent};
use looksearch::evalkit::{relevance_at_k, retrieval_precision_at_k, MatchPair, Rating, RelevanceRating, RetrievalEvalParams};
use looksearch::retrieval::default_max_candidates;
use looksearch::synth::{rng, ClusterSpec, SyntheticCorpus};
use looksearch::{BoundingBox, HasherConfig, LshHasher, Metric, QueryObject};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn operating_threshold_matches_exhaustive_scan() {
    let mut r = rng(1);
    let mut checked = 0;
    while checked < 100 {
        let (gt, pred) = common::detection_fixture(&mut r);
        let mut scores: Vec<f64> = pred.images().flat_map(|(_, b)| b.iter().map(|x| x.score.unwrap())).collect();
        if scores.is_empty() {
            assert!(select_operating_threshold(&gt, &pred, 0.5).is_err());
            continue;
        }
        scores.sort_by(f64::total_cmp);
        let mut best = (scores[0], common::f1_oracle(&gt, &pred, scores[0]));
        for &t in &scores {
            let f = common::f1_oracle(&gt, &pred, t);
            if f > best.1 + 1e-12 {
                best = (t, f);
            }
        }
        let got = select_operating_threshold(&gt, &pred, 0.5).unwrap();
        assert_eq!(got, best.0);
        assert!((detection_pr(&gt, &pred, got, 0.5).f1 - best.1).abs() < 1e-12);
        checked += 1;
    }
}

#[test]
fn map_fixtures() {
    let mut gt = DetectionSet::new();
    gt.add("a", BoundingBox::new(0.0, 0.0, 10.0, 10.0, "Shirt"));
    gt.add("a", BoundingBox::new(20.0, 20.0, 30.0, 30.0, "Shirt"));
    gt.add("b", BoundingBox::new(0.0, 0.0, 10.0, 10.0, "Tie"));
    let mut perfect = DetectionSet::new();
    for (img, boxes) in gt.images() {
        for b in boxes {
            perfect.add(img, b.clone().with_score(0.9));
        }
    }
    assert_eq!(detection_map(&gt, &perfect, 0.5), 1.0);
    assert_eq!(detection_map(&gt, &DetectionSet::new(), 0.5), 0.0);
    let empty = detection_pr(&gt, &DetectionSet::new(), 0.0, 0.5);
    assert_eq!((empty.precision, empty.recall), (0.0, 0.0));

    // one class, two GT; predictions ranked TP, FP, TP
    let mut gt1 = DetectionSet::new();
    gt1.add("a", BoundingBox::new(0.0, 0.0, 10.0, 10.0, "Shirt"));
    gt1.add("a", BoundingBox::new(20.0, 20.0, 30.0, 30.0, "Shirt"));
    let mut p = DetectionSet::new();
    p.add("a", BoundingBox::new(0.0, 0.0, 10.0, 10.0, "Shirt").with_score(0.9));
    p.add("a", BoundingBox::new(50.0, 50.0, 60.0, 60.0, "Shirt").with_score(0.8));
    p.add("a", BoundingBox::new(20.0, 20.0, 30.0, 30.0, "Shirt").with_score(0.7));
    assert!((detection_map(&gt1, &p, 0.5) - 5.0 / 6.0).abs() < 1e-9);
}

fn transform_scores(set: &DetectionSet, f: impl Fn(f64) -> f64) -> DetectionSet {
    let mut out = DetectionSet::new();
    for (img, boxes) in set.images() {
        out.add_image(img);
        for b in boxes {
            out.add(img, b.clone().with_score(f(b.score.unwrap())));
        }
    }
    out
}

#[test]
fn map_invariant_under_monotone_score_transforms() {
    let mut r = rng(2);
    for _ in 0..100 {
        let (gt, pred) = common::detection_fixture(&mut r);
        let base = detection_map(&gt, &pred, 0.5);
        assert!((0.0..=1.0).contains(&base));
        for f in [|s: f64| s * s, |s: f64| 3.0 * s - 7.0, |s: f64| s.ln()] {
            let moved = detection_map(&gt, &transform_scores(&pred, f), 0.5);
            assert!((moved - base).abs() < 1e-12);
        }
    }
}

#[test]
fn recall_non_increasing_in_threshold() {
    let mut r = rng(3);
    for _ in 0..50 {
        let (gt, pred) = common::detection_fixture(&mut r);
        let mut prev = f64::INFINITY;
        for t in [0.0, 0.2, 0.4, 0.6, 0.8, 1.0] {
            let rec = detection_pr(&gt, &pred, t, 0.5).recall;
            assert!(rec <= prev + 1e-12);
            prev = rec;
        }
    }
}

fn retrieval_fixture() -> (Vec<MatchPair>, Vec<looksearch::ProductRecord>, HasherConfig) {
    let corpus = SyntheticCorpus::generate(&ClusterSpec {
        num_docs: 5050,
        dim: 32,
        num_clusters: 60,
        spread: 0.45,
        categories: vec!["Shirt".into(), "Tie".into()],
        seed: 11,
    });
    let mut r = rng(12);
    let pairs = corpus.records[..50]
        .iter()
        .map(|rec| {
            // query: the product under view-point noise
            let q: Vec<f32> = rec.embedding.as_slice().iter().map(|v| v + 0.25 * (r.random::<f32>() - 0.5)).collect();
            MatchPair {
                query: QueryObject::new(q, rec.attributes.category().unwrap()),
                ground_truth_id: rec.id.clone(),
            }
        })
        .collect();
    (pairs, corpus.records, HasherConfig { dim: 32, num_bands: 32, bits_per_band: 4, seed: 13 })
}

#[test]
fn precision_at_k_close_to_brute_force() {
    let (pairs, corpus, hc) = retrieval_fixture();
    let h = LshHasher::new(hc).unwrap();
    let mut prev = 0.0;
    for k in [1, 5, 10, 20] {
        let params = RetrievalEvalParams { hasher: hc, max_candidates: default_max_candidates(k), metric: Metric::Hamming };
        let p = retrieval_precision_at_k(&pairs, &corpus, &params, k).unwrap();
        let hits = pairs
            .iter()
            .filter(|pair| {
                let in_cat = corpus.iter().filter(|r| r.attributes.category() == Some(&pair.query.predicted_category));
                common::exhaustive_knn(in_cat, &h, pair.query.embedding.as_slice(), k, common::OracleMetric::Hamming)
                    .iter()
                    .any(|n| n.id == pair.ground_truth_id)
            })
            .count();
        let oracle = hits as f64 / pairs.len() as f64;
        assert!((p - oracle).abs() <= 0.02, "k={k}: engine {p} vs brute force {oracle}");
        assert!(p >= prev, "P@{k} fell to {p} from {prev}");
        prev = p;
    }
}

#[test]
fn precision_at_k_input_errors() {
    let (pairs, corpus, hc) = retrieval_fixture();
    let params = RetrievalEvalParams { hasher: hc, max_candidates: 100, metric: Metric::Hamming };
    assert!(retrieval_precision_at_k(&pairs, &corpus, &params, 0).is_err());
    let err = retrieval_precision_at_k(&pairs, &corpus[50..], &params, 5).unwrap_err();
    assert!(err.to_string().contains("doc-000000"));
}

fn rating_strategy() -> impl Strategy<Value = Rating> {
    prop::sample::select(vec![
        Rating::ExtremelySimilar,
        Rating::Similar,
        Rating::MarginallySimilar,
        Rating::NotSimilar,
        Rating::DidNotLoad,
    ])
}

proptest! {
    #[test]
    fn relevance_fractions_are_consistent(
        sheet in prop::collection::btree_map((0u8..6, 1usize..8), rating_strategy(), 0..40),
        k in 1usize..8,
    ) {
        let ratings: Vec<RelevanceRating> = sheet
            .iter()
            .map(|((q, rank), rating)| RelevanceRating { query_id: format!("q{q}"), rank: *rank, rating: *rating })
            .collect();
        let rep = relevance_at_k(&ratings, k).unwrap();
        let in_k: Vec<&RelevanceRating> = ratings.iter().filter(|r| r.rank <= k).collect();
        prop_assert_eq!(rep.rated_slots, in_k.len());
        prop_assert!(rep.coverage <= 1.0 + 1e-12);
        if !in_k.is_empty() {
            prop_assert!((rep.similar_p_at_k + rep.bad_rate - 1.0).abs() < 1e-12);
            prop_assert!((rep.similar_exclusive_p_at_k + rep.extremely_similar_p_at_k - rep.similar_p_at_k).abs() < 1e-12);
            let bad = in_k.iter().filter(|r| r.rating.is_bad()).count() as f64 / in_k.len() as f64;
            prop_assert!((rep.bad_rate - bad).abs() < 1e-12);
        }
    }

    #[test]
    fn label_metrics_are_bounded(
        answers in prop::collection::vec((0u8..5, 0u8..6, 0u8..3), 0..60),
        golden in prop::collection::vec(0u8..3, 5),
    ) {
        let mut seen = std::collections::BTreeSet::new();
        let events: Vec<LabelEvent> = answers
            .into_iter()
            .filter(|(q, l, _)| seen.insert((*q, *l)))
            .map(|(q, l, a)| LabelEvent { question_id: format!("q{q}"), labeler_id: format!("l{l}"), answer: format!("a{a}") })
            .collect();
        let gold: BTreeMap<String, String> = golden.iter().enumerate().map(|(i, a)| (format!("q{i}"), format!("a{a}"))).collect();
        let c = label_consistency(&events);
        let acc = label_accuracy(&events, &gold).unwrap();
        prop_assert!((0.0..=1.0).contains(&c) && (0.0..=1.0).contains(&acc));
        for (_, rate) in agreement_by_question(&events) {
            prop_assert!(rate > 0.0 && rate <= 1.0);
        }
        prop_assert_eq!(calibration_rate(&events, 0.0), if events.is_empty() { 0.0 } else { 1.0 });
        prop_assert!(calibration_rate(&events, 0.8) >= calibration_rate(&events, 0.9));
    }
}

#[test]
fn label_fixtures() {
    let ev = |q: &str, l: &str, a: &str| LabelEvent { question_id: q.into(), labeler_id: l.into(), answer: a.into() };
    let events = vec![ev("q1", "x", "A"), ev("q1", "y", "A"), ev("q1", "z", "B")];
    assert_eq!(label_consistency(&events), 2.0 / 3.0);
    let gold: BTreeMap<String, String> = [("q1".to_string(), "A".to_string())].into();
    assert_eq!(label_accuracy(&events, &gold).unwrap(), 2.0 / 3.0);
    let four: Vec<LabelEvent> = ["A", "A", "A", "B"].iter().enumerate().map(|(i, a)| ev("q", &i.to_string(), a)).collect();
    assert_eq!(label_accuracy(&four, &[("q".to_string(), "A".to_string())].into()).unwrap(), 0.75);
    let five: Vec<LabelEvent> = ["A", "A", "A", "A", "B"].iter().enumerate().map(|(i, a)| ev("p", &i.to_string(), a)).collect();
    assert_eq!(calibration_rate(&five, 0.8), 1.0);
}
