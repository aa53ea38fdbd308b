//! Brute-force oracles shared by the integration tests. None of these go
//! through the index, the posting lists or the library's distance helpers.
#![allow(dead_code)]

use looksearch::evalkit::detection::{iou, DetectionSet};
use looksearch::model::ProductRecord;
use looksearch::BoundingBox;
use looksearch::LshHasher;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn hamming_oracle(a: &[f32], b: &[f32]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| (**x > 0.0) != (**y > 0.0)).count() as u32
}

pub fn cosine_oracle(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| *x as f64 * *y as f64).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    1.0 - dot / (na * nb)
}

/// Band patterns recomputed from the raw hyperplanes.
pub fn patterns_oracle(hasher: &LshHasher, v: &[f32]) -> Vec<u64> {
    (0..hasher.num_bands())
        .map(|band| {
            (0..hasher.bits_per_band()).fold(0u64, |acc, bit| {
                let dot: f64 = hasher.hyperplane(band, bit).iter().zip(v).map(|(h, x)| h * *x as f64).sum();
                if dot >= 0.0 {
                    acc | (1 << bit)
                } else {
                    acc
                }
            })
        })
        .collect()
}

pub fn shared_tokens_oracle(hasher: &LshHasher, a: &[f32], b: &[f32]) -> u32 {
    patterns_oracle(hasher, a)
        .iter()
        .zip(patterns_oracle(hasher, b))
        .filter(|(x, y)| **x == *y)
        .count() as u32
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMetric {
    Hamming,
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub id: String,
    pub distance: f64,
    pub token_matches: u32,
}

/// Exhaustive k-NN over `records` with the engine's ordering: distance,
/// then more shared tokens, then id.
pub fn exhaustive_knn<'a>(
    records: impl IntoIterator<Item = &'a ProductRecord>,
    hasher: &LshHasher,
    query: &[f32],
    k: usize,
    metric: OracleMetric,
) -> Vec<Neighbor> {
    let q_patterns = patterns_oracle(hasher, query);
    let mut all: Vec<Neighbor> = records
        .into_iter()
        .map(|r| {
            let v = r.embedding.as_slice();
            let distance = match metric {
                OracleMetric::Hamming => hamming_oracle(query, v) as f64,
                OracleMetric::Cosine => cosine_oracle(query, v),
            };
            let token_matches = q_patterns
                .iter()
                .zip(patterns_oracle(hasher, v))
                .filter(|(x, y)| **x == *y)
                .count() as u32;
            Neighbor {
                id: r.id.clone(),
                distance,
                token_matches,
            }
        })
        .collect();
    all.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(b.token_matches.cmp(&a.token_matches))
            .then_with(|| a.id.cmp(&b.id))
    });
    all.truncate(k);
    all
}

/// Exhaustive hamming distances only, ascending.
pub fn exhaustive_hamming_profile<'a>(records: impl IntoIterator<Item = &'a ProductRecord>, query: &[f32], k: usize) -> Vec<u32> {
    let mut d: Vec<u32> = records.into_iter().map(|r| hamming_oracle(query, r.embedding.as_slice())).collect();
    d.sort_unstable();
    d.truncate(k);
    d
}

pub fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-9 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Two unit vectors separated by exactly `theta` radians.
pub fn pair_at_angle<R: Rng>(rng: &mut R, dim: usize, theta: f64) -> (Vec<f32>, Vec<f32>) {
    let u = random_unit(rng, dim);
    let w = loop {
        let r = random_unit(rng, dim);
        let proj: f64 = r.iter().zip(&u).map(|(a, b)| a * b).sum();
        let orth: Vec<f64> = r.iter().zip(&u).map(|(a, b)| a - proj * b).collect();
        let n = orth.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            break orth.into_iter().map(|x| x / n).collect::<Vec<_>>();
        }
    };
    let v: Vec<f32> = u.iter().zip(&w).map(|(a, b)| (theta.cos() * a + theta.sin() * b) as f32).collect();
    (u.into_iter().map(|x| x as f32).collect(), v)
}

const CATS: [&str; 3] = ["Shirt", "Tie", "Sofa"];

fn random_box<R: Rng>(r: &mut R, cat: &str) -> BoundingBox {
    let x = r.random_range(0.0..80.0);
    let y = r.random_range(0.0..80.0);
    BoundingBox::new(x, y, x + r.random_range(5.0..20.0), y + r.random_range(5.0..20.0), cat)
}

/// Ground truth plus predictions that are jittered copies, duplicates and
/// spurious boxes. Scores are distinct.
pub fn detection_fixture<R: Rng>(r: &mut R) -> (DetectionSet, DetectionSet) {
    let mut gt = DetectionSet::new();
    let mut pred = DetectionSet::new();
    let mut next_score = {
        let mut used = Vec::new();
        move |r: &mut R| loop {
            let s = (r.random_range(1..10_000) as f64) / 10_000.0;
            if !used.contains(&s) {
                used.push(s);
                return s;
            }
        }
    };
    for img in 0..r.random_range(1..6) {
        let id = format!("img{img}");
        gt.add_image(id.clone());
        pred.add_image(id.clone());
        for _ in 0..r.random_range(0..5) {
            let cat = CATS[r.random_range(0..3)];
            let g = random_box(r, cat);
            for _ in 0..r.random_range(0..3) {
                let j = |v: f64, r: &mut R| v + r.random_range(-3.0..3.0);
                let p = BoundingBox::new(j(g.x_min, r), j(g.y_min, r), j(g.x_max, r) + 4.0, j(g.y_max, r) + 4.0, cat);
                pred.add(id.clone(), p.with_score(next_score(r)));
            }
            gt.add(id.clone(), g);
        }
        for _ in 0..r.random_range(0..3) {
            let cat = CATS[r.random_range(0..3)];
            let p = random_box(r, cat);
            pred.add(id.clone(), p.with_score(next_score(r)));
        }
    }
    (gt, pred)
}

/// Independent F1 at a threshold: greedy matching by descending score.
pub fn f1_oracle(gt: &DetectionSet, pred: &DetectionSet, t: f64) -> f64 {
    let (mut tp, mut np) = (0usize, 0usize);
    let mut ng = 0usize;
    for (img, gts) in gt.images() {
        ng += gts.len();
        let mut preds: Vec<&BoundingBox> = pred.boxes(img).iter().filter(|b| b.score.unwrap() >= t).collect();
        preds.sort_by(|a, b| b.score.unwrap().partial_cmp(&a.score.unwrap()).unwrap());
        np += preds.len();
        let mut used = vec![false; gts.len()];
        for p in preds {
            let best = (0..gts.len())
                .filter(|&i| !used[i] && gts[i].category == p.category && iou(p, &gts[i]) >= 0.5)
                .max_by(|&a, &b| iou(p, &gts[a]).partial_cmp(&iou(p, &gts[b])).unwrap().then(b.cmp(&a)));
            if let Some(i) = best {
                used[i] = true;
                tp += 1;
            }
        }
    }
    let p = if np == 0 { 0.0 } else { tp as f64 / np as f64 };
    let r = if ng == 0 { 0.0 } else { tp as f64 / ng as f64 };
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
