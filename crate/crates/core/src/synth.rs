//! Seeded synthetic corpora: Gaussian clusters with product-like attributes.
//! Used by benchmarks, the acceptance suite and the browser demo.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::model::{AttributeMap, ProductRecord, CATEGORY, DOMAIN, GENDER, GENDER_LABELS, MERCHANT, PRICE};

const DOMAINS: &[&str] = &["shop.example", "store.example", "market.example"];
const MERCHANTS: &[&str] = &["acme", "globex", "initech", "umbrella"];

#[derive(Debug, Clone)]
pub struct ClusterSpec {
    pub num_docs: usize,
    pub dim: usize,
    pub num_clusters: usize,
    /// Standard deviation of members around their center; centers are N(0, 1).
    pub spread: f32,
    /// Cluster `c` belongs to `categories[c % categories.len()]`.
    pub categories: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub records: Vec<ProductRecord>,
    pub centers: Vec<Vec<f32>>,
    pub cluster_of: Vec<usize>,
    spread: f32,
    categories: Vec<String>,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f32> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

impl SyntheticCorpus {
    pub fn generate(spec: &ClusterSpec) -> Self {
        assert!(spec.num_clusters > 0 && !spec.categories.is_empty() && spec.dim > 0);
        let mut rng = rng(spec.seed);
        let centers: Vec<Vec<f32>> = (0..spec.num_clusters).map(|_| gaussian_vector(&mut rng, spec.dim)).collect();
        let mut records = Vec::with_capacity(spec.num_docs);
        let mut cluster_of = Vec::with_capacity(spec.num_docs);
        for i in 0..spec.num_docs {
            let cluster = rng.random_range(0..spec.num_clusters);
            let embedding: Vec<f32> = centers[cluster]
                .iter()
                .map(|c| {
                    let n: f32 = StandardNormal.sample(&mut rng);
                    c + spec.spread * n
                })
                .collect();
            let price = (rng.random_range(500..20_000) as f64) / 100.0;
            let attributes = AttributeMap::new()
                .with(CATEGORY, spec.categories[cluster % spec.categories.len()].as_str())
                .with(GENDER, *GENDER_LABELS.choose(&mut rng).unwrap())
                .with(PRICE, price)
                .with(DOMAIN, *DOMAINS.choose(&mut rng).unwrap())
                .with(MERCHANT, *MERCHANTS.choose(&mut rng).unwrap());
            records.push(ProductRecord {
                id: format!("doc-{i:06}"),
                embedding: embedding.into(),
                attributes,
            });
            cluster_of.push(cluster);
        }
        SyntheticCorpus {
            records,
            centers,
            cluster_of,
            spread: spec.spread,
            categories: spec.categories.clone(),
        }
    }

    pub fn category_of_cluster(&self, cluster: usize) -> &str {
        &self.categories[cluster % self.categories.len()]
    }

    /// A fresh point drawn from the same distribution as members of `cluster`.
    pub fn sample_near<R: Rng + ?Sized>(&self, cluster: usize, rng: &mut R) -> Vec<f32> {
        self.centers[cluster]
            .iter()
            .map(|c| {
                let n: f32 = StandardNormal.sample(rng);
                c + self.spread * n
            })
            .collect()
    }
}

/// Products with irregular attributes: any field may be missing, and a few
/// carry the wrong value type (string price, numeric gender). For exercising
/// restriction semantics; embeddings are plain Gaussian.
pub fn irregular_products<R: Rng + ?Sized>(rng: &mut R, n: usize, dim: usize, category: &str) -> Vec<ProductRecord> {
    (0..n)
        .map(|i| {
            let mut attributes = AttributeMap::new().with(CATEGORY, category);
            if rng.random_bool(0.85) {
                if rng.random_bool(0.05) {
                    attributes.insert(GENDER, 1.0);
                } else {
                    attributes.insert(GENDER, *GENDER_LABELS.choose(rng).unwrap());
                }
            }
            if rng.random_bool(0.85) {
                let price = f64::from(rng.random_range(0..=200));
                if rng.random_bool(0.05) {
                    attributes.insert(PRICE, price.to_string());
                } else {
                    attributes.insert(PRICE, price);
                }
            }
            if rng.random_bool(0.9) {
                attributes.insert(DOMAIN, *DOMAINS.choose(rng).unwrap());
            }
            if rng.random_bool(0.9) {
                attributes.insert(MERCHANT, *MERCHANTS.choose(rng).unwrap());
            }
            if rng.random_bool(0.5) {
                attributes.insert("color", *["red", "navy blue"].choose(rng).unwrap());
            }
            if rng.random_bool(0.5) {
                attributes.insert("rating", f64::from(rng.random_range(0..=50)) / 10.0);
            }
            ProductRecord {
                id: format!("p{i:05}"),
                embedding: gaussian_vector(rng, dim).into(),
                attributes,
            }
        })
        .collect()
}
