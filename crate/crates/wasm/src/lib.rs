//! Browser demo bindings. Every exported function returns a JSON string; the
//! plain-Rust versions (`*_value`) are what the native tests exercise.

use looksearch::lsh::make_hasher;
use looksearch::model::{AttributeMap, ProductRecord, QueryObject};
use looksearch::querylang::generate::{random_restriction, GeneratorConfig};
use looksearch::synth::rng;
use looksearch::{build_index, evaluate_restriction, format_ast, parse_restriction, search, IndexShardSet, Metric, Restriction, SearchConfig};
use rand::Rng;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

const CURVE_DIM: usize = 32;
const CURVE_BANDS: usize = 16;
pub const COLORS: [&str; 4] = ["red", "green", "blue", "orange"];
pub const SIZES: [&str; 3] = ["S", "M", "L"];

fn unit(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
}

fn gaussian<R: Rng>(r: &mut R, dim: usize) -> Vec<f64> {
    looksearch::synth::gaussian_vector(r, dim).into_iter().map(f64::from).collect()
}

/// Two unit vectors exactly `theta` apart.
fn pair_at_angle<R: Rng>(r: &mut R, theta: f64) -> (Vec<f32>, Vec<f32>) {
    let mut u = gaussian(r, CURVE_DIM);
    unit(&mut u);
    let mut w = gaussian(r, CURVE_DIM);
    let d: f64 = u.iter().zip(&w).map(|(a, b)| a * b).sum();
    w.iter_mut().zip(&u).for_each(|(x, a)| *x -= d * a);
    unit(&mut w);
    let v = u.iter().zip(&w).map(|(a, b)| (theta.cos() * a + theta.sin() * b) as f32).collect();
    (u.into_iter().map(|x| x as f32).collect(), v)
}

/// Measured band collision rate against `(1 - θ/π)^r` over `bins` angles in (0, π).
pub fn collision_curve_value(bits_per_band: usize, pairs_per_bin: usize, bins: usize, seed: u64) -> Result<Value, String> {
    if bins == 0 || pairs_per_bin == 0 {
        return Err("bins and pairs must be positive".into());
    }
    let hasher = make_hasher(CURVE_DIM, CURVE_BANDS, bits_per_band, seed).map_err(|e| e.to_string())?;
    let mut r = rng(seed ^ 0x5eed);
    let mut points = Vec::with_capacity(bins);
    for i in 0..bins {
        let theta = std::f64::consts::PI * (i as f64 + 0.5) / bins as f64;
        let mut hits = 0usize;
        for _ in 0..pairs_per_bin {
            let (a, b) = pair_at_angle(&mut r, theta);
            let (pa, pb) = (hasher.patterns(&a).map_err(|e| e.to_string())?, hasher.patterns(&b).map_err(|e| e.to_string())?);
            hits += pa.iter().zip(&pb).filter(|(x, y)| x == y).count();
        }
        points.push(json!({
            "theta": theta,
            "measured": hits as f64 / (pairs_per_bin * CURVE_BANDS) as f64,
            "expected": (1.0 - theta / std::f64::consts::PI).powi(bits_per_band as i32),
        }));
    }
    Ok(json!({ "bits_per_band": bits_per_band, "bands": CURVE_BANDS, "points": points }))
}

fn tree(ast: &Restriction) -> Value {
    match ast {
        Restriction::MatchAll => json!({ "op": "ALL" }),
        Restriction::And(c) => json!({ "op": "AND", "children": c.iter().map(tree).collect::<Vec<_>>() }),
        Restriction::Or(c) => json!({ "op": "OR", "children": c.iter().map(tree).collect::<Vec<_>>() }),
        Restriction::Not(c) => json!({ "op": "NOT", "children": [tree(c)] }),
        Restriction::Pair { name, value } => json!({ "op": "=", "name": name, "value": value }),
        Restriction::Compare { name, op, value } => json!({ "op": op.symbol(), "name": name, "value": value }),
    }
}

/// `{ok, canonical, tree}` or `{ok: false, offset, message}`.
pub fn parse_value(text: &str) -> Value {
    match parse_restriction(text) {
        Ok(ast) => json!({ "ok": true, "canonical": format_ast(&ast), "tree": tree(&ast) }),
        Err(e) => json!({ "ok": false, "offset": e.offset, "message": e.to_string() }),
    }
}

/// A 2-D point cloud indexed under one category, for clicking around in.
pub struct DemoIndex {
    index: IndexShardSet,
    records: Vec<ProductRecord>,
    points: Vec<Value>,
}

impl DemoIndex {
    pub fn new(n: usize, seed: u64) -> Result<Self, String> {
        let mut r = rng(seed);
        let records: Vec<ProductRecord> = (0..n)
            .map(|i| {
                let (x, y) = (r.random_range(-1.0f32..1.0), r.random_range(-1.0f32..1.0));
                let attributes = AttributeMap::new()
                    .with("category", "Dot")
                    .with("color", COLORS[r.random_range(0..COLORS.len())])
                    .with("size", SIZES[r.random_range(0..SIZES.len())])
                    .with("price", f64::from(r.random_range(1..=100)));
                ProductRecord {
                    id: format!("d{i:04}"),
                    embedding: vec![x, y].into(),
                    attributes,
                }
            })
            .collect();
        let points = records
            .iter()
            .map(|p| {
                let e = p.embedding.as_slice();
                json!({ "id": p.id, "x": e[0], "y": e[1], "attributes": p.attributes })
            })
            .collect();
        let hasher = make_hasher(2, 8, 3, seed).map_err(|e| e.to_string())?;
        let index = build_index(&records, &hasher).map_err(|e| e.to_string())?;
        Ok(DemoIndex { index, records, points })
    }

    pub fn points(&self) -> Value {
        Value::Array(self.points.clone())
    }

    /// Ids of every point the restriction admits, whether or not a search could reach it.
    pub fn matching_value(&self, restrict: &str) -> Value {
        match parse_or_all(restrict) {
            Ok(ast) => {
                let ids: Vec<&str> = self
                    .records
                    .iter()
                    .filter(|p| evaluate_restriction(&ast, &p.attributes))
                    .map(|p| p.id.as_str())
                    .collect();
                json!({ "ok": true, "ids": ids })
            }
            Err(e) => e,
        }
    }

    /// Cosine search from `(x, y)`. An empty restriction matches everything.
    pub fn search_value(&self, x: f32, y: f32, restrict: &str, k: usize, max_candidates: usize) -> Value {
        let ast = match parse_or_all(restrict) {
            Ok(ast) => ast,
            Err(e) => return e,
        };
        let run = || -> looksearch::Result<Value> {
            let config = SearchConfig::new(k, max_candidates.max(k), Metric::Cosine)?;
            let results = search(&self.index, &QueryObject::new(vec![x, y], "Dot"), &ast, &config)?;
            Ok(json!({ "ok": true, "results": results }))
        };
        run().unwrap_or_else(|e| json!({ "ok": false, "message": e.to_string() }))
    }
}

fn parse_or_all(text: &str) -> Result<Restriction, Value> {
    if text.trim().is_empty() {
        return Ok(Restriction::MatchAll);
    }
    parse_restriction(text).map_err(|e| json!({ "ok": false, "offset": e.offset, "message": e.to_string() }))
}

fn demo_generator() -> GeneratorConfig {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect();
    GeneratorConfig {
        max_depth: 3,
        string_attributes: vec![("color".into(), s(&COLORS)), ("size".into(), s(&SIZES))],
        numeric_attributes: vec!["price".into()],
        number_range: (1, 100),
    }
}

/// A random restriction over the demo attributes, printed canonically.
pub fn random_restriction_text(seed: u64) -> String {
    let mut r = rng(seed);
    loop {
        let ast = random_restriction(&mut r, &demo_generator());
        if ast != Restriction::MatchAll {
            return format_ast(&ast);
        }
    }
}

fn error_json(message: String) -> String {
    json!({ "ok": false, "message": message }).to_string()
}

#[wasm_bindgen]
pub fn collision_curve(bits_per_band: u32, pairs_per_bin: u32, bins: u32, seed: u32) -> String {
    collision_curve_value(bits_per_band as usize, pairs_per_bin as usize, bins as usize, u64::from(seed))
        .map(|v| v.to_string())
        .unwrap_or_else(error_json)
}

#[wasm_bindgen]
pub fn parse(text: &str) -> String {
    parse_value(text).to_string()
}

#[wasm_bindgen]
pub fn random_restriction_string(seed: u32) -> String {
    random_restriction_text(u64::from(seed))
}

#[wasm_bindgen]
pub struct Demo(DemoIndex);

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    pub fn new(n: u32, seed: u32) -> Result<Demo, JsError> {
        DemoIndex::new(n as usize, u64::from(seed)).map(Demo).map_err(|e| JsError::new(&e))
    }

    pub fn points(&self) -> String {
        self.0.points().to_string()
    }

    pub fn matching(&self, restrict: &str) -> String {
        self.0.matching_value(restrict).to_string()
    }

    pub fn search(&self, x: f32, y: f32, restrict: &str, k: u32, max_candidates: u32) -> String {
        self.0.search_value(x, y, restrict, k as usize, max_candidates as usize).to_string()
    }
}
