//! Random restriction trees and grammatical, non-canonical renderings of them.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::{CmpOp, Restriction};

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Maximum [`Restriction::depth`].
    pub max_depth: usize,
    /// Names used by pairs, with their candidate values.
    pub string_attributes: Vec<(String, Vec<String>)>,
    /// Names used by comparisons.
    pub numeric_attributes: Vec<String>,
    /// Inclusive range comparison constants are drawn from.
    pub number_range: (i32, i32),
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
        GeneratorConfig {
            max_depth: 5,
            string_attributes: vec![
                ("gender".into(), s(&["Men", "Women", "unisex"])),
                ("domain".into(), s(&["shop.example", "store.example", "market.example"])),
                ("merchant".into(), s(&["acme", "globex", "initech", "umbrella"])),
                ("category".into(), s(&["Shirt", "Tie", "Sofa"])),
                ("color".into(), s(&["red", "navy blue"])),
            ],
            numeric_attributes: s(&["price", "rating"]),
            number_range: (0, 200),
        }
    }
}

fn leaf<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> Restriction {
    if cfg.numeric_attributes.is_empty() || (!cfg.string_attributes.is_empty() && rng.random_bool(0.6)) {
        let (name, values) = cfg.string_attributes.choose(rng).expect("no attributes configured");
        Restriction::pair(name.clone(), values.choose(rng).cloned().unwrap_or_default())
    } else {
        let name = cfg.numeric_attributes.choose(rng).unwrap().clone();
        let op = *CmpOp::ALL.choose(rng).unwrap();
        let (lo, hi) = cfg.number_range;
        let mut value = f64::from(rng.random_range(lo..=hi));
        if rng.random_bool(0.3) {
            value += f64::from(rng.random_range(0..100)) / 100.0;
        }
        Restriction::compare(name, op, value)
    }
}

fn node<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig, depth_left: usize) -> Restriction {
    if depth_left <= 1 || rng.random_bool(0.3) {
        return leaf(rng, cfg);
    }
    match rng.random_range(0..3) {
        0 => Restriction::not(node(rng, cfg, depth_left - 1)),
        k => {
            let n = rng.random_range(2..=4);
            let children = (0..n).map(|_| node(rng, cfg, depth_left - 1)).collect();
            if k == 1 {
                Restriction::And(children)
            } else {
                Restriction::Or(children)
            }
        }
    }
}

/// A valid tree of depth at most `cfg.max_depth`; occasionally `MatchAll`.
pub fn random_restriction<R: Rng + ?Sized>(rng: &mut R, cfg: &GeneratorConfig) -> Restriction {
    if cfg.max_depth == 0 || rng.random_bool(0.02) {
        return Restriction::MatchAll;
    }
    node(rng, cfg, cfg.max_depth)
}

fn keyword<R: Rng + ?Sized>(rng: &mut R, kw: &str) -> String {
    match rng.random_range(0..3) {
        0 => kw.to_string(),
        1 => kw.to_ascii_lowercase(),
        _ => kw
            .chars()
            .map(|c| if rng.random_bool(0.5) { c.to_ascii_lowercase() } else { c })
            .collect(),
    }
}

fn space<R: Rng + ?Sized>(rng: &mut R) -> &'static str {
    [" ", "  ", "\t", " \n "].choose(rng).unwrap()
}

fn maybe_space<R: Rng + ?Sized>(rng: &mut R) -> &'static str {
    if rng.random_bool(0.5) {
        ""
    } else {
        space(rng)
    }
}

fn atom<R: Rng + ?Sized>(rng: &mut R, s: &str, is_name: bool) -> String {
    let canonical = Restriction::pair(s, "x").to_string();
    let plain = if is_name {
        !canonical.starts_with('"')
    } else {
        !Restriction::pair("x", s).to_string().ends_with('"')
    };
    if plain && rng.random_bool(0.8) {
        s.to_string()
    } else {
        let escaped: String = s
            .chars()
            .flat_map(|c| if c == '"' || c == '\\' { vec!['\\', c] } else { vec![c] })
            .collect();
        format!("\"{escaped}\"")
    }
}

/// Grammatical text for `ast` with random spacing, keyword case and
/// parenthesization. Dropping parentheses can change the tree the text parses
/// to; the output is always accepted by the parser.
pub fn render_variant<R: Rng + ?Sized>(rng: &mut R, ast: &Restriction) -> String {
    match ast {
        Restriction::MatchAll => maybe_space(rng).to_string(),
        Restriction::Pair { name, value } => {
            format!("{}{}:{}{}", atom(rng, name, true), maybe_space(rng), maybe_space(rng), atom(rng, value, false))
        }
        Restriction::Compare { name, op, value } => {
            let num = if value.fract() == 0.0 && rng.random_bool(0.2) {
                format!("{value:.1}")
            } else {
                value.to_string()
            };
            let body = format!("{}{}{}{}{}", atom(rng, name, true), maybe_space(rng), op.symbol(), maybe_space(rng), num);
            wrap(rng, body, 0.5)
        }
        Restriction::Not(child) => {
            let inner = render_variant(rng, child);
            let body = format!("{}{}{}", keyword(rng, "NOT"), space(rng), inner);
            wrap(rng, body, 0.5)
        }
        Restriction::And(children) | Restriction::Or(children) => {
            let kw = if matches!(ast, Restriction::And(_)) { "AND" } else { "OR" };
            let parts: Vec<String> = children.iter().map(|c| render_variant(rng, c)).collect();
            let mut body = String::new();
            for (i, p) in parts.iter().enumerate() {
                if i > 0 {
                    body.push_str(space(rng));
                    body.push_str(&keyword(rng, kw));
                    body.push_str(space(rng));
                }
                body.push_str(p);
            }
            wrap(rng, body, 0.7)
        }
    }
}

fn wrap<R: Rng + ?Sized>(rng: &mut R, body: String, p: f64) -> String {
    if rng.random_bool(p) {
        format!("({}{}{})", maybe_space(rng), body, maybe_space(rng))
    } else {
        body
    }
}
