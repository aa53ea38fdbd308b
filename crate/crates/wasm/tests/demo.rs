use looksearch::{evaluate_restriction, parse_restriction};
use looksearch::model::AttributeMap;
use looksearch_wasm::{collision_curve_value, parse_value, random_restriction_text, DemoIndex};
use serde_json::Value;

#[test]
fn collision_curve_tracks_theory() {
    for r in [1, 2, 4] {
        let curve = collision_curve_value(r, 400, 12, 3).unwrap();
        let points = curve["points"].as_array().unwrap();
        assert_eq!(points.len(), 12);
        for p in points {
            let (m, e) = (p["measured"].as_f64().unwrap(), p["expected"].as_f64().unwrap());
            assert!((m - e).abs() < 0.05, "r={r} theta={} measured {m} expected {e}", p["theta"]);
        }
    }
    assert!(collision_curve_value(0, 10, 10, 1).is_err());
    assert!(collision_curve_value(2, 10, 0, 1).is_err());
}

#[test]
fn parse_reports_tree_or_offset() {
    let ok = parse_value("color:red AND NOT (price > 50 OR size:S)");
    assert_eq!(ok["ok"], true);
    assert_eq!(ok["tree"]["op"], "AND");
    assert_eq!(ok["tree"]["children"][1]["op"], "NOT");
    let again = parse_value(ok["canonical"].as_str().unwrap());
    assert_eq!(again["canonical"], ok["canonical"]);

    let bad = parse_value("color:red AND");
    assert_eq!(bad["ok"], false);
    assert_eq!(bad["offset"], 13);
}

fn attrs(point: &Value) -> AttributeMap {
    serde_json::from_value(point["attributes"].clone()).unwrap()
}

#[test]
fn demo_search_respects_restrictions() {
    let demo = DemoIndex::new(400, 11).unwrap();
    let points = demo.points();
    let by_id: std::collections::HashMap<&str, &Value> =
        points.as_array().unwrap().iter().map(|p| (p["id"].as_str().unwrap(), p)).collect();
    assert_eq!(by_id.len(), 400);

    for seed in 0..50 {
        let text = random_restriction_text(seed);
        let ast = parse_restriction(&text).unwrap();
        let out = demo.search_value(0.3, -0.7, &text, 10, 400);
        assert_eq!(out["ok"], true, "{text}: {out}");
        let results = out["results"].as_array().unwrap();
        let mut last = f64::NEG_INFINITY;
        for r in results {
            let p = by_id[r["id"].as_str().unwrap()];
            assert!(evaluate_restriction(&ast, &attrs(p)), "{text} admitted {}", r["id"]);
            let d = r["distance"].as_f64().unwrap();
            assert!(d >= last);
            last = d;
        }
    }

    let all = demo.search_value(1.0, 0.0, "", 5, 400);
    assert_eq!(all["results"].as_array().unwrap().len(), 5);
    let bad = demo.search_value(1.0, 0.0, "price >", 5, 400);
    assert_eq!(bad["ok"], false);
}

#[test]
fn random_restrictions_are_deterministic_and_canonical() {
    for seed in 0..100 {
        let text = random_restriction_text(seed);
        assert_eq!(text, random_restriction_text(seed));
        assert_eq!(parse_value(&text)["canonical"], text.as_str());
    }
}

#[test]
fn matching_lists_every_admitted_point() {
    let demo = DemoIndex::new(200, 5).unwrap();
    let points = demo.points();
    let expected: Vec<&str> = points
        .as_array()
        .unwrap()
        .iter()
        .filter(|p| p["attributes"]["color"] == "red" && p["attributes"]["price"].as_f64().unwrap() < 50.0)
        .map(|p| p["id"].as_str().unwrap())
        .collect();
    let out = demo.matching_value("color:red AND price < 50");
    let got: Vec<&str> = out["ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(!got.is_empty());
    assert_eq!(got, expected);
    assert_eq!(demo.matching_value("").get("ids").unwrap().as_array().unwrap().len(), 200);
    assert_eq!(demo.matching_value("NOT")["ok"], false);
}
