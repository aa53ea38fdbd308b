//! Weakly supervised single-product dataset generation.
//!
//! Pass 1 admits corpus items with a merchant-provided category, a white
//! background and a largest detected box covering at least 80% of the image.
//! Pass 2 walks the admitted items in order and keeps each one while its
//! category is still below the cap taken from the scene dataset distribution.
//! Detector output and the white-background flag are inputs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::BoundingBox;

/// Minimum share of the image the largest box must cover.
pub const DOMINANT_AREA_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub id: String,
    pub image_width: f64,
    pub image_height: f64,
    #[serde(default)]
    pub category: Option<String>,
    pub merchant_provided: bool,
    pub white_background: bool,
    #[serde(default)]
    pub detected_boxes: Vec<BoundingBox>,
}

/// Per-category example caps.
pub type SceneDistribution = BTreeMap<String, usize>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleProductExample {
    pub id: String,
    pub category: String,
    #[serde(rename = "box")]
    pub bbox: BoundingBox,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationSummary {
    pub admitted: usize,
    pub rejected_no_merchant_cat: usize,
    pub rejected_not_white: usize,
    pub rejected_small_box: usize,
    pub rejected_cap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationOutput {
    pub examples: Vec<SingleProductExample>,
    pub summary: GenerationSummary,
}

pub fn is_dominant_box(bbox: &BoundingBox, image_width: f64, image_height: f64) -> bool {
    bbox.width() * bbox.height() >= DOMINANT_AREA_FRACTION * (image_width * image_height)
}

/// Largest box by area; ties go to the earliest box.
fn largest_box(boxes: &[BoundingBox]) -> Option<&BoundingBox> {
    boxes.iter().fold(None, |best: Option<&BoundingBox>, b| match best {
        Some(cur) if cur.area() >= b.area() => Some(cur),
        _ => Some(b),
    })
}

pub fn generate_single_product_dataset(corpus: &[CorpusItem], caps: &SceneDistribution) -> GenerationOutput {
    let mut summary = GenerationSummary::default();

    let mut raw = Vec::new();
    for item in corpus {
        let category = match (&item.category, item.merchant_provided) {
            (Some(c), true) => c,
            _ => {
                summary.rejected_no_merchant_cat += 1;
                continue;
            }
        };
        if !item.white_background {
            summary.rejected_not_white += 1;
            continue;
        }
        match largest_box(&item.detected_boxes) {
            Some(b) if is_dominant_box(b, item.image_width, item.image_height) => raw.push((item, category, b)),
            _ => summary.rejected_small_box += 1,
        }
    }

    let mut taken: BTreeMap<&str, usize> = BTreeMap::new();
    let mut examples = Vec::new();
    for (item, category, bbox) in raw {
        let Some(&limit) = caps.get(category) else {
            summary.rejected_cap += 1;
            continue;
        };
        let num = taken.entry(category).or_default();
        if *num < limit {
            *num += 1;
            examples.push(SingleProductExample {
                id: item.id.clone(),
                category: category.clone(),
                bbox: bbox.clone(),
            });
        } else {
            summary.rejected_cap += 1;
        }
    }
    summary.admitted = examples.len();
    GenerationOutput { examples, summary }
}
