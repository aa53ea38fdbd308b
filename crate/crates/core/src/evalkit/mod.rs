//! Offline measurement protocols: retrieval precision against a distractor
//! corpus, detection precision / recall / mAP, human relevance aggregation and
//! labeling-quality metrics.

pub mod detection;
pub mod labels;
pub mod relevance;
pub mod retrieval;

pub use detection::{
    detection_map, detection_pr, iou, rollup_categories, select_operating_threshold,
    select_operating_thresholds_per_class, DetectionSet, PrecisionRecall,
};
pub use labels::{calibration_rate, label_accuracy, label_consistency, LabelEvent};
pub use relevance::{relevance_at_k, Rating, RelevanceRating, RelevanceReport};
pub use retrieval::{retrieval_precision_at_k, MatchPair, RetrievalEvalParams};
