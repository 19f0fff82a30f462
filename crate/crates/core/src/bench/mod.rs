//! Accuracy benchmarking: metrics, datasets, dense targets and batch runs.

pub mod augment;
pub mod dataset;
pub mod evaluate;
pub mod metrics;
pub mod suites;

pub use augment::{cycle_variation, interpolate_annotation, DEFAULT_VARIATION_THRESHOLD};
pub use dataset::{manifest_text, Annotation, Manifest, ManifestEntry, Split};
pub use evaluate::{
    count_sequence, evaluate, evaluate_sequences, load_sequences, speed_experiment, speed_table, EstimatorChoice,
    Prediction, Report, ReportRow, Sequence,
};
pub use metrics::{mae, oboa, off_by_one, relative_error};
