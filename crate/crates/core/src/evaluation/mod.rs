//! Labeled datasets, multi-label metrics, the published-table audit and the
//! benchmark runner.

pub mod audit;
pub mod bench;
pub mod dataset;
pub mod metrics;

pub use audit::{audit_rows, inconsistent_labels, AuditFinding, PrintedRow, AUDIT_TOLERANCE, REFERENCE_METHODS, REFERENCE_PER_INTENT};
pub use bench::{
    named_config, named_configs, run_benchmark, write_results, BenchConfig, BenchRow, BenchmarkTable, ExampleFailure,
    PredictionCache,
};
pub use dataset::{load_dataset, parse_dataset, DatasetError, LabeledExample};
pub use metrics::{f1, score, Counts, IntentMetrics, MetricsReport, Prf, Predictions};
