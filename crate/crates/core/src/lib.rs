//! Model stability under continuous data updates.
//!
//! Jitter is the average fraction of test examples (or tokens) whose
//! predictions change between models retrained on slightly different
//! versions of the training data. This crate computes it from aligned
//! prediction files, bounds it from per-run accuracy, generates the
//! perturbed training sets, and provides the supporting analyses.

pub mod analysis;
pub mod cdu;
pub mod error;
pub mod ingest;
pub mod metrics;
pub mod report;
pub mod rng;
pub mod simulator;
pub mod types;

pub use analysis::{
    complexity_correlation, ensemble_predict, overlap_table, unstable_examples, ComplexityPoint,
    OverlapTable,
};
pub use cdu::{generate_cdu_splits, CduPlan, DatasetItem, LabeledDataset, Strategy};
pub use error::{Error, Result};
pub use ingest::{ingest_classification, ingest_sequence};
pub use metrics::{
    accuracy_stddev, aggregate_jitter, aggregate_jitter_seq, jitter_report, max_jitter_bound,
    min_jitter_bound, pairwise_jitter_class, pairwise_jitter_seq, sequence_jitter_report,
    system_wide_accuracy, JitterReport, PairwiseJitter,
};
pub use report::{emit_tradeoff, render_jitter_report, Format, TradeoffPoint};
pub use simulator::{brute_force_churn_extrema, synthesize_runs, SimSpec};
pub use types::{
    accuracy_profile, sequence_accuracy_profile, AccuracyProfile, ClassificationRun, EvaluationSet,
    Label, RunCollection, SeqExample, SequenceEvalSet, SequenceRun, SequenceRunCollection,
};
