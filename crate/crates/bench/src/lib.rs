//! Fixtures shared by the criterion benches.

use jitterlab::cdu::{DatasetItem, LabeledDataset};
use jitterlab::{synthesize_runs, Label, RunCollection, SimSpec};

/// `n_runs` synthetic runs over `n_examples` with accuracies spread 85–95%.
pub fn collection(n_examples: usize, n_runs: usize, seed: u64) -> RunCollection {
    let accuracies = (0..n_runs)
        .map(|i| {
            let correct = n_examples * (85 + (i * 10) / n_runs.max(1)) / 100;
            correct as f64 / n_examples as f64
        })
        .collect();
    synthesize_runs(&SimSpec {
        n_examples,
        n_classes: 10,
        n_runs,
        accuracies,
        error_overlap: 0.5,
        seed,
    })
    .expect("valid spec")
}

pub fn dataset(size: usize, n_classes: usize) -> LabeledDataset {
    LabeledDataset::new(
        (0..size)
            .map(|i| DatasetItem {
                id: format!("d{i}"),
                text: format!("item {i}"),
                label: Label::new(format!("c{}", (i * 7) % n_classes)).expect("non-empty"),
            })
            .collect(),
    )
    .expect("unique ids")
}
