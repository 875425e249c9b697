//! Synthetic run collections with exact accuracies and tunable error
//! overlap, plus an exhaustive churn oracle for small instances.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Substream;
use crate::types::{integral_count, ClassificationRun, EvaluationSet, Label, RunCollection};

/// Parameters of a synthetic run collection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_examples: usize,
    pub n_classes: usize,
    pub n_runs: usize,
    pub accuracies: Vec<f64>,
    /// Fraction of the largest error set that every run shares.
    pub error_overlap: f64,
    pub seed: u64,
}

impl SimSpec {
    pub fn read_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let body = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&body).map_err(|e| Error::parse(path, e.line(), e.to_string()))
    }

    /// Correct-prediction count per run.
    pub fn correct_counts(&self) -> Result<Vec<usize>> {
        let infeasible = |m: String| Error::InfeasibleSpec(m);
        if self.n_examples == 0 {
            return Err(infeasible("n_examples must be at least 1".into()));
        }
        if self.n_classes < 2 {
            return Err(infeasible("n_classes must be at least 2".into()));
        }
        if self.n_runs < 2 {
            return Err(infeasible("n_runs must be at least 2".into()));
        }
        if self.accuracies.len() != self.n_runs {
            return Err(infeasible(format!(
                "{} accuracies for {} runs",
                self.accuracies.len(),
                self.n_runs
            )));
        }
        if !(0.0..=1.0).contains(&self.error_overlap) {
            return Err(infeasible(format!(
                "error_overlap {} outside [0, 1]",
                self.error_overlap
            )));
        }
        self.accuracies
            .iter()
            .map(|&a| {
                integral_count(a, self.n_examples).map_err(|_| {
                    infeasible(format!(
                        "accuracy {a} does not give an error count within 0..={}",
                        self.n_examples
                    ))
                })
            })
            .collect()
    }
}

pub fn class_label(k: usize) -> Label {
    Label::new(format!("c{k}")).expect("non-empty")
}

fn wrong_label(stream: &mut Substream, gold: usize, n_classes: usize) -> usize {
    let pick = stream.below_usize(n_classes - 1);
    if pick >= gold {
        pick + 1
    } else {
        pick
    }
}

/// Builds a collection whose run accuracies equal `spec.accuracies` exactly.
///
/// Gold labels cycle through the classes. A seeded permutation of the
/// examples (stream 0) fixes an error core of `⌊ρ·max_i e_i⌋` items whose
/// wrong labels come from a shared stream (1), so runs erring there agree.
/// Run `i` errs on the first `min(core, e_i)` core items; its remaining
/// errors are taken consecutively from the permuted non-core items by a
/// cursor that carries over between runs, keeping extra error sets disjoint
/// until the non-core pool wraps. Those wrong labels come from stream
/// `i + 2`.
pub fn synthesize_runs(spec: &SimSpec) -> Result<RunCollection> {
    let correct = spec.correct_counts()?;
    let n = spec.n_examples;
    let k = spec.n_classes;
    let gold: Vec<usize> = (0..n).map(|t| t % k).collect();
    let errors: Vec<usize> = correct.iter().map(|c| n - c).collect();
    let max_err = errors.iter().copied().max().unwrap_or(0);
    let core_size = ((spec.error_overlap * max_err as f64).floor() as usize).min(max_err);

    let mut order: Vec<usize> = (0..n).collect();
    Substream::new(spec.seed, 0).shuffle(&mut order);
    let (core, outside) = order.split_at(core_size);

    let mut shared = Substream::new(spec.seed, 1);
    let core_wrong: Vec<usize> = core
        .iter()
        .map(|&x| wrong_label(&mut shared, gold[x], k))
        .collect();

    let labels: Vec<Label> = (0..k).map(class_label).collect();
    let mut cursor = 0usize;
    let runs = errors
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let mut pred = gold.clone();
            let in_core = e.min(core_size);
            for (&x, &w) in core.iter().zip(&core_wrong).take(in_core) {
                pred[x] = w;
            }
            let extra = e - in_core;
            let mut stream = Substream::new(spec.seed, i as u64 + 2);
            for step in 0..extra {
                let x = outside[(cursor + step) % outside.len()];
                pred[x] = wrong_label(&mut stream, gold[x], k);
            }
            if !outside.is_empty() {
                cursor = (cursor + extra) % outside.len();
            }
            ClassificationRun::new(
                format!("run{i}"),
                pred.into_iter().map(|c| labels[c].clone()).collect(),
            )
        })
        .collect();

    let eval = EvaluationSet::new(
        gold.iter()
            .enumerate()
            .map(|(t, &g)| (format!("x{}", t + 1), labels[g].clone()))
            .collect(),
        Some(labels.clone()),
    )?;
    RunCollection::new(eval, runs)
}

/// Exact extremes of pairwise disagreement for fixed correct counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChurnExtrema {
    pub n_examples: usize,
    pub min_disagreements: usize,
    pub max_disagreements: usize,
}

impl ChurnExtrema {
    pub fn min(&self) -> f64 {
        self.min_disagreements as f64 / self.n_examples as f64
    }

    pub fn max(&self) -> f64 {
        self.max_disagreements as f64 / self.n_examples as f64
    }
}

pub const ORACLE_MAX_EXAMPLES: usize = 8;
pub const ORACLE_MAX_CLASSES: usize = 3;

/// Enumerates every pair of prediction vectors over `n_examples` items and
/// `n_classes` labels with exactly `correct.0` and `correct.1` matches to a
/// fixed gold vector, and returns the smallest and largest disagreement.
pub fn brute_force_churn_extrema(
    n_examples: usize,
    n_classes: usize,
    correct: (usize, usize),
) -> Result<ChurnExtrema> {
    if n_examples > ORACLE_MAX_EXAMPLES || n_classes > ORACLE_MAX_CLASSES {
        return Err(Error::InstanceTooLarge(format!(
            "n = {n_examples}, K = {n_classes}; limits are n <= {ORACLE_MAX_EXAMPLES}, K <= {ORACLE_MAX_CLASSES}"
        )));
    }
    if n_examples == 0 || n_classes < 2 {
        return Err(Error::InvalidArgument("need n >= 1 and K >= 2".into()));
    }
    if correct.0 > n_examples || correct.1 > n_examples {
        return Err(Error::InvalidArgument(format!(
            "correct counts {correct:?} exceed n = {n_examples}"
        )));
    }

    // Two bits per item; disagreement is the popcount of items whose
    // 2-bit fields differ.
    let low_bits: u32 = (0..n_examples).map(|t| 1u32 << (2 * t)).sum();
    let gold: Vec<u32> = (0..n_examples).map(|t| (t % n_classes) as u32).collect();
    let mut by_correct: Vec<Vec<u32>> = vec![Vec::new(); n_examples + 1];
    let total = (n_classes as u32).pow(n_examples as u32);
    for code in 0..total {
        let mut rest = code;
        let mut packed = 0u32;
        let mut hits = 0;
        for (t, &g) in gold.iter().enumerate() {
            let label = rest % n_classes as u32;
            rest /= n_classes as u32;
            packed |= label << (2 * t);
            if label == g {
                hits += 1;
            }
        }
        by_correct[hits].push(packed);
    }

    let (left, right) = (&by_correct[correct.0], &by_correct[correct.1]);
    let mut lo = usize::MAX;
    let mut hi = 0;
    for &a in left {
        for &b in right {
            let diff = a ^ b;
            let d = ((diff | (diff >> 1)) & low_bits).count_ones() as usize;
            lo = lo.min(d);
            hi = hi.max(d);
        }
    }
    Ok(ChurnExtrema {
        n_examples,
        min_disagreements: lo,
        max_disagreements: hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{aggregate_jitter, pairwise_jitter_class};
    use crate::types::accuracy_profile;

    fn spec(n: usize, acc: &[f64], rho: f64, seed: u64) -> SimSpec {
        SimSpec {
            n_examples: n,
            n_classes: 4,
            n_runs: acc.len(),
            accuracies: acc.to_vec(),
            error_overlap: rho,
            seed,
        }
    }

    #[test]
    fn full_overlap_equal_accuracy_gives_identical_runs() {
        let c = synthesize_runs(&spec(50, &[0.8, 0.8, 0.8], 1.0, 3)).unwrap();
        assert_eq!(aggregate_jitter(&c).unwrap(), 0.0);
    }

    #[test]
    fn zero_overlap_half_accuracy_disagrees_everywhere() {
        let c = synthesize_runs(&spec(10, &[0.5, 0.5], 0.0, 11)).unwrap();
        let r = c.runs();
        assert_eq!(
            pairwise_jitter_class(&r[0], &r[1], c.eval_set()).unwrap(),
            1.0
        );
    }

    #[test]
    fn accuracies_are_exact() {
        let s = spec(40, &[0.9, 0.75, 1.0, 0.0, 0.5], 0.5, 8);
        let c = synthesize_runs(&s).unwrap();
        let got: Vec<f64> = accuracy_profile(&c).accuracies();
        assert_eq!(got, s.accuracies);
    }

    #[test]
    fn deterministic() {
        let s = spec(30, &[0.9, 0.8, 0.7], 0.25, 5);
        assert_eq!(synthesize_runs(&s).unwrap(), synthesize_runs(&s).unwrap());
    }

    #[test]
    fn infeasible_specs() {
        assert!(matches!(
            synthesize_runs(&spec(10, &[1.2, 0.5], 0.0, 0)),
            Err(Error::InfeasibleSpec(_))
        ));
        assert!(matches!(
            synthesize_runs(&spec(10, &[0.55, 0.5], 0.0, 0)),
            Err(Error::InfeasibleSpec(_))
        ));
        let mut s = spec(10, &[0.5, 0.5], 0.0, 0);
        s.n_runs = 3;
        assert!(synthesize_runs(&s).is_err());
    }

    #[test]
    fn oracle_small_cases() {
        let e = brute_force_churn_extrema(3, 3, (2, 1)).unwrap();
        assert_eq!((e.min_disagreements, e.max_disagreements), (1, 3));
        assert!((e.min() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(e.max(), 1.0);

        let e = brute_force_churn_extrema(5, 3, (5, 5)).unwrap();
        assert_eq!((e.min_disagreements, e.max_disagreements), (0, 0));

        let e = brute_force_churn_extrema(4, 2, (2, 2)).unwrap();
        assert_eq!((e.min(), e.max()), (0.0, 1.0));
    }

    #[test]
    fn binary_both_wrong_items_agree() {
        // K = 2, n = 4, one correct each: both-wrong items must agree
        let e = brute_force_churn_extrema(4, 2, (1, 1)).unwrap();
        assert_eq!((e.min_disagreements, e.max_disagreements), (0, 2));
    }

    #[test]
    fn oracle_guardrails() {
        assert!(matches!(
            brute_force_churn_extrema(9, 2, (1, 1)),
            Err(Error::InstanceTooLarge(_))
        ));
        assert!(matches!(
            brute_force_churn_extrema(4, 4, (1, 1)),
            Err(Error::InstanceTooLarge(_))
        ));
        assert!(brute_force_churn_extrema(4, 2, (5, 1)).is_err());
    }
}
