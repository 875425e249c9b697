//! Jitter (prediction churn between retrained runs), its accuracy-derived
//! bounds, accuracy dispersion, and system-wide accuracy of two-step
//! pipelines.
//!
//! Every rate is an integer count divided once at the end. Pairwise values
//! divide by the number of scored units; aggregates divide the summed count
//! by `units · N(N−1)/2`. Because the jitter aggregate and both bounds share
//! that denominator, their ordering is decided exactly by integer sums.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    accuracy_profile, sequence_accuracy_profile, AccuracyProfile, ClassificationRun, EvaluationSet,
    Label, RunCollection, SequenceEvalSet, SequenceRun, SequenceRunCollection,
};

/// Jitter between two runs `i < j`, with the pair's accuracy-implied bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseJitter {
    pub i: usize,
    pub j: usize,
    pub jitter: f64,
    pub min_bound: f64,
    pub max_bound: f64,
}

/// Full stability summary of a run collection. Rates are fractions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterReport {
    pub n_runs: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_examples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_tokens: Option<usize>,
    pub run_ids: Vec<String>,
    pub pairwise: Vec<PairwiseJitter>,
    pub jitter: f64,
    pub min_bound: f64,
    pub max_bound: f64,
    pub accuracy: Vec<f64>,
    pub accuracy_stddev: f64,
}

impl JitterReport {
    /// Symmetric `N × N` jitter matrix with a zero diagonal.
    pub fn matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.n_runs]; self.n_runs];
        for p in &self.pairwise {
            m[p.i][p.j] = p.jitter;
            m[p.j][p.i] = p.jitter;
        }
        m
    }
}

/// Correct-count bounds of one pair, in units of `total`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairBound {
    pub i: usize,
    pub j: usize,
    /// `|c_i − c_j|`
    pub min_count: usize,
    /// `min(e_i, c_j) + min(e_j, c_i)`
    pub max_count: usize,
    pub total: usize,
}

impl PairBound {
    pub fn min(&self) -> f64 {
        self.min_count as f64 / self.total as f64
    }

    pub fn max(&self) -> f64 {
        self.max_count as f64 / self.total as f64
    }
}

pub fn disagreements(a: &[Label], b: &[Label]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

fn sequence_disagreements(a: &[Vec<Label>], b: &[Vec<Label>]) -> usize {
    a.iter().zip(b).map(|(x, y)| disagreements(x, y)).sum()
}

fn n_pairs(n: usize) -> usize {
    n * (n - 1) / 2
}

fn pair_mean(summed_count: usize, units: usize, pairs: usize) -> f64 {
    summed_count as f64 / (units as f64 * pairs as f64)
}

fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn need_two(n: usize) -> Result<()> {
    if n < 2 {
        Err(Error::NeedAtLeastTwoRuns { found: n })
    } else {
        Ok(())
    }
}

/// Fraction of examples on which two runs predict different labels.
pub fn pairwise_jitter_class(
    run_i: &ClassificationRun,
    run_j: &ClassificationRun,
    eval_set: &EvaluationSet,
) -> Result<f64> {
    if eval_set.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    for run in [run_i, run_j] {
        if run.predictions().len() != eval_set.len() {
            return Err(Error::NotAligned {
                run_id: run.run_id().to_string(),
            });
        }
    }
    Ok(disagreements(run_i.predictions(), run_j.predictions()) as f64 / eval_set.len() as f64)
}

/// Mean pairwise jitter over all unordered run pairs.
pub fn aggregate_jitter(collection: &RunCollection) -> Result<f64> {
    let n = collection.n_runs();
    need_two(n)?;
    let runs = collection.runs();
    let total: usize = pairs(n)
        .map(|(i, j)| disagreements(runs[i].predictions(), runs[j].predictions()))
        .sum();
    Ok(pair_mean(total, collection.n_examples(), n_pairs(n)))
}

/// Token-level disagreement between two sequence runs, micro-averaged over
/// `Σ|x|`.
pub fn pairwise_jitter_seq(
    run_i: &SequenceRun,
    run_j: &SequenceRun,
    eval_set: &SequenceEvalSet,
) -> Result<f64> {
    if eval_set.total_tokens() == 0 {
        return Err(Error::EmptyEvalSet);
    }
    for run in [run_i, run_j] {
        let aligned = run.predictions().len() == eval_set.len()
            && run
                .predictions()
                .iter()
                .zip(eval_set.examples())
                .all(|(tags, ex)| tags.len() == ex.tokens.len());
        if !aligned {
            return Err(Error::NotAligned {
                run_id: run.run_id().to_string(),
            });
        }
    }
    Ok(
        sequence_disagreements(run_i.predictions(), run_j.predictions()) as f64
            / eval_set.total_tokens() as f64,
    )
}

pub fn aggregate_jitter_seq(collection: &SequenceRunCollection) -> Result<f64> {
    let n = collection.n_runs();
    need_two(n)?;
    let runs = collection.runs();
    let total: usize = pairs(n)
        .map(|(i, j)| sequence_disagreements(runs[i].predictions(), runs[j].predictions()))
        .sum();
    Ok(pair_mean(total, collection.total_tokens(), n_pairs(n)))
}

/// Per-pair bounds as exact counts.
pub fn pair_bounds(profile: &AccuracyProfile) -> Result<Vec<PairBound>> {
    need_two(profile.len())?;
    let runs = profile.per_run();
    Ok(pairs(runs.len())
        .map(|(i, j)| {
            let (a, b) = (&runs[i], &runs[j]);
            PairBound {
                i,
                j,
                min_count: a.correct.abs_diff(b.correct),
                max_count: a.errors().min(b.correct) + b.errors().min(a.correct),
                total: a.total,
            }
        })
        .collect())
}

/// Lower bound on aggregate jitter: mean of `|A_i − A_j|` over pairs.
pub fn min_jitter_bound(profile: &AccuracyProfile) -> Result<f64> {
    let bounds = pair_bounds(profile)?;
    let sum = bounds.iter().map(|b| b.min_count).sum();
    Ok(pair_mean(sum, profile.total(), bounds.len()))
}

/// Upper bound on aggregate jitter: mean of
/// `min(E_i, A_j) + min(E_j, A_i)` over pairs.
///
/// This counts correctness flips only. It holds and is attained for binary
/// labels, and for any label count when `A_i + A_j >= 1` for every pair.
/// With three or more classes and lower accuracies, two runs that are both
/// wrong can still disagree, and jitter can exceed this value.
pub fn max_jitter_bound(profile: &AccuracyProfile) -> Result<f64> {
    let bounds = pair_bounds(profile)?;
    let sum = bounds.iter().map(|b| b.max_count).sum();
    Ok(pair_mean(sum, profile.total(), bounds.len()))
}

/// Sample standard deviation (denominator `N − 1`) of per-run accuracy.
pub fn accuracy_stddev(profile: &AccuracyProfile) -> Result<f64> {
    let n = profile.len();
    need_two(n)?;
    let acc = profile.accuracies();
    let mean = acc.iter().sum::<f64>() / n as f64;
    let ss: f64 = acc.iter().map(|a| (a - mean) * (a - mean)).sum();
    Ok((ss / (n - 1) as f64).sqrt())
}

/// Fraction of examples where both steps of a two-step pipeline are right.
pub fn system_wide_accuracy(
    intent_correct: &HashMap<String, bool>,
    slots_correct: &HashMap<String, bool>,
) -> Result<f64> {
    if intent_correct.is_empty() && slots_correct.is_empty() {
        return Err(Error::EmptyEvalSet);
    }
    for id in slots_correct.keys() {
        if !intent_correct.contains_key(id) {
            return Err(Error::KeyMismatch { id: id.clone() });
        }
    }
    let mut both = 0usize;
    for (id, &intent_ok) in intent_correct {
        let slots_ok = *slots_correct
            .get(id)
            .ok_or_else(|| Error::KeyMismatch { id: id.clone() })?;
        if intent_ok && slots_ok {
            both += 1;
        }
    }
    Ok(both as f64 / intent_correct.len() as f64)
}

/// Per-example correctness of one classification run.
pub fn intent_correctness(collection: &RunCollection, run: usize) -> Result<HashMap<String, bool>> {
    let r = collection.runs().get(run).ok_or(Error::IndexOutOfRange {
        index: run,
        n_runs: collection.n_runs(),
    })?;
    let eval = collection.eval_set();
    Ok(eval
        .ids()
        .iter()
        .zip(eval.gold().iter().zip(r.predictions()))
        .map(|(id, (g, p))| (id.clone(), g == p))
        .collect())
}

/// Per-example exact whole-sequence match of one sequence run.
pub fn slot_correctness(
    collection: &SequenceRunCollection,
    run: usize,
) -> Result<HashMap<String, bool>> {
    let r = collection.runs().get(run).ok_or(Error::IndexOutOfRange {
        index: run,
        n_runs: collection.n_runs(),
    })?;
    Ok(collection
        .eval_set()
        .examples()
        .iter()
        .zip(r.predictions())
        .map(|(ex, pred)| (ex.id.clone(), &ex.gold == pred))
        .collect())
}

fn assemble(
    run_ids: Vec<String>,
    pair_counts: Vec<(usize, usize, usize)>,
    units: usize,
    profile: &AccuracyProfile,
) -> Result<JitterReport> {
    let bounds = pair_bounds(profile)?;
    let total: usize = pair_counts.iter().map(|&(_, _, c)| c).sum();
    let pairwise = pair_counts
        .iter()
        .zip(&bounds)
        .map(|(&(i, j, count), b)| PairwiseJitter {
            i,
            j,
            jitter: count as f64 / units as f64,
            min_bound: b.min(),
            max_bound: b.max(),
        })
        .collect();
    Ok(JitterReport {
        n_runs: run_ids.len(),
        n_examples: None,
        n_tokens: None,
        run_ids,
        pairwise,
        jitter: pair_mean(total, units, bounds.len()),
        min_bound: min_jitter_bound(profile)?,
        max_bound: max_jitter_bound(profile)?,
        accuracy: profile.accuracies(),
        accuracy_stddev: accuracy_stddev(profile)?,
    })
}

pub fn jitter_report(collection: &RunCollection) -> Result<JitterReport> {
    need_two(collection.n_runs())?;
    let runs = collection.runs();
    let counts = pairs(runs.len())
        .map(|(i, j)| {
            (
                i,
                j,
                disagreements(runs[i].predictions(), runs[j].predictions()),
            )
        })
        .collect();
    let ids = runs.iter().map(|r| r.run_id().to_string()).collect();
    let mut report = assemble(
        ids,
        counts,
        collection.n_examples(),
        &accuracy_profile(collection),
    )?;
    report.n_examples = Some(collection.n_examples());
    Ok(report)
}

pub fn sequence_jitter_report(collection: &SequenceRunCollection) -> Result<JitterReport> {
    need_two(collection.n_runs())?;
    let runs = collection.runs();
    let counts = pairs(runs.len())
        .map(|(i, j)| {
            (
                i,
                j,
                sequence_disagreements(runs[i].predictions(), runs[j].predictions()),
            )
        })
        .collect();
    let ids = runs.iter().map(|r| r.run_id().to_string()).collect();
    let mut report = assemble(
        ids,
        counts,
        collection.total_tokens(),
        &sequence_accuracy_profile(collection),
    )?;
    report.n_tokens = Some(collection.total_tokens());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::{SeqExample, SequenceEvalSet};

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn labels(s: &[&str]) -> Vec<Label> {
        s.iter().map(|x| l(x)).collect()
    }

    fn collection(gold: &[&str], runs: &[&[&str]]) -> RunCollection {
        let eval = EvaluationSet::new(
            gold.iter()
                .enumerate()
                .map(|(i, g)| (format!("e{i}"), l(g)))
                .collect(),
            None,
        )
        .unwrap();
        let runs = runs
            .iter()
            .enumerate()
            .map(|(i, r)| ClassificationRun::new(format!("R{}", i + 1), labels(r)))
            .collect();
        RunCollection::new(eval, runs).unwrap()
    }

    #[test]
    fn identical_runs_have_zero_jitter() {
        let c = collection(&["a", "b"], &[&["a", "b"], &["a", "b"]]);
        let r = c.runs();
        assert_eq!(
            pairwise_jitter_class(&r[0], &r[1], c.eval_set()).unwrap(),
            0.0
        );
    }

    #[test]
    fn total_disagreement_is_one() {
        let c = collection(&["a", "b"], &[&["a", "b"], &["b", "a"]]);
        let r = c.runs();
        assert_eq!(
            pairwise_jitter_class(&r[0], &r[1], c.eval_set()).unwrap(),
            1.0
        );
    }

    #[test]
    fn three_run_aggregate_by_enumeration() {
        // disagreement counts: R1/R2 = 1, R1/R3 = 1, R2/R3 = 2, over 4 examples
        let c = collection(
            &["a", "a", "b", "b"],
            &[
                &["a", "a", "b", "b"],
                &["a", "b", "b", "b"],
                &["a", "a", "a", "b"],
            ],
        );
        let j = aggregate_jitter(&c).unwrap();
        assert!((j - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_run_aggregate_equals_pairwise() {
        let c = collection(&["a", "a", "b"], &[&["a", "b", "b"], &["b", "b", "b"]]);
        let r = c.runs();
        assert_eq!(
            aggregate_jitter(&c).unwrap(),
            pairwise_jitter_class(&r[0], &r[1], c.eval_set()).unwrap()
        );
    }

    #[test]
    fn aggregate_needs_two_runs() {
        let c = collection(&["a"], &[&["a"]]);
        assert!(matches!(
            aggregate_jitter(&c),
            Err(Error::NeedAtLeastTwoRuns { found: 1 })
        ));
    }

    #[test]
    fn ten_identical_runs() {
        let r: &[&str] = &["a", "b", "c"];
        let c = collection(&["a", "b", "c"], &[r; 10]);
        assert_eq!(aggregate_jitter(&c).unwrap(), 0.0);
    }

    fn seq_eval() -> SequenceEvalSet {
        SequenceEvalSet::new(vec![
            SeqExample {
                id: "s1".into(),
                tokens: vec!["w1".into(), "w2".into(), "w3".into()],
                gold: labels(&["O", "B", "I"]),
            },
            SeqExample {
                id: "s2".into(),
                tokens: vec!["w4".into()],
                gold: labels(&["O"]),
            },
        ])
        .unwrap()
    }

    #[test]
    fn sequence_jitter_is_token_micro_average() {
        let eval = seq_eval();
        let a = SequenceRun::new("a", vec![labels(&["O", "B", "I"]), labels(&["O"])]);
        let b = SequenceRun::new("b", vec![labels(&["O", "B", "O"]), labels(&["O"])]);
        assert_eq!(pairwise_jitter_seq(&a, &a, &eval).unwrap(), 0.0);
        assert_eq!(pairwise_jitter_seq(&a, &b, &eval).unwrap(), 0.25);

        // pairwise {1/4, 0, 1/4} -> 1/6
        let c = SequenceRunCollection::new(eval, vec![a.clone(), b, a.with_id("c")]).unwrap();
        assert!((aggregate_jitter_seq(&c).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    impl SequenceRun {
        fn with_id(&self, id: &str) -> SequenceRun {
            SequenceRun::new(id, self.predictions().to_vec())
        }
    }

    #[test]
    fn min_bound_values() {
        let p = AccuracyProfile::from_counts(100, &[90, 91, 92]).unwrap();
        let b = pair_bounds(&p).unwrap();
        assert_eq!(b.iter().map(|x| x.min_count).collect::<Vec<_>>(), [1, 2, 1]);
        assert!((min_jitter_bound(&p).unwrap() - 0.04 / 3.0).abs() < 1e-15);

        let eq = AccuracyProfile::from_counts(10, &[7, 7, 7]).unwrap();
        assert_eq!(min_jitter_bound(&eq).unwrap(), 0.0);

        let half = AccuracyProfile::from_fractions(2, &[1.0, 0.5]).unwrap();
        assert_eq!(min_jitter_bound(&half).unwrap(), 0.5);
    }

    #[test]
    fn max_bound_values() {
        let p = AccuracyProfile::from_counts(100, &[90, 91, 92]).unwrap();
        let b = pair_bounds(&p).unwrap();
        assert_eq!(
            b.iter().map(|x| x.max_count).collect::<Vec<_>>(),
            [19, 18, 17]
        );
        assert_eq!(max_jitter_bound(&p).unwrap(), 0.18);

        let perfect = AccuracyProfile::from_fractions(4, &[1.0, 1.0]).unwrap();
        assert_eq!(max_jitter_bound(&perfect).unwrap(), 0.0);

        let coin = AccuracyProfile::from_fractions(4, &[0.5, 0.5]).unwrap();
        assert_eq!(max_jitter_bound(&coin).unwrap(), 1.0);
    }

    #[test]
    fn bounds_need_two_runs() {
        let p = AccuracyProfile::from_counts(10, &[5]).unwrap();
        assert!(min_jitter_bound(&p).is_err());
        assert!(max_jitter_bound(&p).is_err());
        assert!(accuracy_stddev(&p).is_err());
    }

    #[test]
    fn stddev_closed_forms() {
        let p = AccuracyProfile::from_counts(100, &[90, 92]).unwrap();
        assert!((accuracy_stddev(&p).unwrap() - (2.0f64 * 0.01 * 0.01).sqrt()).abs() < 1e-12);
        let p = AccuracyProfile::from_counts(100, &[90, 91, 92]).unwrap();
        assert!((accuracy_stddev(&p).unwrap() - 0.01).abs() < 1e-12);
        let p = AccuracyProfile::from_counts(100, &[91, 91, 91]).unwrap();
        assert_eq!(accuracy_stddev(&p).unwrap(), 0.0);
    }

    fn bool_map(pairs: &[(&str, bool)]) -> HashMap<String, bool> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn system_wide_intersection() {
        let intent = bool_map(&[("e1", true), ("e2", true), ("e3", false)]);
        let slots = bool_map(&[("e1", false), ("e2", true), ("e3", true)]);
        assert!((system_wide_accuracy(&intent, &slots).unwrap() - 1.0 / 3.0).abs() < 1e-15);

        let all = bool_map(&[("e1", true), ("e2", true)]);
        assert_eq!(system_wide_accuracy(&all, &all).unwrap(), 1.0);

        let none = bool_map(&[("e1", false), ("e2", false)]);
        assert_eq!(system_wide_accuracy(&none, &all).unwrap(), 0.0);
    }

    #[test]
    fn system_wide_errors() {
        let a = bool_map(&[("e1", true)]);
        let b = bool_map(&[("e2", true)]);
        assert!(matches!(
            system_wide_accuracy(&a, &b),
            Err(Error::KeyMismatch { .. })
        ));
        let empty = HashMap::new();
        assert!(matches!(
            system_wide_accuracy(&empty, &empty),
            Err(Error::EmptyEvalSet)
        ));
    }

    #[test]
    fn slot_correctness_is_whole_sequence_match() {
        let eval = seq_eval();
        let run = SequenceRun::new("a", vec![labels(&["O", "B", "O"]), labels(&["O"])]);
        let c = SequenceRunCollection::new(eval, vec![run]).unwrap();
        let m = slot_correctness(&c, 0).unwrap();
        assert!(!m["s1"]);
        assert!(m["s2"]);
    }

    #[test]
    fn report_matrix_is_symmetric() {
        let c = collection(
            &["a", "a", "b", "b"],
            &[
                &["a", "a", "b", "b"],
                &["a", "b", "b", "b"],
                &["a", "a", "a", "b"],
            ],
        );
        let report = jitter_report(&c).unwrap();
        let m = report.matrix();
        for (i, row) in m.iter().enumerate() {
            assert_eq!(row[i], 0.0);
            for (j, &v) in row.iter().enumerate() {
                assert_eq!(v, m[j][i]);
            }
        }
        assert_eq!(report.jitter, aggregate_jitter(&c).unwrap());
        assert!(report.min_bound <= report.jitter && report.jitter <= report.max_bound);
    }
}
