//! Domain types for aligned prediction runs.
//!
//! Runs are aligned to their evaluation set by example id at construction
//! time and stored positionally afterwards, so every later computation is a
//! plain slice walk. All types are immutable once built.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A class or tag emitted by a model. Compared byte-for-byte.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Label(String);

impl Label {
    pub fn new(value: impl Into<String>) -> Result<Self> {
        let value = value.into();
        if value.is_empty() {
            return Err(Error::EmptyLabel);
        }
        Ok(Label(value))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Label {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        Label::new(value)
    }
}

impl From<Label> for String {
    fn from(label: Label) -> Self {
        label.0
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The fixed test set `X` with gold labels and the task's label alphabet.
#[derive(Clone, Debug, PartialEq)]
pub struct EvaluationSet {
    ids: Vec<String>,
    gold: Vec<Label>,
    alphabet: Vec<Label>,
    index: HashMap<String, usize>,
}

impl EvaluationSet {
    /// Builds an evaluation set. When `alphabet` is `None` it becomes the
    /// gold labels in first-seen order.
    pub fn new(examples: Vec<(String, Label)>, alphabet: Option<Vec<Label>>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyEvalSet);
        }
        let mut index = HashMap::with_capacity(examples.len());
        let mut ids = Vec::with_capacity(examples.len());
        let mut gold = Vec::with_capacity(examples.len());
        for (pos, (id, label)) in examples.into_iter().enumerate() {
            if index.insert(id.clone(), pos).is_some() {
                return Err(Error::DuplicateId {
                    id,
                    context: "evaluation set".into(),
                });
            }
            ids.push(id);
            gold.push(label);
        }

        let alphabet = match alphabet {
            Some(alphabet) => {
                let mut seen = HashSet::new();
                for label in &alphabet {
                    if !seen.insert(label) {
                        return Err(Error::DuplicateId {
                            id: label.to_string(),
                            context: "label alphabet".into(),
                        });
                    }
                }
                for (id, label) in ids.iter().zip(&gold) {
                    if !seen.contains(label) {
                        return Err(Error::UnknownLabel {
                            example_id: id.clone(),
                            label: label.to_string(),
                        });
                    }
                }
                alphabet
            }
            None => {
                let mut seen = HashSet::new();
                gold.iter().filter(|l| seen.insert(*l)).cloned().collect()
            }
        };

        Ok(EvaluationSet {
            ids,
            gold,
            alphabet,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn gold(&self) -> &[Label] {
        &self.gold
    }

    pub fn alphabet(&self) -> &[Label] {
        &self.alphabet
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Position of `label` in the canonical alphabet order.
    pub fn alphabet_rank(&self, label: &Label) -> Option<usize> {
        self.alphabet.iter().position(|l| l == label)
    }

    /// Same examples and alphabet with the gold labels replaced.
    pub fn with_gold(&self, gold: Vec<Label>) -> Result<Self> {
        if gold.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} gold labels, got {}",
                self.len(),
                gold.len()
            )));
        }
        let examples = self.ids.iter().cloned().zip(gold).collect();
        EvaluationSet::new(examples, Some(self.alphabet.clone()))
    }

    /// True when both sets hold the same example ids, regardless of order.
    pub fn same_examples(&self, other: &EvaluationSet) -> bool {
        self.len() == other.len() && self.ids.iter().all(|id| other.index.contains_key(id))
    }
}

/// Predictions `Y_i` of one trained model, stored in evaluation-set order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationRun {
    run_id: String,
    predictions: Vec<Label>,
}

impl ClassificationRun {
    /// Wraps predictions that are already in evaluation-set order.
    pub fn new(run_id: impl Into<String>, predictions: Vec<Label>) -> Self {
        ClassificationRun {
            run_id: run_id.into(),
            predictions,
        }
    }

    /// Aligns an id-keyed prediction map to `eval_set`.
    pub fn from_map(
        run_id: impl Into<String>,
        mut predictions: HashMap<String, Label>,
        eval_set: &EvaluationSet,
    ) -> Result<Self> {
        let run_id = run_id.into();
        let mut aligned = Vec::with_capacity(eval_set.len());
        for id in eval_set.ids() {
            match predictions.remove(id) {
                Some(label) => aligned.push(label),
                None => {
                    return Err(Error::MissingExample {
                        run_id,
                        example_id: id.clone(),
                    })
                }
            }
        }
        if let Some(extra) = predictions.into_keys().min() {
            return Err(Error::UnknownExample {
                run_id,
                example_id: extra,
            });
        }
        Ok(ClassificationRun {
            run_id,
            predictions: aligned,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn predictions(&self) -> &[Label] {
        &self.predictions
    }

    pub fn with_run_id(mut self, run_id: impl Into<String>) -> Self {
        self.run_id = run_id.into();
        self
    }
}

/// `N` runs aligned to a single evaluation set.
#[derive(Clone, Debug, PartialEq)]
pub struct RunCollection {
    eval_set: EvaluationSet,
    runs: Vec<ClassificationRun>,
}

impl RunCollection {
    pub fn new(eval_set: EvaluationSet, runs: Vec<ClassificationRun>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidArgument(
                "a run collection needs at least one run".into(),
            ));
        }
        let mut seen = HashSet::new();
        for run in &runs {
            if !seen.insert(run.run_id()) {
                return Err(Error::DuplicateId {
                    id: run.run_id.clone(),
                    context: "run ids".into(),
                });
            }
            if run.predictions.len() != eval_set.len() {
                return Err(Error::NotAligned {
                    run_id: run.run_id.clone(),
                });
            }
        }
        Ok(RunCollection { eval_set, runs })
    }

    pub fn eval_set(&self) -> &EvaluationSet {
        &self.eval_set
    }

    pub fn runs(&self) -> &[ClassificationRun] {
        &self.runs
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn n_examples(&self) -> usize {
        self.eval_set.len()
    }

    /// A new collection holding only the runs at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let runs = indices
            .iter()
            .map(|&i| {
                self.runs.get(i).cloned().ok_or(Error::IndexOutOfRange {
                    index: i,
                    n_runs: self.runs.len(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        RunCollection::new(self.eval_set.clone(), runs)
    }

    /// Predictions that fall outside the gold alphabet, as
    /// `(run_id, example_id, label)`. They are legal and count as errors.
    pub fn out_of_alphabet(&self) -> Vec<(&str, &str, &Label)> {
        let known: HashSet<&Label> = self.eval_set.alphabet().iter().collect();
        self.runs
            .iter()
            .flat_map(|run| {
                run.predictions
                    .iter()
                    .zip(self.eval_set.ids())
                    .filter(|(label, _)| !known.contains(label))
                    .map(move |(label, id)| (run.run_id(), id.as_str(), label))
            })
            .collect()
    }
}

/// One sequence-labeling example: tokens and their gold tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqExample {
    pub id: String,
    pub tokens: Vec<String>,
    pub gold: Vec<Label>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceEvalSet {
    examples: Vec<SeqExample>,
    index: HashMap<String, usize>,
    total_tokens: usize,
}

impl SequenceEvalSet {
    pub fn new(examples: Vec<SeqExample>) -> Result<Self> {
        let mut index = HashMap::with_capacity(examples.len());
        let mut total_tokens = 0;
        for (pos, ex) in examples.iter().enumerate() {
            if index.insert(ex.id.clone(), pos).is_some() {
                return Err(Error::DuplicateId {
                    id: ex.id.clone(),
                    context: "evaluation set".into(),
                });
            }
            if ex.tokens.len() != ex.gold.len() {
                return Err(Error::LengthMismatch {
                    context: "gold".into(),
                    example_id: ex.id.clone(),
                    expected: ex.tokens.len(),
                    found: ex.gold.len(),
                });
            }
            total_tokens += ex.tokens.len();
        }
        if total_tokens == 0 {
            return Err(Error::EmptyEvalSet);
        }
        Ok(SequenceEvalSet {
            examples,
            index,
            total_tokens,
        })
    }

    pub fn examples(&self) -> &[SeqExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    /// `Σ|x|` over all examples.
    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }
}

/// Per-example predicted tag sequences of one model, in evaluation-set order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SequenceRun {
    run_id: String,
    predictions: Vec<Vec<Label>>,
}

impl SequenceRun {
    pub fn new(run_id: impl Into<String>, predictions: Vec<Vec<Label>>) -> Self {
        SequenceRun {
            run_id: run_id.into(),
            predictions,
        }
    }

    pub fn from_map(
        run_id: impl Into<String>,
        mut predictions: HashMap<String, Vec<Label>>,
        eval_set: &SequenceEvalSet,
    ) -> Result<Self> {
        let run_id = run_id.into();
        let mut aligned = Vec::with_capacity(eval_set.len());
        for ex in eval_set.examples() {
            match predictions.remove(&ex.id) {
                Some(tags) => aligned.push(tags),
                None => {
                    return Err(Error::MissingExample {
                        run_id,
                        example_id: ex.id.clone(),
                    })
                }
            }
        }
        if let Some(extra) = predictions.into_keys().min() {
            return Err(Error::UnknownExample {
                run_id,
                example_id: extra,
            });
        }
        Ok(SequenceRun {
            run_id,
            predictions: aligned,
        })
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    pub fn predictions(&self) -> &[Vec<Label>] {
        &self.predictions
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SequenceRunCollection {
    eval_set: SequenceEvalSet,
    runs: Vec<SequenceRun>,
}

impl SequenceRunCollection {
    pub fn new(eval_set: SequenceEvalSet, runs: Vec<SequenceRun>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidArgument(
                "a run collection needs at least one run".into(),
            ));
        }
        let mut seen = HashSet::new();
        for run in &runs {
            if !seen.insert(run.run_id()) {
                return Err(Error::DuplicateId {
                    id: run.run_id.clone(),
                    context: "run ids".into(),
                });
            }
            if run.predictions.len() != eval_set.len() {
                return Err(Error::NotAligned {
                    run_id: run.run_id.clone(),
                });
            }
            for (ex, tags) in eval_set.examples().iter().zip(&run.predictions) {
                if tags.len() != ex.tokens.len() {
                    return Err(Error::LengthMismatch {
                        context: format!("run `{}`", run.run_id),
                        example_id: ex.id.clone(),
                        expected: ex.tokens.len(),
                        found: tags.len(),
                    });
                }
            }
        }
        Ok(SequenceRunCollection { eval_set, runs })
    }

    /// Views a classification collection as length-1 sequences.
    pub fn from_classification(collection: &RunCollection) -> Result<Self> {
        let eval = collection.eval_set();
        let examples = eval
            .ids()
            .iter()
            .zip(eval.gold())
            .map(|(id, gold)| SeqExample {
                id: id.clone(),
                tokens: vec![id.clone()],
                gold: vec![gold.clone()],
            })
            .collect();
        let runs = collection
            .runs()
            .iter()
            .map(|run| {
                SequenceRun::new(
                    run.run_id(),
                    run.predictions().iter().map(|l| vec![l.clone()]).collect(),
                )
            })
            .collect();
        SequenceRunCollection::new(SequenceEvalSet::new(examples)?, runs)
    }

    pub fn eval_set(&self) -> &SequenceEvalSet {
        &self.eval_set
    }

    pub fn runs(&self) -> &[SequenceRun] {
        &self.runs
    }

    pub fn n_runs(&self) -> usize {
        self.runs.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.eval_set.total_tokens()
    }
}

/// Correct-prediction count of one run over `total` scored units
/// (examples or tokens).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunAccuracy {
    pub run_id: String,
    pub correct: usize,
    pub total: usize,
}

impl RunAccuracy {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }

    /// Defined as `1 − accuracy`.
    pub fn error_rate(&self) -> f64 {
        1.0 - self.accuracy()
    }

    pub fn errors(&self) -> usize {
        self.total - self.correct
    }
}

/// Per-run accuracy `A_i` and error rate `E_i`.
///
/// Counts are kept alongside the fractions so bounds can be evaluated as
/// exact integer ratios.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccuracyProfile {
    per_run: Vec<RunAccuracy>,
}

impl AccuracyProfile {
    pub fn new(per_run: Vec<RunAccuracy>) -> Result<Self> {
        let total = match per_run.first() {
            Some(first) => first.total,
            None => return Err(Error::EmptyInput),
        };
        if total == 0 {
            return Err(Error::EmptyEvalSet);
        }
        for run in &per_run {
            if run.total != total {
                return Err(Error::InvalidArgument(
                    "all runs in a profile must be scored over the same units".into(),
                ));
            }
            if run.correct > run.total {
                return Err(Error::InvalidArgument(format!(
                    "run `{}` has more correct predictions than units",
                    run.run_id
                )));
            }
        }
        Ok(AccuracyProfile { per_run })
    }

    /// Profile from raw correct counts; runs are named `r0`, `r1`, ...
    pub fn from_counts(total: usize, correct: &[usize]) -> Result<Self> {
        AccuracyProfile::new(
            correct
                .iter()
                .enumerate()
                .map(|(i, &c)| RunAccuracy {
                    run_id: format!("r{i}"),
                    correct: c,
                    total,
                })
                .collect(),
        )
    }

    /// Profile from accuracies over `total` units. Each `a·total` must be
    /// integral to within 1e-9.
    pub fn from_fractions(total: usize, accuracies: &[f64]) -> Result<Self> {
        let counts = accuracies
            .iter()
            .map(|&a| integral_count(a, total))
            .collect::<Result<Vec<_>>>()?;
        AccuracyProfile::from_counts(total, &counts)
    }

    pub fn per_run(&self) -> &[RunAccuracy] {
        &self.per_run
    }

    pub fn len(&self) -> usize {
        self.per_run.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per_run.is_empty()
    }

    pub fn total(&self) -> usize {
        self.per_run[0].total
    }

    pub fn accuracies(&self) -> Vec<f64> {
        self.per_run.iter().map(RunAccuracy::accuracy).collect()
    }
}

pub(crate) fn integral_count(fraction: f64, total: usize) -> Result<usize> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} outside [0, 1]"
        )));
    }
    let scaled = fraction * total as f64;
    let rounded = scaled.round();
    if (scaled - rounded).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "fraction {fraction} of {total} is not an integer count"
        )));
    }
    Ok(rounded as usize)
}

/// `A_i = |{x : pred_i(x) = gold(x)}| / |X|` for every run.
pub fn accuracy_profile(collection: &RunCollection) -> AccuracyProfile {
    let gold = collection.eval_set().gold();
    let per_run = collection
        .runs()
        .iter()
        .map(|run| RunAccuracy {
            run_id: run.run_id().to_string(),
            correct: run
                .predictions()
                .iter()
                .zip(gold)
                .filter(|(p, g)| p == g)
                .count(),
            total: gold.len(),
        })
        .collect();
    AccuracyProfile { per_run }
}

/// Token-level accuracy profile of a sequence collection.
pub fn sequence_accuracy_profile(collection: &SequenceRunCollection) -> AccuracyProfile {
    let examples = collection.eval_set().examples();
    let per_run = collection
        .runs()
        .iter()
        .map(|run| RunAccuracy {
            run_id: run.run_id().to_string(),
            correct: run
                .predictions()
                .iter()
                .zip(examples)
                .map(|(tags, ex)| tags.iter().zip(&ex.gold).filter(|(p, g)| p == g).count())
                .sum(),
            total: collection.total_tokens(),
        })
        .collect();
    AccuracyProfile { per_run }
}
