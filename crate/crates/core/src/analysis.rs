//! Majority-vote ensembles, unstable-example overlap tables, and the
//! parameter-count vs. jitter correlation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ClassificationRun, Label, RunCollection};

/// Majority vote of the runs at `members`.
///
/// Ties go to the tied label that comes first in the evaluation set's
/// alphabet; labels outside the alphabet rank after it, in byte order. The
/// result is independent of member order.
pub fn ensemble_predict(
    collection: &RunCollection,
    members: &[usize],
) -> Result<ClassificationRun> {
    if members.is_empty() {
        return Err(Error::EmptyMemberList);
    }
    let n_runs = collection.n_runs();
    if let Some(&index) = members.iter().find(|&&i| i >= n_runs) {
        return Err(Error::IndexOutOfRange { index, n_runs });
    }
    let eval = collection.eval_set();
    let runs = collection.runs();
    let rank: HashMap<&Label, usize> = eval
        .alphabet()
        .iter()
        .enumerate()
        .map(|(i, l)| (l, i))
        .collect();

    let predictions = (0..eval.len())
        .map(|x| {
            let mut votes: HashMap<&Label, usize> = HashMap::new();
            for &m in members {
                *votes.entry(&runs[m].predictions()[x]).or_insert(0) += 1;
            }
            votes
                .into_iter()
                .min_by(|(la, ca), (lb, cb)| {
                    cb.cmp(ca).then_with(|| {
                        let ra = rank.get(la).copied().unwrap_or(usize::MAX);
                        let rb = rank.get(lb).copied().unwrap_or(usize::MAX);
                        ra.cmp(&rb).then_with(|| la.cmp(lb))
                    })
                })
                .map(|(l, _)| l.clone())
                .expect("at least one vote")
        })
        .collect();

    let mut sorted = members.to_vec();
    sorted.sort_unstable();
    let id = sorted
        .iter()
        .map(|m| m.to_string())
        .collect::<Vec<_>>()
        .join(",");
    Ok(ClassificationRun::new(
        format!("ensemble[{id}]"),
        predictions,
    ))
}

fn distinct_labels(collection: &RunCollection, x: usize) -> BTreeSet<&Label> {
    collection
        .runs()
        .iter()
        .map(|r| &r.predictions()[x])
        .collect()
}

/// Examples that receive at least two distinct predictions across runs,
/// with the number of distinct labels.
pub fn unstable_examples(collection: &RunCollection) -> Result<BTreeMap<String, usize>> {
    if collection.n_runs() < 2 {
        return Err(Error::NeedAtLeastTwoRuns {
            found: collection.n_runs(),
        });
    }
    Ok(collection
        .eval_set()
        .ids()
        .iter()
        .enumerate()
        .filter_map(|(x, id)| {
            let distinct = distinct_labels(collection, x).len();
            (distinct >= 2).then(|| (id.clone(), distinct))
        })
        .collect())
}

/// Shared unstable examples of two model families, bucketed by how many
/// distinct classes they oscillate among.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapTable {
    pub pair: (String, String),
    #[serde(rename = "2C")]
    pub two: usize,
    #[serde(rename = "3C")]
    pub three: usize,
    #[serde(rename = "4C")]
    pub four: usize,
    #[serde(rename = "gt4C")]
    pub more: usize,
    pub total: usize,
}

impl OverlapTable {
    fn add(&mut self, distinct: usize) {
        match distinct {
            0 | 1 => return,
            2 => self.two += 1,
            3 => self.three += 1,
            4 => self.four += 1,
            _ => self.more += 1,
        }
        self.total += 1;
    }
}

/// Counts examples unstable in both collections. The bucket is the size of
/// the union of labels seen across both collections' runs.
pub fn overlap_table(
    name_a: &str,
    coll_a: &RunCollection,
    name_b: &str,
    coll_b: &RunCollection,
) -> Result<OverlapTable> {
    let (ea, eb) = (coll_a.eval_set(), coll_b.eval_set());
    if !ea.same_examples(eb) {
        return Err(Error::EvalSetMismatch);
    }
    let mut table = OverlapTable {
        pair: (name_a.to_string(), name_b.to_string()),
        ..OverlapTable::default()
    };
    for (xa, id) in ea.ids().iter().enumerate() {
        let xb = eb.position(id).expect("same example ids");
        let la = distinct_labels(coll_a, xa);
        let lb = distinct_labels(coll_b, xb);
        if la.len() >= 2 && lb.len() >= 2 {
            table.add(la.union(&lb).count());
        }
    }
    Ok(table)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexityPoint {
    #[serde(rename = "config")]
    pub config_name: String,
    #[serde(rename = "params")]
    pub trainable_params: u64,
    pub jitter: f64,
}

/// Reads `config,params,jitter` CSV with a header row.
pub fn read_complexity_csv(path: impl AsRef<Path>) -> Result<Vec<ComplexityPoint>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut points = Vec::new();
    for row in reader.deserialize() {
        let point: ComplexityPoint = row.map_err(|e| csv_error(path, e))?;
        if !(0.0..=1.0).contains(&point.jitter) {
            return Err(Error::InvalidArgument(format!(
                "jitter {} of `{}` outside [0, 1]",
                point.jitter, point.config_name
            )));
        }
        points.push(point);
    }
    Ok(points)
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::parse(path, line, format!("{kind:?}")),
    }
}

/// Pearson correlation between parameter count and jitter.
pub fn complexity_correlation(points: &[ComplexityPoint]) -> Result<f64> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            found: points.len(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.trainable_params as f64).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.jitter).collect();
    pearson(&xs, &ys)
}

fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::ZeroVariance("params"));
    }
    if ys.iter().all(|&y| y == ys[0]) {
        return Err(Error::ZeroVariance("jitter"));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::EvaluationSet;

    fn l(s: &str) -> Label {
        Label::new(s).unwrap()
    }

    fn coll(alphabet: &[&str], runs: &[&[&str]]) -> RunCollection {
        let n = runs[0].len();
        let eval = EvaluationSet::new(
            (0..n).map(|i| (format!("e{i}"), l(alphabet[0]))).collect(),
            Some(alphabet.iter().map(|a| l(a)).collect()),
        )
        .unwrap();
        let runs = runs
            .iter()
            .enumerate()
            .map(|(i, r)| ClassificationRun::new(format!("r{i}"), r.iter().map(|x| l(x)).collect()))
            .collect();
        RunCollection::new(eval, runs).unwrap()
    }

    fn first(run: &ClassificationRun) -> &str {
        run.predictions()[0].as_str()
    }

    #[test]
    fn strict_majority() {
        let c = coll(&["a", "b"], &[&["a"], &["a"], &["b"]]);
        assert_eq!(first(&ensemble_predict(&c, &[0, 1, 2]).unwrap()), "a");
    }

    #[test]
    fn tie_goes_to_alphabet_order() {
        let c = coll(&["a", "b"], &[&["b"], &["a"]]);
        assert_eq!(first(&ensemble_predict(&c, &[0, 1]).unwrap()), "a");
        let c = coll(&["b", "a"], &[&["a"], &["b"]]);
        assert_eq!(first(&ensemble_predict(&c, &[0, 1]).unwrap()), "b");
    }

    #[test]
    fn out_of_alphabet_labels_lose_ties() {
        let c = coll(&["a", "b"], &[&["zz"], &["b"]]);
        assert_eq!(first(&ensemble_predict(&c, &[0, 1]).unwrap()), "b");
    }

    #[test]
    fn identical_members_reproduce_member() {
        let r: &[&str] = &["a", "b", "b", "a"];
        let c = coll(&["a", "b"], &[r; 5]);
        let e = ensemble_predict(&c, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(e.predictions(), c.runs()[0].predictions());
    }

    #[test]
    fn member_errors() {
        let c = coll(&["a"], &[&["a"]]);
        assert!(matches!(
            ensemble_predict(&c, &[]),
            Err(Error::EmptyMemberList)
        ));
        assert!(matches!(
            ensemble_predict(&c, &[0, 3]),
            Err(Error::IndexOutOfRange {
                index: 3,
                n_runs: 1
            })
        ));
    }

    #[test]
    fn unstable_counts() {
        let c = coll(
            &["a", "b", "c"],
            &[&["a", "a", "a"], &["a", "b", "b"], &["a", "a", "c"]],
        );
        let u = unstable_examples(&c).unwrap();
        assert!(!u.contains_key("e0"));
        assert_eq!(u["e1"], 2);
        assert_eq!(u["e2"], 3);
        assert!(unstable_examples(&c.select(&[0]).unwrap()).is_err());
    }

    #[test]
    fn overlap_buckets_use_label_union() {
        let abc = ["a", "b", "c", "d", "e", "f"];
        let a = coll(&abc, &[&["a", "a", "a"], &["b", "b", "a"]]);
        let b = coll(&abc, &[&["a", "b", "a"], &["b", "c", "a"]]);
        let t = overlap_table("A", &a, "B", &b).unwrap();
        // e0: {a,b} ∪ {a,b}; e1: {a,b} ∪ {b,c}; e2 stable
        assert_eq!((t.two, t.three, t.four, t.more, t.total), (1, 1, 0, 0, 2));

        let stable = coll(&abc, &[&["a", "a", "a"], &["a", "a", "a"]]);
        let t = overlap_table("A", &stable, "B", &stable).unwrap();
        assert_eq!(t.total, 0);
    }

    #[test]
    fn overlap_json_keys() {
        let t = OverlapTable {
            pair: ("x".into(), "y".into()),
            two: 1,
            three: 2,
            four: 3,
            more: 4,
            total: 10,
        };
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(
            v,
            serde_json::json!({"pair": ["x", "y"], "2C": 1, "3C": 2, "4C": 3, "gt4C": 4, "total": 10})
        );
    }

    #[test]
    fn overlap_rejects_different_eval_sets() {
        let a = coll(&["a"], &[&["a", "a"]]);
        let b = coll(&["a"], &[&["a"]]);
        assert!(matches!(
            overlap_table("A", &a, "B", &b),
            Err(Error::EvalSetMismatch)
        ));
    }

    fn points(xy: &[(u64, f64)]) -> Vec<ComplexityPoint> {
        xy.iter()
            .enumerate()
            .map(|(i, &(p, j))| ComplexityPoint {
                config_name: format!("c{i}"),
                trainable_params: p,
                jitter: j,
            })
            .collect()
    }

    #[test]
    fn perfect_lines() {
        let up = points(&[(10, 0.1), (20, 0.2), (30, 0.3)]);
        assert!((complexity_correlation(&up).unwrap() - 1.0).abs() < 1e-12);
        let down = points(&[(10, 0.3), (20, 0.2), (30, 0.1)]);
        assert!((complexity_correlation(&down).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn correlation_errors() {
        assert!(matches!(
            complexity_correlation(&points(&[(1, 0.1), (2, 0.2)])),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(matches!(
            complexity_correlation(&points(&[(1, 0.1), (1, 0.2), (1, 0.3)])),
            Err(Error::ZeroVariance("params"))
        ));
        assert!(matches!(
            complexity_correlation(&points(&[(1, 0.1), (2, 0.1), (3, 0.1)])),
            Err(Error::ZeroVariance("jitter"))
        ));
    }
}
