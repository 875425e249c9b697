//! Continuous-data-update simulation: `N` training sets, each the base
//! dataset minus an independently drawn `k = round(r·|D|)` items.
//!
//! Under the stratified strategy the `k` drops are apportioned across
//! classes by largest remainder (ties: larger class first, then label
//! order), then drawn uniformly within each class. Split `i` (1-based) draws
//! from substream `(seed, i)`, visiting classes in label order and each
//! class's members in input order. Kept items stay in input order.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Substream};
use crate::types::Label;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetItem {
    pub id: String,
    pub text: String,
    pub label: Label,
}

/// A labeled training set `D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledDataset {
    items: Vec<DatasetItem>,
}

impl LabeledDataset {
    pub fn new(items: Vec<DatasetItem>) -> Result<Self> {
        let mut seen = std::collections::HashSet::new();
        for item in &items {
            if !seen.insert(item.id.as_str()) {
                return Err(Error::DuplicateId {
                    id: item.id.clone(),
                    context: "dataset".into(),
                });
            }
        }
        Ok(LabeledDataset { items })
    }

    pub fn items(&self) -> &[DatasetItem] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item count per label, in label order.
    pub fn class_counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for item in &self.items {
            *counts.entry(item.label.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Reads `{"id", "text", "label"}` JSONL.
    pub fn read_jsonl(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut items = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let item: DatasetItem = serde_json::from_str(&line)
                .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
            items.push(item);
        }
        LabeledDataset::new(items)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for item in &self.items {
            serde_json::to_writer(&mut out, item)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    Stratified,
    Uniform,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Stratified => "stratified",
            Strategy::Uniform => "uniform",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stratified" => Ok(Strategy::Stratified),
            "uniform" => Ok(Strategy::Uniform),
            other => Err(Error::InvalidPlan(format!("unknown strategy `{other}`"))),
        }
    }
}

/// How to perturb `D`: drop fraction `r`, `n` versions, RNG seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CduPlan {
    pub r: f64,
    pub n: usize,
    pub seed: u64,
    pub strategy: Strategy,
}

impl Default for CduPlan {
    fn default() -> Self {
        CduPlan {
            r: 0.01,
            n: 10,
            seed: 0,
            strategy: Strategy::Stratified,
        }
    }
}

impl CduPlan {
    pub fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 1.0) {
            return Err(Error::InvalidPlan(format!(
                "r = {} must lie in (0, 1)",
                self.r
            )));
        }
        if self.n == 0 {
            return Err(Error::InvalidPlan("n must be at least 1".into()));
        }
        Ok(())
    }

    /// `k = round(r·size)`, halves rounded up.
    pub fn drop_count(&self, size: usize) -> usize {
        (self.r * size as f64).round() as usize
    }
}

/// Splits `k` drops across classes by largest remainder.
///
/// Each class's quota is `k·n_c / |D|`; classes first get the floor, and the
/// leftover drops go to the largest fractional parts, ties to the larger
/// class and then to the lexicographically smaller label.
pub fn allocate_drops(class_counts: &BTreeMap<Label, usize>, k: usize) -> BTreeMap<Label, usize> {
    let size: usize = class_counts.values().sum();
    if size == 0 {
        return BTreeMap::new();
    }
    let mut rows: Vec<(&Label, usize, usize, usize)> = class_counts
        .iter()
        .map(|(label, &count)| {
            let quota = k * count;
            (label, count, quota / size, quota % size)
        })
        .collect();
    let assigned: usize = rows.iter().map(|r| r.2).sum();
    let leftover = k - assigned;
    rows.sort_by(|a, b| b.3.cmp(&a.3).then(b.1.cmp(&a.1)).then(a.0.cmp(b.0)));
    for row in rows.iter_mut().take(leftover) {
        row.2 += 1;
    }
    rows.into_iter()
        .map(|(l, _, alloc, _)| (l.clone(), alloc))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CduSplit {
    /// 1-based version index, also the RNG stream id.
    pub index: usize,
    pub dataset: LabeledDataset,
    /// Dropped ids in input order.
    pub dropped_ids: Vec<String>,
    pub dropped_per_class: BTreeMap<Label, usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CduOutput {
    pub plan: CduPlan,
    pub k: usize,
    /// Largest-remainder allocation; `None` for the uniform strategy.
    pub allocations: Option<BTreeMap<Label, usize>>,
    pub splits: Vec<CduSplit>,
}

/// Draws the `n` perturbed versions `D_1..D_n` of `dataset`.
pub fn generate_cdu_splits(dataset: &LabeledDataset, plan: &CduPlan) -> Result<CduOutput> {
    plan.validate()?;
    if dataset.is_empty() {
        return Err(Error::EmptyInput);
    }
    let size = dataset.len();
    let k = plan.drop_count(size);
    if k == 0 {
        return Err(Error::DropTooSmall { r: plan.r, size });
    }
    if k >= size {
        return Err(Error::DropTooLarge { k, size });
    }

    let mut members: BTreeMap<&Label, Vec<usize>> = BTreeMap::new();
    for (pos, item) in dataset.items().iter().enumerate() {
        members.entry(&item.label).or_default().push(pos);
    }

    let allocations = match plan.strategy {
        Strategy::Stratified => {
            let alloc = allocate_drops(&dataset.class_counts(), k);
            for (label, &a) in &alloc {
                if a >= members[label].len() {
                    return Err(Error::ClassEmptied {
                        label: label.to_string(),
                        allocated: a,
                    });
                }
            }
            Some(alloc)
        }
        Strategy::Uniform => None,
    };

    let splits = (1..=plan.n)
        .map(|index| {
            let mut stream = Substream::new(plan.seed, index as u64);
            let mut drop = vec![false; size];
            match &allocations {
                Some(alloc) => {
                    for (label, positions) in &members {
                        let take = alloc[*label];
                        let mut pool = positions.clone();
                        stream.partial_shuffle(&mut pool, take);
                        for &p in &pool[..take] {
                            drop[p] = true;
                        }
                    }
                }
                None => {
                    for p in stream.sample_indices(size, k) {
                        drop[p] = true;
                    }
                }
            }
            let mut kept = Vec::with_capacity(size - k);
            let mut dropped_ids = Vec::with_capacity(k);
            let mut dropped_per_class = BTreeMap::new();
            for (item, dropped) in dataset.items().iter().zip(&drop) {
                if *dropped {
                    dropped_ids.push(item.id.clone());
                    *dropped_per_class.entry(item.label.clone()).or_insert(0) += 1;
                } else {
                    kept.push(item.clone());
                }
            }
            CduSplit {
                index,
                dataset: LabeledDataset { items: kept },
                dropped_ids,
                dropped_per_class,
            }
        })
        .collect();

    Ok(CduOutput {
        plan: *plan,
        k,
        allocations,
        splits,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestSplit {
    pub index: usize,
    pub file: String,
    pub size: usize,
    pub dropped_per_class: BTreeMap<Label, usize>,
    pub dropped_ids: Vec<String>,
}

/// Audit record written next to the split files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CduManifest {
    pub plan: CduPlan,
    pub rng: String,
    pub dataset_size: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub allocations: Option<BTreeMap<Label, usize>>,
    pub splits: Vec<ManifestSplit>,
}

pub fn split_file_name(stem: &str, index: usize) -> String {
    format!("{stem}.cdu{index}.jsonl")
}

pub fn manifest_file_name(stem: &str) -> String {
    format!("{stem}.cdu.manifest.json")
}

impl CduOutput {
    pub fn manifest(&self, stem: &str, dataset_size: usize) -> CduManifest {
        CduManifest {
            plan: self.plan,
            rng: rng::ALGORITHM.to_string(),
            dataset_size,
            k: self.k,
            allocations: self.allocations.clone(),
            splits: self
                .splits
                .iter()
                .map(|s| ManifestSplit {
                    index: s.index,
                    file: split_file_name(stem, s.index),
                    size: s.dataset.len(),
                    dropped_per_class: s.dropped_per_class.clone(),
                    dropped_ids: s.dropped_ids.clone(),
                })
                .collect(),
        }
    }

    /// Writes `<stem>.cdu<i>.jsonl` for every split plus the manifest into
    /// `dir`. Returns the manifest and its path.
    pub fn write(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(CduManifest, PathBuf)> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let dataset_size = self.splits.first().map_or(0, |s| s.dataset.len() + self.k);
        for split in &self.splits {
            let path = dir.join(split_file_name(stem, split.index));
            let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = BufWriter::new(file);
            split
                .dataset
                .write_jsonl(&mut w)
                .and_then(|_| w.flush())
                .map_err(|e| Error::io(&path, e))?;
        }
        let manifest = self.manifest(stem, dataset_size);
        let path = dir.join(manifest_file_name(stem));
        let body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, body + "\n").map_err(|e| Error::io(&path, e))?;
        Ok((manifest, path))
    }
}
