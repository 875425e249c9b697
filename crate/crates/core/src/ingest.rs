//! JSONL readers and writers for gold and run files.
//!
//! Classification gold: `{"id": .., "gold": ..}` with an optional leading
//! `{"alphabet": [..]}` header. Classification run: `{"id": .., "pred": ..}`.
//! Sequence gold: `{"id": .., "tokens": [..], "gold": [..]}`; sequence run:
//! `{"id": .., "pred": [..]}`. Blank lines and unknown keys are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{
    ClassificationRun, EvaluationSet, Label, RunCollection, SeqExample, SequenceEvalSet,
    SequenceRun, SequenceRunCollection,
};

#[derive(Deserialize)]
struct GoldRow {
    id: String,
    gold: Label,
}

#[derive(Deserialize)]
struct AlphabetHeader {
    alphabet: Vec<Label>,
}

#[derive(Deserialize)]
struct PredRow {
    id: String,
    pred: Label,
}

#[derive(Deserialize)]
struct SeqGoldRow {
    id: String,
    tokens: Vec<String>,
    gold: Vec<Label>,
}

#[derive(Deserialize)]
struct SeqPredRow {
    id: String,
    pred: Vec<Label>,
}

/// Non-blank lines of a file with their 1-based line numbers.
fn read_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

fn parse_row<T: DeserializeOwned>(path: &Path, line_no: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e.to_string()))
}

/// Run id used when none is given: the file stem.
pub fn default_run_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

pub fn read_classification_gold(path: impl AsRef<Path>) -> Result<EvaluationSet> {
    let path = path.as_ref();
    let lines = read_lines(path)?;
    let mut alphabet = None;
    let mut examples = Vec::with_capacity(lines.len());
    let mut seen = HashMap::new();
    for (idx, (line_no, line)) in lines.iter().enumerate() {
        let value: serde_json::Value = parse_row(path, *line_no, line)?;
        let is_header = value.get("alphabet").is_some() && value.get("id").is_none();
        if is_header {
            if idx != 0 {
                return Err(Error::parse(
                    path,
                    *line_no,
                    "alphabet header must be the first line",
                ));
            }
            let header: AlphabetHeader = serde_json::from_value(value)
                .map_err(|e| Error::parse(path, *line_no, e.to_string()))?;
            alphabet = Some(header.alphabet);
            continue;
        }
        let row: GoldRow = serde_json::from_value(value)
            .map_err(|e| Error::parse(path, *line_no, e.to_string()))?;
        if seen.insert(row.id.clone(), *line_no).is_some() {
            return Err(Error::DuplicateId {
                id: row.id,
                context: format!("{}:{}", path.display(), line_no),
            });
        }
        examples.push((row.id, row.gold));
    }
    EvaluationSet::new(examples, alphabet)
}

pub fn read_classification_run(
    path: impl AsRef<Path>,
    run_id: Option<&str>,
    eval_set: &EvaluationSet,
) -> Result<ClassificationRun> {
    let path = path.as_ref();
    let run_id = run_id.map_or_else(|| default_run_id(path), str::to_string);
    let mut preds = HashMap::new();
    for (line_no, line) in read_lines(path)? {
        let row: PredRow = parse_row(path, line_no, &line)?;
        if preds.insert(row.id.clone(), row.pred).is_some() {
            return Err(Error::DuplicateId {
                id: row.id,
                context: format!("{}:{}", path.display(), line_no),
            });
        }
    }
    ClassificationRun::from_map(run_id, preds, eval_set)
}

/// Reads a gold file and its run files into an aligned collection.
///
/// Run order follows `run_files`. `run_ids`, when given, must match
/// `run_files` in length and overrides the file-stem default.
pub fn ingest_classification<P: AsRef<Path>>(
    run_files: &[P],
    run_ids: Option<&[String]>,
    gold_file: impl AsRef<Path>,
) -> Result<RunCollection> {
    check_run_ids(run_files.len(), run_ids)?;
    let eval_set = read_classification_gold(gold_file)?;
    let runs = run_files
        .iter()
        .enumerate()
        .map(|(i, p)| read_classification_run(p, run_ids.map(|ids| ids[i].as_str()), &eval_set))
        .collect::<Result<Vec<_>>>()?;
    let collection = RunCollection::new(eval_set, runs)?;
    let unknown = collection.out_of_alphabet();
    if !unknown.is_empty() {
        for (run_id, example_id, label) in unknown.iter().take(5) {
            log::warn!(
                "run `{run_id}` predicts `{label}` for `{example_id}`, outside the gold alphabet"
            );
        }
        log::warn!(
            "{} predictions outside the gold alphabet; counted as incorrect",
            unknown.len()
        );
    }
    Ok(collection)
}

fn check_run_ids(n_files: usize, run_ids: Option<&[String]>) -> Result<()> {
    match run_ids {
        Some(ids) if ids.len() != n_files => Err(Error::InvalidArgument(format!(
            "{} run ids given for {} run files",
            ids.len(),
            n_files
        ))),
        _ => Ok(()),
    }
}

pub fn read_sequence_gold(path: impl AsRef<Path>) -> Result<SequenceEvalSet> {
    let path = path.as_ref();
    let mut examples = Vec::new();
    let mut seen = HashMap::new();
    for (line_no, line) in read_lines(path)? {
        let row: SeqGoldRow = parse_row(path, line_no, &line)?;
        if row.tokens.len() != row.gold.len() {
            return Err(Error::LengthMismatch {
                context: format!("{}:{}", path.display(), line_no),
                example_id: row.id,
                expected: row.tokens.len(),
                found: row.gold.len(),
            });
        }
        if seen.insert(row.id.clone(), line_no).is_some() {
            return Err(Error::DuplicateId {
                id: row.id,
                context: format!("{}:{}", path.display(), line_no),
            });
        }
        examples.push(SeqExample {
            id: row.id,
            tokens: row.tokens,
            gold: row.gold,
        });
    }
    SequenceEvalSet::new(examples)
}

pub fn read_sequence_run(
    path: impl AsRef<Path>,
    run_id: Option<&str>,
    eval_set: &SequenceEvalSet,
) -> Result<SequenceRun> {
    let path = path.as_ref();
    let run_id = run_id.map_or_else(|| default_run_id(path), str::to_string);
    let mut preds = HashMap::new();
    for (line_no, line) in read_lines(path)? {
        let row: SeqPredRow = parse_row(path, line_no, &line)?;
        if let Some(pos) = eval_set.position(&row.id) {
            let expected = eval_set.examples()[pos].tokens.len();
            if row.pred.len() != expected {
                return Err(Error::LengthMismatch {
                    context: format!("{}:{}", path.display(), line_no),
                    example_id: row.id,
                    expected,
                    found: row.pred.len(),
                });
            }
        }
        if preds.insert(row.id.clone(), row.pred).is_some() {
            return Err(Error::DuplicateId {
                id: row.id,
                context: format!("{}:{}", path.display(), line_no),
            });
        }
    }
    SequenceRun::from_map(run_id, preds, eval_set)
}

pub fn ingest_sequence<P: AsRef<Path>>(
    run_files: &[P],
    run_ids: Option<&[String]>,
    gold_file: impl AsRef<Path>,
) -> Result<SequenceRunCollection> {
    check_run_ids(run_files.len(), run_ids)?;
    let eval_set = read_sequence_gold(gold_file)?;
    let runs = run_files
        .iter()
        .enumerate()
        .map(|(i, p)| read_sequence_run(p, run_ids.map(|ids| ids[i].as_str()), &eval_set))
        .collect::<Result<Vec<_>>>()?;
    SequenceRunCollection::new(eval_set, runs)
}

#[derive(Serialize)]
struct GoldRowOut<'a> {
    id: &'a str,
    gold: &'a str,
}

#[derive(Serialize)]
struct PredRowOut<'a> {
    id: &'a str,
    pred: &'a str,
}

#[derive(Serialize)]
struct SeqGoldRowOut<'a> {
    id: &'a str,
    tokens: &'a [String],
    gold: &'a [Label],
}

#[derive(Serialize)]
struct SeqPredRowOut<'a> {
    id: &'a str,
    pred: &'a [Label],
}

fn write_json_line<W: Write, T: Serialize>(out: &mut W, row: &T) -> std::io::Result<()> {
    serde_json::to_writer(&mut *out, row)?;
    out.write_all(b"\n")
}

/// Writes a gold file, always with an explicit alphabet header.
pub fn write_classification_gold<W: Write>(
    eval_set: &EvaluationSet,
    mut out: W,
) -> std::io::Result<()> {
    write_json_line(
        &mut out,
        &serde_json::json!({ "alphabet": eval_set.alphabet() }),
    )?;
    for (id, gold) in eval_set.ids().iter().zip(eval_set.gold()) {
        write_json_line(
            &mut out,
            &GoldRowOut {
                id,
                gold: gold.as_str(),
            },
        )?;
    }
    Ok(())
}

pub fn write_classification_run<W: Write>(
    run: &ClassificationRun,
    eval_set: &EvaluationSet,
    mut out: W,
) -> std::io::Result<()> {
    for (id, pred) in eval_set.ids().iter().zip(run.predictions()) {
        write_json_line(
            &mut out,
            &PredRowOut {
                id,
                pred: pred.as_str(),
            },
        )?;
    }
    Ok(())
}

pub fn write_sequence_gold<W: Write>(
    eval_set: &SequenceEvalSet,
    mut out: W,
) -> std::io::Result<()> {
    for ex in eval_set.examples() {
        write_json_line(
            &mut out,
            &SeqGoldRowOut {
                id: &ex.id,
                tokens: &ex.tokens,
                gold: &ex.gold,
            },
        )?;
    }
    Ok(())
}

pub fn write_sequence_run<W: Write>(
    run: &SequenceRun,
    eval_set: &SequenceEvalSet,
    mut out: W,
) -> std::io::Result<()> {
    for (ex, pred) in eval_set.examples().iter().zip(run.predictions()) {
        write_json_line(&mut out, &SeqPredRowOut { id: &ex.id, pred })?;
    }
    Ok(())
}

/// Writes `gold.jsonl` and one `<run_id>.jsonl` per run into `dir`.
/// Returns the run file paths in collection order.
pub fn write_collection(
    collection: &RunCollection,
    dir: impl AsRef<Path>,
) -> Result<Vec<std::path::PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let gold_path = dir.join("gold.jsonl");
    let create = |p: &Path| {
        File::create(p)
            .map(std::io::BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    let mut gold = create(&gold_path)?;
    write_classification_gold(collection.eval_set(), &mut gold)
        .and_then(|_| gold.flush())
        .map_err(|e| Error::io(&gold_path, e))?;
    let mut paths = Vec::with_capacity(collection.n_runs());
    for run in collection.runs() {
        let path = dir.join(format!("{}.jsonl", run.run_id()));
        let mut w = create(&path)?;
        write_classification_run(run, collection.eval_set(), &mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
