use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use jitterlab::analysis::read_complexity_csv;
use jitterlab::cdu::LabeledDataset;
use jitterlab::ingest::{
    read_sequence_gold, read_sequence_run, write_classification_run, write_collection,
};
use jitterlab::metrics::{intent_correctness, slot_correctness};
use jitterlab::report::{read_tradeoff_csv, TradeoffFormat};
use jitterlab::{
    brute_force_churn_extrema, complexity_correlation, emit_tradeoff, ensemble_predict,
    generate_cdu_splits, ingest_classification, ingest_sequence, jitter_report, overlap_table,
    render_jitter_report, sequence_jitter_report, synthesize_runs, system_wide_accuracy, CduPlan,
    Format, SequenceRunCollection, SimSpec, Strategy,
};

#[derive(Parser)]
#[command(
    name = "jitterlab",
    version,
    about = "Model stability under continuous data updates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Class,
    Seq,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutFormat {
    Text,
    Json,
    Csv,
}

impl From<OutFormat> for Format {
    fn from(f: OutFormat) -> Self {
        match f {
            OutFormat::Text => Format::Text,
            OutFormat::Json => Format::Json,
            OutFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DropStrategy {
    Stratified,
    Uniform,
}

#[derive(Subcommand)]
enum Command {
    /// Jitter, accuracy bounds and per-pair breakdown of a set of runs.
    Jitter {
        #[arg(long, value_enum, default_value = "class")]
        mode: Mode,
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Comma-separated run ids; defaults to the file stems.
        #[arg(long, value_delimiter = ',')]
        run_ids: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write N training sets, each missing a random r-fraction of the data.
    Cdu {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        r: f64,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "stratified")]
        strategy: DropStrategy,
        /// Output directory; defaults to the dataset's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Synthesize a run collection with exact accuracies.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the seed in the spec file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive min and max disagreement for small instances.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        ci: usize,
        #[arg(long)]
        cj: usize,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// Unstable examples shared by two model families, by class count.
    Overlap {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        runs_a: Vec<PathBuf>,
        #[arg(long, num_args = 1.., required = true)]
        runs_b: Vec<PathBuf>,
        #[arg(long, default_value = "a")]
        name_a: String,
        #[arg(long, default_value = "b")]
        name_b: String,
        #[arg(long, value_enum, default_value = "json")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Majority-vote ensemble of selected runs.
    Ensemble {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        /// Comma-separated zero-based indices into --runs.
        #[arg(long, value_delimiter = ',', required = true)]
        members: Vec<usize>,
        #[arg(long)]
        run_id: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Error rate against jitter with the Pareto-dominated flag.
    Tradeoff {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: OutFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Accuracy of an intent classifier and slot tagger taken together.
    Syswide {
        #[arg(long)]
        intent_gold: PathBuf,
        #[arg(long)]
        intent_run: PathBuf,
        #[arg(long)]
        slot_gold: PathBuf,
        #[arg(long)]
        slot_run: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
    /// Pearson correlation between parameter count and jitter.
    Correlate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: OutFormat,
    },
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, body).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn json(value: &serde_json::Value) -> String {
    serde_json::to_string_pretty(value).expect("json value serializes") + "\n"
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Jitter {
            mode,
            gold,
            runs,
            run_ids,
            format,
            out,
        } => {
            let ids = run_ids.as_deref();
            let report = match mode {
                Mode::Class => jitter_report(&ingest_classification(&runs, ids, &gold)?)?,
                Mode::Seq => sequence_jitter_report(&ingest_sequence(&runs, ids, &gold)?)?,
            };
            emit(
                out.as_deref(),
                &render_jitter_report(&report, format.into()),
            )
        }
        Command::Cdu {
            data,
            r,
            n,
            seed,
            strategy,
            out,
        } => {
            let strategy = match strategy {
                DropStrategy::Stratified => Strategy::Stratified,
                DropStrategy::Uniform => Strategy::Uniform,
            };
            let plan = CduPlan {
                r,
                n,
                seed,
                strategy,
            };
            let dataset = LabeledDataset::read_jsonl(&data)?;
            let output = generate_cdu_splits(&dataset, &plan)?;
            let stem = data
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("data")
                .to_string();
            let dir =
                out.unwrap_or_else(|| data.parent().map(Path::to_path_buf).unwrap_or_default());
            let (manifest, path) = output.write(&dir, &stem)?;
            log::info!(
                "wrote {} splits and {}",
                manifest.splits.len(),
                path.display()
            );
            emit(None, &(serde_json::to_string_pretty(&manifest)? + "\n"))
        }
        Command::Simulate { spec, seed, out } => {
            let mut spec = SimSpec::read_json(&spec)?;
            if let Some(seed) = seed {
                spec.seed = seed;
            }
            let collection = synthesize_runs(&spec)?;
            let paths = write_collection(&collection, &out)?;
            let mut listing = format!("{}\n", out.join("gold.jsonl").display());
            for p in paths {
                listing.push_str(&format!("{}\n", p.display()));
            }
            emit(None, &listing)
        }
        Command::Oracle {
            n,
            k,
            ci,
            cj,
            format,
        } => {
            let e = brute_force_churn_extrema(n, k, (ci, cj))?;
            let body = match format {
                OutFormat::Json => json(&serde_json::json!({
                    "n": n,
                    "k": k,
                    "correct": [ci, cj],
                    "min": e.min(),
                    "max": e.max(),
                    "min_disagreements": e.min_disagreements,
                    "max_disagreements": e.max_disagreements,
                })),
                OutFormat::Csv => format!("min,max\n{:.4},{:.4}\n", e.min(), e.max()),
                OutFormat::Text => format!("min={:.4} max={:.4}\n", e.min(), e.max()),
            };
            emit(None, &body)
        }
        Command::Overlap {
            gold,
            runs_a,
            runs_b,
            name_a,
            name_b,
            format,
            out,
        } => {
            let a = ingest_classification(&runs_a, None, &gold)?;
            let b = ingest_classification(&runs_b, None, &gold)?;
            let t = overlap_table(&name_a, &a, &name_b, &b)?;
            let body = match format {
                OutFormat::Json => serde_json::to_string_pretty(&t)? + "\n",
                OutFormat::Csv => format!(
                    "pair,2C,3C,4C,gt4C,total\n{}/{},{},{},{},{},{}\n",
                    t.pair.0, t.pair.1, t.two, t.three, t.four, t.more, t.total
                ),
                OutFormat::Text => format!(
                    "{} / {}\n2C {}\n3C {}\n4C {}\n>4C {}\ntotal {}\n",
                    t.pair.0, t.pair.1, t.two, t.three, t.four, t.more, t.total
                ),
            };
            emit(out.as_deref(), &body)
        }
        Command::Ensemble {
            gold,
            runs,
            members,
            run_id,
            out,
        } => {
            let collection = ingest_classification(&runs, None, &gold)?;
            let mut ens = ensemble_predict(&collection, &members)?;
            if let Some(id) = run_id {
                ens = ens.with_run_id(id);
            }
            let mut body = Vec::new();
            write_classification_run(&ens, collection.eval_set(), &mut body)?;
            emit(out.as_deref(), std::str::from_utf8(&body)?)
        }
        Command::Tradeoff { input, format, out } => {
            let points = read_tradeoff_csv(&input)?;
            let format = match format {
                OutFormat::Json => TradeoffFormat::Json,
                _ => TradeoffFormat::Csv,
            };
            emit(out.as_deref(), &emit_tradeoff(&points, format)?)
        }
        Command::Syswide {
            intent_gold,
            intent_run,
            slot_gold,
            slot_run,
            format,
        } => {
            let intents = ingest_classification(&[&intent_run], None, &intent_gold)?;
            let seq_gold = read_sequence_gold(&slot_gold)?;
            let seq_run = read_sequence_run(&slot_run, None, &seq_gold)?;
            let slots = SequenceRunCollection::new(seq_gold, vec![seq_run])?;
            let acc = system_wide_accuracy(
                &intent_correctness(&intents, 0)?,
                &slot_correctness(&slots, 0)?,
            )?;
            let body = match format {
                OutFormat::Json => json(&serde_json::json!({
                    "n_examples": intents.n_examples(),
                    "system_wide_accuracy": acc,
                })),
                OutFormat::Csv => format!("system_wide_accuracy\n{acc}\n"),
                OutFormat::Text => {
                    format!("system-wide accuracy {}\n", jitterlab::report::percent(acc))
                }
            };
            emit(None, &body)
        }
        Command::Correlate { input, format } => {
            let points = read_complexity_csv(&input)?;
            let r = complexity_correlation(&points)?;
            let body = match format {
                OutFormat::Json => {
                    json(&serde_json::json!({ "n_points": points.len(), "pearson_r": r }))
                }
                OutFormat::Csv => format!("pearson_r\n{r}\n"),
                OutFormat::Text => format!("r = {r:.4} over {} configurations\n", points.len()),
            };
            emit(None, &body)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("JITTERLAB_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<jitterlab::Error>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
