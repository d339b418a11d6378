use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::thread;

use mwp_core::dataset::{generate_synthetic, load_dataset, save_jsonl, split_dataset, summarize};
use mwp_core::equation::{parse_equation, solve};
use mwp_core::metrics::{evaluate_corpus_with_tolerance, render_table, TableRow};
use mwp_core::model::{
    build_vocabs, encode_records, equation_tokens, external_predict, train_with_callback, Adapter, Checkpoint,
    EpochStats, EquationPredictor, Parameters, PredictionRequest,
};
use mwp_core::preprocess::Vocab;
use mwp_core::{ClassProfile, DatasetFormat, DatasetSplit, EvalReport, MwpRecord, Rational, SplitRatios, TypeCounts};
use serde::Serialize;

use crate::{CliError, RunConfig};

fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(())
}

fn load_records(path: &Path) -> Result<Vec<MwpRecord>, CliError> {
    if !path.exists() {
        return Err(CliError::Data(format!("{} does not exist", path.display())));
    }
    Ok(load_dataset(path, DatasetFormat::from_path(path))?)
}

/// Writes `n` synthetic records as JSONL and returns their class counts.
pub fn cmd_datagen(n: usize, seed: u64, profile: &ClassProfile, out: &Path) -> Result<TypeCounts, CliError> {
    if n == 0 {
        return Err(CliError::Config("datagen needs at least one record".into()));
    }
    let records = generate_synthetic(n, seed, profile);
    ensure_parent(out)?;
    save_jsonl(out, &records)?;
    Ok(summarize(&records)?)
}

/// Shuffles and partitions a dataset into `train.jsonl`, `validation.jsonl`
/// and `test.jsonl` under `out_dir`.
pub fn cmd_split(input: &Path, seed: u64, ratios: &SplitRatios, out_dir: &Path) -> Result<DatasetSplit, CliError> {
    let records = load_records(input)?;
    let split = split_dataset(&records, seed, ratios)?;
    fs::create_dir_all(out_dir)?;
    save_jsonl(&out_dir.join("train.jsonl"), &split.train)?;
    save_jsonl(&out_dir.join("validation.jsonl"), &split.validation)?;
    save_jsonl(&out_dir.join("test.jsonl"), &split.test)?;
    Ok(split)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub checkpoint: PathBuf,
    pub history: Vec<EpochStats>,
}

/// Loads the run's vocabularies, building and saving them from the
/// training records when either file is missing.
fn run_vocabs(cfg: &RunConfig, train: &[MwpRecord]) -> Result<(Vocab, Vocab), CliError> {
    let (src_path, tgt_path) = (cfg.src_vocab_path(), cfg.tgt_vocab_path());
    if src_path.exists() && tgt_path.exists() {
        let src = Vocab::load(&src_path)?;
        let tgt = Vocab::load(&tgt_path)?;
        for rec in train {
            if let Some(tok) = equation_tokens(&rec.equation_text)
                .tokens
                .iter()
                .find(|t| tgt.id(t).is_none())
            {
                return Err(CliError::Data(format!(
                    "record `{}`: target token `{tok}` is missing from {}",
                    rec.id,
                    tgt_path.display()
                )));
            }
        }
        return Ok((src, tgt));
    }
    let (src, tgt) = build_vocabs(train, cfg.model.min_freq);
    ensure_parent(&src_path)?;
    src.save(&src_path)?;
    tgt.save(&tgt_path)?;
    Ok((src, tgt))
}

fn optional_validation(cfg: &RunConfig) -> Result<Vec<MwpRecord>, CliError> {
    let path = cfg.validation_path();
    if cfg.paths.validation.is_none() && !path.exists() {
        return Ok(Vec::new());
    }
    load_records(&path)
}

fn history_text(seed: u64, history: &[EpochStats]) -> String {
    let mut out = format!("# seed {seed}\n# epoch train_loss validation_loss\n");
    for s in history {
        out.push_str(&s.to_line());
        out.push('\n');
    }
    out
}

struct Trained {
    snapshots: Vec<(usize, Parameters)>,
    history: Vec<EpochStats>,
    final_params: Parameters,
}

/// Trains from scratch, keeping copies of the parameters after each epoch
/// listed in `keep`.
fn train_model(
    cfg: &RunConfig,
    batch_size: usize,
    epochs: usize,
    keep: &[usize],
    train: &[MwpRecord],
    validation: &[MwpRecord],
    src_vocab: &Vocab,
    tgt_vocab: &Vocab,
) -> Result<Trained, CliError> {
    let model_cfg = cfg.model.model_config(src_vocab.len(), tgt_vocab.len());
    let mut train_cfg = cfg.train_config();
    train_cfg.batch_size = batch_size;
    train_cfg.epochs = epochs;
    let train_pairs = encode_records(train, src_vocab, tgt_vocab, model_cfg.max_len);
    let val_pairs = encode_records(validation, src_vocab, tgt_vocab, model_cfg.max_len);
    let init = Parameters::init(&model_cfg, cfg.seed);
    let mut snapshots = Vec::new();
    let (final_params, history) = train_with_callback(init, &train_pairs, &val_pairs, &train_cfg, |s, p| {
        if keep.contains(&s.epoch) {
            snapshots.push((s.epoch, p.clone()));
        }
    })?;
    Ok(Trained {
        snapshots,
        history,
        final_params,
    })
}

fn metadata(cfg: &RunConfig, batch_size: usize, epochs: usize, n_train: usize) -> BTreeMap<String, String> {
    BTreeMap::from([
        ("seed".to_string(), cfg.seed.to_string()),
        ("batch_size".to_string(), batch_size.to_string()),
        ("epochs".to_string(), epochs.to_string()),
        ("learning_rate".to_string(), cfg.train.learning_rate.to_string()),
        ("train_records".to_string(), n_train.to_string()),
    ])
}

/// Trains on the configured split and writes the checkpoint, vocabularies
/// and per-epoch history under the run directory.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainOutcome, CliError> {
    let train = load_records(&cfg.train_path())?;
    let validation = optional_validation(cfg)?;
    let (src_vocab, tgt_vocab) = run_vocabs(cfg, &train)?;
    let t = train_model(
        cfg,
        cfg.train.batch_size,
        cfg.train.epochs,
        &[],
        &train,
        &validation,
        &src_vocab,
        &tgt_vocab,
    )?;
    let checkpoint = Checkpoint {
        params: t.final_params,
        src_vocab,
        tgt_vocab,
        metadata: metadata(cfg, cfg.train.batch_size, cfg.train.epochs, train.len()),
    };
    let path = cfg.checkpoint_path();
    ensure_parent(&path)?;
    checkpoint.save(&path)?;
    let history_path = cfg.history_path();
    ensure_parent(&history_path)?;
    fs::write(&history_path, history_text(cfg.seed, &t.history))?;
    Ok(TrainOutcome {
        checkpoint: path,
        history: t.history,
    })
}

/// Where `eval` gets its predicted equations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PredictionSource {
    Checkpoint(PathBuf),
    External(Adapter),
}

impl PredictionSource {
    /// From the config: a predictions file, then an adapter command, then
    /// the run's checkpoint.
    pub fn from_config(cfg: &RunConfig) -> Result<Self, CliError> {
        if let Some(path) = &cfg.eval.predictions {
            return Ok(PredictionSource::External(Adapter::PredictionFile(path.clone())));
        }
        if let Some(cmd) = &cfg.eval.adapter {
            return Self::command(cmd);
        }
        Ok(PredictionSource::Checkpoint(cfg.checkpoint_path()))
    }

    pub fn command(line: &str) -> Result<Self, CliError> {
        let mut words = line.split_whitespace().map(String::from);
        let program = words
            .next()
            .ok_or_else(|| CliError::Config("empty adapter command".into()))?;
        Ok(PredictionSource::External(Adapter::Command {
            program,
            args: words.collect(),
        }))
    }

    fn describe(&self) -> String {
        match self {
            PredictionSource::Checkpoint(p) => format!("checkpoint {}", p.display()),
            PredictionSource::External(Adapter::PredictionFile(p)) => format!("predictions {}", p.display()),
            PredictionSource::External(Adapter::Command { program, .. }) => format!("adapter {program}"),
        }
    }
}

fn predict_with(predictor: &EquationPredictor, records: &[MwpRecord], cfg: &RunConfig) -> Result<Vec<String>, CliError> {
    let problems: Vec<&str> = records.iter().map(|r| r.problem_text.as_str()).collect();
    Ok(predictor.predict_all(&problems, cfg.eval.beam, cfg.eval.threads)?)
}

#[derive(Serialize)]
struct ReportFile<'a> {
    #[serde(flatten)]
    report: &'a EvalReport,
    metadata: &'a BTreeMap<String, String>,
}

fn write_report(path: &Path, report: &EvalReport, meta: &BTreeMap<String, String>, row: TableRow) -> Result<(), CliError> {
    ensure_parent(path)?;
    let json = serde_json::to_string_pretty(&ReportFile { report, metadata: meta }).expect("report serializes");
    fs::write(path, json + "\n")?;
    let table = format!("# seed {}\n{}", meta.get("seed").map_or("-", String::as_str), render_table(&[row]));
    fs::write(path.with_extension("txt"), table)?;
    Ok(())
}

/// Scores predictions for the test split and writes the JSON report plus a
/// text table next to it.
pub fn cmd_eval(cfg: &RunConfig, source: &PredictionSource) -> Result<EvalReport, CliError> {
    let records = load_records(&cfg.test_path())?;
    let mut meta = BTreeMap::from([
        ("seed".to_string(), cfg.seed.to_string()),
        ("source".to_string(), source.describe()),
    ]);
    let (predictions, model, batch, epoch) = match source {
        PredictionSource::Checkpoint(path) => {
            if !path.exists() {
                return Err(CliError::Data(format!("checkpoint {} does not exist", path.display())));
            }
            let ck = Checkpoint::load(path)?;
            let batch = ck.metadata.get("batch_size").and_then(|v| v.parse().ok());
            let epoch = ck.metadata.get("epochs").and_then(|v| v.parse().ok());
            if let Some(seed) = ck.metadata.get("seed") {
                meta.insert("train_seed".to_string(), seed.clone());
            }
            let predictor = EquationPredictor::from(ck);
            (predict_with(&predictor, &records, cfg)?, cfg.grid.model_name.clone(), batch, epoch)
        }
        PredictionSource::External(adapter) => {
            let requests: Vec<PredictionRequest> = records
                .iter()
                .map(|r| PredictionRequest {
                    id: r.id.clone(),
                    problem: r.problem_text.clone(),
                })
                .collect();
            (external_predict(&requests, adapter)?, "External".to_string(), None, None)
        }
    };
    let report = evaluate_corpus_with_tolerance(&predictions, &records, cfg.eval.tolerance)?;
    write_report(
        &cfg.report_path(),
        &report,
        &meta,
        TableRow::from_report(&model, batch, epoch, &report),
    )?;
    Ok(report)
}

/// Parses and solves an equation given on the command line.
pub fn cmd_solve_equation(text: &str) -> Result<Rational, CliError> {
    let eq = parse_equation(text).map_err(|e| CliError::Data(format!("`{text}`: {e}")))?;
    solve(&eq).map_err(|e| CliError::Data(format!("`{text}`: {e}")))
}

/// Predicts an equation for `problem` with a trained checkpoint and solves
/// it. Returns the equation and its value.
pub fn cmd_solve_problem(problem: &str, checkpoint: &Path, beam: usize) -> Result<(String, Rational), CliError> {
    if !checkpoint.exists() {
        return Err(CliError::Data(format!("checkpoint {} does not exist", checkpoint.display())));
    }
    let predictor = EquationPredictor::from(Checkpoint::load(checkpoint)?);
    let equation = predictor.predict(problem, beam.max(1))?;
    let value = cmd_solve_equation(&equation)?;
    Ok((equation, value))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub batch_size: usize,
    pub epochs: usize,
    /// `(corpus BLEU, solution accuracy)` or the failure message.
    pub result: Result<(f64, f64), String>,
}

fn grid_row(cfg: &RunConfig, batch_size: usize, train: &[MwpRecord], validation: &[MwpRecord], test: &[MwpRecord], vocabs: &(Vocab, Vocab)) -> Vec<(GridCell, Option<EvalReport>)> {
    let mut epochs = cfg.grid.epochs.clone();
    epochs.sort_unstable();
    epochs.dedup();
    let max_epochs = epochs.last().copied().unwrap_or(0);
    let failed = |msg: String| {
        epochs
            .iter()
            .map(|&e| {
                (
                    GridCell {
                        batch_size,
                        epochs: e,
                        result: Err(msg.clone()),
                    },
                    None,
                )
            })
            .collect()
    };
    let trained = match train_model(cfg, batch_size, max_epochs, &epochs, train, validation, &vocabs.0, &vocabs.1) {
        Ok(t) => t,
        Err(e) => return failed(e.to_string()),
    };
    let mut snapshots: BTreeMap<usize, Parameters> = trained.snapshots.into_iter().collect();
    if epochs.contains(&0) {
        snapshots.insert(0, Parameters::init(&trained.final_params.config, cfg.seed));
    }
    epochs
        .iter()
        .map(|&e| {
            let outcome = snapshots
                .remove(&e)
                .ok_or_else(|| format!("no parameters after epoch {e}"))
                .and_then(|params| {
                    let predictor = EquationPredictor {
                        params,
                        src_vocab: vocabs.0.clone(),
                        tgt_vocab: vocabs.1.clone(),
                    };
                    let preds = predict_with(&predictor, test, cfg).map_err(|e| e.to_string())?;
                    evaluate_corpus_with_tolerance(&preds, test, cfg.eval.tolerance).map_err(|e| e.to_string())
                });
            match outcome {
                Ok(report) => (
                    GridCell {
                        batch_size,
                        epochs: e,
                        result: Ok((report.corpus_bleu, report.solution_accuracy)),
                    },
                    Some(report),
                ),
                Err(msg) => (
                    GridCell {
                        batch_size,
                        epochs: e,
                        result: Err(msg),
                    },
                    None,
                ),
            }
        })
        .collect()
}

/// Trains one model per batch size and scores it after each listed epoch
/// count on the test split. Writes `grid.txt` plus one JSON report per cell
/// under the run directory. A failing cell is recorded and the rest go on.
pub fn cmd_grid(cfg: &RunConfig) -> Result<Vec<GridCell>, CliError> {
    let train = load_records(&cfg.train_path())?;
    let validation = optional_validation(cfg)?;
    let test = load_records(&cfg.test_path())?;
    let vocabs = run_vocabs(cfg, &train)?;

    let rows: Vec<Vec<(GridCell, Option<EvalReport>)>> = if cfg.grid.parallel {
        thread::scope(|s| {
            let handles: Vec<_> = cfg
                .grid
                .batch_sizes
                .iter()
                .map(|&b| {
                    let (train, validation, test, vocabs) = (&train, &validation, &test, &vocabs);
                    s.spawn(move || grid_row(cfg, b, train, validation, test, vocabs))
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("grid worker panicked"))
                .collect()
        })
    } else {
        cfg.grid
            .batch_sizes
            .iter()
            .map(|&b| grid_row(cfg, b, &train, &validation, &test, &vocabs))
            .collect()
    };

    let grid_dir = cfg.paths.run_dir.join("grid");
    fs::create_dir_all(&grid_dir)?;
    let mut cells = Vec::new();
    let mut table_rows = Vec::new();
    for (cell, report) in rows.into_iter().flatten() {
        if let Some(report) = &report {
            let meta = metadata(cfg, cell.batch_size, cell.epochs, train.len());
            let row = TableRow::from_report(&cfg.grid.model_name, Some(cell.batch_size), Some(cell.epochs), report);
            write_report(
                &grid_dir.join(format!("b{}_e{}.json", cell.batch_size, cell.epochs)),
                report,
                &meta,
                row,
            )?;
        }
        table_rows.push(TableRow {
            model: cfg.grid.model_name.clone(),
            batch: Some(cell.batch_size),
            epoch: Some(cell.epochs),
            result: cell.result.clone(),
        });
        cells.push(cell);
    }
    fs::write(
        cfg.paths.run_dir.join("grid.txt"),
        format!("# seed {}\n{}", cfg.seed, render_table(&table_rows)),
    )?;
    Ok(cells)
}
