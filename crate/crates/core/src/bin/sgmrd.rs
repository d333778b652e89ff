//! Command-line front end: generate benchmark data, run the subspace
//! monitor over a CSV stream, score outliers against the monitored
//! subspaces, and evaluate the results.

use std::io::{BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use sgmrd::benchgen::{self, GeneratorConfig};
use sgmrd::engine::{Engine, EngineConfig, Snapshot};
use sgmrd::error::Error;
use sgmrd::estimator::EstimatorConfig;
use sgmrd::manifest::{sibling, RunManifest};
use sgmrd::metrics::{self, MonitorLog};
use sgmrd::outliers::{self, LofParams, ScoreConfig, ScoreRecord, DEFAULT_K_GRID};
use sgmrd::policy::PolicyKind;
use sgmrd::stream::{CsvStream, Observation};

#[derive(Parser)]
#[command(name = "sgmrd", version, about = "Streaming subspace search and outlier detection")]
struct Cli {
    /// Worker threads for estimator, search and LOF tasks. Outputs do not
    /// depend on this.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic drift benchmark with hidden subspace outliers.
    Generate(GenerateArgs),
    /// Stream a CSV file through the subspace monitor.
    Run(RunArgs),
    /// Score observations with the LOF ensemble over monitored subspaces.
    Detect(DetectArgs),
    /// Compute ranking and monitoring metrics.
    Evaluate(EvaluateArgs),
}

#[derive(Args, serde::Serialize)]
struct GenerateArgs {
    /// Stream dimensionality.
    #[arg(long)]
    dims: usize,
    /// Number of drift phases.
    #[arg(long, default_value_t = 10)]
    phases: usize,
    /// Observations per phase.
    #[arg(long = "per-phase", default_value_t = 1000)]
    per_phase: usize,
    /// Per-subspace outlier probability; calibrated from the dimensionality
    /// when omitted.
    #[arg(long = "outlier-prob")]
    outlier_prob: Option<f64>,
    /// Largest planted subspace; defaults to 5 capped by the dimensionality.
    #[arg(long = "max-subspace-dim")]
    max_subspace_dim: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dataset CSV path; the ground truth and manifest land next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, serde::Serialize)]
struct RunArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    input: PathBuf,
    /// Label column to exclude from the features; autodetects "label".
    #[arg(long = "label-column")]
    label_column: Option<String>,
    /// Sliding window size (w).
    #[arg(long, default_value_t = 1000)]
    window: usize,
    /// Steps between update rounds (v).
    #[arg(long, default_value_t = 2)]
    step: usize,
    /// Dimensions re-searched per round (L).
    #[arg(long, default_value_t = 1)]
    plays: usize,
    /// Exponential smoothing weight.
    #[arg(long, default_value_t = 0.9)]
    gamma: f64,
    /// Monte-Carlo iterations per quality estimate (M).
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    /// Expected fraction of the window kept by a condition.
    #[arg(long = "slice-mass", default_value_t = 0.5)]
    slice_mass: f64,
    /// Update policy: ts|rd|gd|batch|init|gold.
    #[arg(long, default_value = "ts")]
    policy: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Refresh raw qualities only at update rounds.
    #[arg(long = "monitor-at-updates-only", default_value_t = false)]
    monitor_at_updates_only: bool,
    /// Snapshot JSON-lines path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, serde::Serialize)]
struct DetectArgs {
    /// Input CSV, the same stream the snapshots were produced from.
    #[arg(long)]
    input: PathBuf,
    /// Label column to exclude from the features; autodetects "label".
    #[arg(long = "label-column")]
    label_column: Option<String>,
    /// Snapshot JSON-lines file from `sgmrd run`.
    #[arg(long)]
    snapshots: PathBuf,
    /// Fixed LOF neighborhood size.
    #[arg(long, conflicts_with = "k_sweep")]
    k: Option<usize>,
    /// Sweep k over {1,2,5,10,20,50,100} and keep the best AUC (needs labels).
    #[arg(long = "k-sweep", default_value_t = false)]
    k_sweep: bool,
    /// Steps between score evaluations.
    #[arg(long = "eval-every", default_value_t = 100)]
    eval_every: usize,
    /// Score CSV path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, serde::Serialize)]
struct EvaluateArgs {
    /// Score CSV from `sgmrd detect`, for ranking metrics.
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Dataset CSV supplying labels when the score file has none.
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Label column inside --labels; autodetects "label".
    #[arg(long = "label-column")]
    label_column: Option<String>,
    /// Snapshot JSON-lines file, for monitoring metrics.
    #[arg(long = "monitor-log")]
    monitor_log: Option<PathBuf>,
    /// Snapshot file of a gold run over the same stream, enabling regret.
    #[arg(long = "gold-log")]
    gold_log: Option<PathBuf>,
    /// Metrics JSON path.
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let threads = cli.threads.max(1);
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool,
        Err(err) => {
            eprintln!("error: cannot build thread pool: {err}");
            std::process::exit(3);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(move || {
        pool.install(|| match cli.command {
            Command::Generate(args) => cmd_generate(args, threads),
            Command::Run(args) => cmd_run(args, threads),
            Command::Detect(args) => cmd_detect(args, threads),
            Command::Evaluate(args) => cmd_evaluate(args, threads),
        })
    }));
    match outcome {
        Ok(Ok(())) => {}
        Ok(Err(err)) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
        Err(_) => {
            eprintln!("error: internal invariant violation");
            std::process::exit(3);
        }
    }
}

/// 1 for usage errors, 2 for data errors.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidConfig(_)
        | Error::PlaysOutOfRange { .. }
        | Error::BadNeighborhood { .. }
        | Error::UnknownLabelColumn(_) => 1,
        _ => 2,
    }
}

type CmdResult = Result<(), Error>;

fn cmd_generate(args: GenerateArgs, threads: usize) -> CmdResult {
    let mut cfg = GeneratorConfig::new(args.dims, args.seed);
    cfg.phases = args.phases;
    cfg.per_phase = args.per_phase;
    if let Some(m) = args.max_subspace_dim {
        cfg.max_subspace_dim = m;
    }
    if let Some(p) = args.outlier_prob {
        cfg.outlier_prob = p;
    }

    let mut manifest = RunManifest::new(
        "generate",
        serde_json::json!({ "flags": &args, "effective": cfg }),
        args.seed,
        threads,
    );
    let data = manifest.time_phase("generate", || benchgen::generate(&cfg))?;

    let spec_path = sibling(&args.out, "spec.json");
    manifest.time_phase("write", || -> CmdResult {
        benchgen::write_dataset_csv(&data.observations, &args.out)?;
        let json = serde_json::to_string_pretty(&data.truth).expect("truth serializes");
        std::fs::write(&spec_path, json + "\n").map_err(|source| Error::Io {
            path: spec_path.clone(),
            source,
        })
    })?;

    let outliers = data
        .observations
        .iter()
        .filter(|o| o.label == Some(true))
        .count();
    eprintln!(
        "generated {} observations ({} outliers, {:.2}%) across {} distributions",
        data.observations.len(),
        outliers,
        100.0 * outliers as f64 / data.observations.len() as f64,
        data.truth.distributions.len(),
    );
    manifest.output(&args.out).output(&spec_path);
    manifest.write(sibling(&args.out, "manifest.json"))
}

/// Resolves the label column: an explicit name must exist; otherwise a
/// column called "label" is used when present.
fn resolve_label_column(
    header: &[String],
    requested: Option<&str>,
) -> Result<Option<String>, Error> {
    match requested {
        Some(name) => {
            if header.iter().any(|h| h == name) {
                Ok(Some(name.to_string()))
            } else {
                Err(Error::UnknownLabelColumn(name.to_string()))
            }
        }
        None => Ok(header.iter().find(|h| h.as_str() == "label").cloned()),
    }
}

fn open_stream(path: &Path, label_column: Option<&str>) -> Result<CsvStream, Error> {
    let probe = CsvStream::open(path, None)?;
    let label = resolve_label_column(probe.header(), label_column)?;
    CsvStream::open(path, label.as_deref())
}

fn cmd_run(args: RunArgs, threads: usize) -> CmdResult {
    let cfg = EngineConfig {
        window_size: args.window,
        step_size: args.step,
        plays: args.plays,
        gamma: args.gamma,
        estimator: EstimatorConfig {
            iterations: args.iterations,
            slice_mass: args.slice_mass,
            seed: args.seed,
        },
        policy: args.policy.parse::<PolicyKind>()?,
        monitor_every_step: !args.monitor_at_updates_only,
    };
    let mut manifest = RunManifest::new(
        "run",
        serde_json::json!({ "flags": &args, "effective": cfg }),
        args.seed,
        threads,
    );
    manifest.input(&args.input).output(&args.out);

    let stream = open_stream(&args.input, args.label_column.as_deref())?;
    let mut engine = Engine::new(stream.dims(), cfg)?;
    let file = std::fs::File::create(&args.out).map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    let mut out = BufWriter::new(file);

    manifest.time_phase("stream", || -> CmdResult {
        let mut emitted = 0u64;
        for obs in stream {
            if let Some(snapshot) = engine.push(obs?)? {
                let line = serde_json::to_string(&snapshot).expect("snapshot serializes");
                writeln!(out, "{line}").map_err(|source| Error::Io {
                    path: args.out.clone(),
                    source,
                })?;
                emitted += 1;
                if emitted % 1000 == 0 {
                    eprintln!(
                        "t = {}, {} estimates spent",
                        engine.time(),
                        engine.evaluation_count()
                    );
                }
            }
        }
        out.flush().map_err(|source| Error::Io {
            path: args.out.clone(),
            source,
        })?;
        if engine.map().is_none() {
            return Err(Error::StreamTooShort {
                required: args.window,
                got: engine.time() as usize,
            });
        }
        Ok(())
    })?;

    eprintln!(
        "monitored {} dimensions over {} observations, {} quality estimates",
        engine.dims(),
        engine.time(),
        engine.evaluation_count(),
    );
    manifest.write(sibling(&args.out, "manifest.json"))
}

fn read_snapshots(path: &Path) -> Result<Vec<Snapshot>, Error> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut snapshots = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let snapshot: Snapshot = serde_json::from_str(&line).map_err(|err| {
            Error::Misaligned(format!("{}:{}: bad snapshot: {err}", path.display(), i + 1))
        })?;
        snapshots.push(snapshot);
    }
    if snapshots.is_empty() {
        return Err(Error::Misaligned(format!("{}: no snapshots", path.display())));
    }
    Ok(snapshots)
}

fn write_scores(path: &Path, records: &[ScoreRecord]) -> CmdResult {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let labeled = records.iter().any(|r| r.label.is_some());
    writeln!(out, "{}", if labeled { "t,score,label" } else { "t,score" }).map_err(io_err)?;
    for r in records {
        if labeled {
            let label = match r.label {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(out, "{},{},{label}", r.time_index, r.score).map_err(io_err)?;
        } else {
            writeln!(out, "{},{}", r.time_index, r.score).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

fn cmd_detect(args: DetectArgs, threads: usize) -> CmdResult {
    if args.k.is_none() && !args.k_sweep {
        return Err(Error::InvalidConfig("pass --k <n> or --k-sweep".into()));
    }
    let mut manifest =
        RunManifest::new("detect", serde_json::json!({ "flags": &args }), 0, threads);
    manifest
        .input(&args.input)
        .input(&args.snapshots)
        .output(&args.out);

    let observations = manifest.time_phase("read", || -> Result<Vec<Observation>, Error> {
        open_stream(&args.input, args.label_column.as_deref())?.collect()
    })?;
    let snapshots = read_snapshots(&args.snapshots)?;
    // The engine emits its first snapshot the moment the window fills.
    let cfg = ScoreConfig {
        window_size: snapshots[0].t as usize,
        eval_every: args.eval_every,
    };

    if let Some(k) = args.k {
        let records = manifest.time_phase("score", || {
            outliers::score_stream(&observations, &snapshots, LofParams { k }, &cfg)
        })?;
        write_scores(&args.out, &records)?;
        eprintln!("scored {} observations with k = {k}", records.len());
    } else {
        let sweep = manifest.time_phase("score", || {
            outliers::best_k_sweep(&observations, &snapshots, &DEFAULT_K_GRID, &cfg)
        })?;
        write_scores(&args.out, &sweep.records)?;
        let sweep_path = sibling(&args.out, "sweep.json");
        let summary = serde_json::json!({
            "best_k": sweep.best_k,
            "best_auc": sweep.best_auc,
            "auc_by_k": sweep.auc_by_k,
        });
        std::fs::write(
            &sweep_path,
            serde_json::to_string_pretty(&summary).unwrap() + "\n",
        )
        .map_err(|source| Error::Io {
            path: sweep_path.clone(),
            source,
        })?;
        manifest.output(&sweep_path);
        eprintln!(
            "scored {} observations; best k = {} (AUC {:.4})",
            sweep.records.len(),
            sweep.best_k,
            sweep.best_auc
        );
    }
    manifest.write(sibling(&args.out, "manifest.json"))
}

fn read_scores(path: &Path) -> Result<Vec<ScoreRecord>, Error> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let reader = std::io::BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Misaligned(format!("{}: empty score file", path.display())))?
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let columns: Vec<&str> = header.trim().split(',').collect();
    if columns.len() < 2 || columns[0] != "t" || columns[1] != "score" {
        return Err(Error::Misaligned(format!(
            "{}: expected header t,score[,label]",
            path.display()
        )));
    }
    let has_label = columns.get(2) == Some(&"label");
    let mut records = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row = i + 2;
        let cells: Vec<&str> = line.trim().split(',').collect();
        let bad_cell = |column: &str, message: String| Error::Csv {
            path: path.to_path_buf(),
            row,
            column: column.into(),
            message,
        };
        let time_index: u64 = cells[0]
            .parse()
            .map_err(|_| bad_cell("t", format!("cell {:?} is not an integer", cells[0])))?;
        let score: f64 = cells
            .get(1)
            .ok_or_else(|| bad_cell("score", "missing score cell".into()))?
            .parse()
            .map_err(|_| bad_cell("score", format!("cell {:?} is not numeric", cells[1])))?;
        let label = if has_label {
            match cells.get(2).copied().unwrap_or("") {
                "1" => Some(true),
                "0" => Some(false),
                "" => None,
                other => {
                    return Err(bad_cell(
                        "label",
                        format!("label cell {other:?} is not 0 or 1"),
                    ))
                }
            }
        } else {
            None
        };
        records.push(ScoreRecord {
            time_index,
            score,
            contributions: 1,
            label,
        });
    }
    Ok(records)
}

/// Overrides score labels from a dataset CSV, joined on the time index.
fn attach_labels(
    records: &mut [ScoreRecord],
    path: &Path,
    label_column: Option<&str>,
) -> CmdResult {
    let stream = open_stream(path, label_column.or(Some("label")))?;
    let labels: Vec<Option<bool>> = stream
        .map(|obs| obs.map(|o| o.label))
        .collect::<Result<_, Error>>()?;
    for record in records.iter_mut() {
        let idx = record.time_index as usize;
        if idx == 0 || idx > labels.len() {
            return Err(Error::Misaligned(format!(
                "score at t = {} has no row in the label file",
                record.time_index
            )));
        }
        record.label = labels[idx - 1];
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct MonitoringReport {
    steps: usize,
    dims: usize,
    average_quality: f64,
    per_step_quality: Vec<f64>,
    update_frequency: Vec<f64>,
    successes: u64,
    attempts: u64,
    success_rate_per_attempt: Option<f64>,
    success_rate_per_dimension_step: f64,
    regret: Option<metrics::RegretReport>,
}

fn cmd_evaluate(args: EvaluateArgs, threads: usize) -> CmdResult {
    if args.scores.is_none() && args.monitor_log.is_none() {
        return Err(Error::InvalidConfig(
            "pass --scores and/or --monitor-log".into(),
        ));
    }
    let mut manifest =
        RunManifest::new("evaluate", serde_json::json!({ "flags": &args }), 0, threads);
    let mut summary = Vec::new();
    let mut report = serde_json::Map::new();

    if let Some(scores_path) = &args.scores {
        manifest.input(scores_path);
        let mut records = read_scores(scores_path)?;
        if let Some(labels_path) = &args.labels {
            manifest.input(labels_path);
            attach_labels(&mut records, labels_path, args.label_column.as_deref())?;
        }
        let scores: Vec<f64> = records.iter().map(|r| r.score).collect();
        let labels: Vec<bool> = records
            .iter()
            .map(|r| r.label.ok_or(Error::MissingLabels))
            .collect::<Result<_, Error>>()?;
        let ranking = metrics::ranking_metrics(&scores, &labels)?;
        summary.push(format!(
            "AUC {:.4} AP {:.4} P@1% {:.3} P@2% {:.3} P@5% {:.3} R@1% {:.3} R@2% {:.3} R@5% {:.3}",
            ranking.auc,
            ranking.average_precision,
            ranking.precision_at_1,
            ranking.precision_at_2,
            ranking.precision_at_5,
            ranking.recall_at_1,
            ranking.recall_at_2,
            ranking.recall_at_5,
        ));
        report.insert("ranking".into(), serde_json::to_value(&ranking).unwrap());
    }

    if let Some(log_path) = &args.monitor_log {
        manifest.input(log_path);
        let snapshots = read_snapshots(log_path)?;
        let mut log = MonitorLog::from_snapshots(&snapshots)?;
        if let Some(gold_path) = &args.gold_log {
            manifest.input(gold_path);
            let gold = read_snapshots(gold_path)?;
            log = log.with_gold(&gold)?;
        }
        let quality = metrics::average_quality(&log);
        let frequency = metrics::update_frequency(&log);
        let success = metrics::success_rate(&log);
        let regret = log
            .gold
            .is_some()
            .then(|| metrics::regret(&log))
            .transpose()?;
        summary.push(match success.per_attempt {
            Some(rate) => format!("Q {:.4} U {:.3}", quality.overall, rate),
            None => format!("Q {:.4} U NA", quality.overall),
        });
        if let Some(r) = &regret {
            summary.push(format!("regret/step {:.4}", r.per_step));
        }
        report.insert(
            "monitoring".into(),
            serde_json::to_value(MonitoringReport {
                steps: log.steps(),
                dims: log.dims(),
                average_quality: quality.overall,
                per_step_quality: quality.per_step,
                update_frequency: frequency,
                successes: success.successes,
                attempts: success.attempts,
                success_rate_per_attempt: success.per_attempt,
                success_rate_per_dimension_step: success.per_dimension_step,
                regret,
            })
            .unwrap(),
        );
    }

    let json = serde_json::to_string_pretty(&serde_json::Value::Object(report)).unwrap();
    std::fs::write(&args.out, json + "\n").map_err(|source| Error::Io {
        path: args.out.clone(),
        source,
    })?;
    manifest.output(&args.out);
    println!("{}", summary.join(" | "));
    manifest.write(sibling(&args.out, "manifest.json"))
}
