//! `manicheck`: command-line front end for detection, evaluation and
//! dataset construction.
//!
//! Exit status is 0 on success, 1 on an operational error and 2 on a usage
//! error. With `--json` every subcommand prints one JSON document on stdout.

use std::collections::HashSet;
use std::fs;
use std::io::{IsTerminal, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use manicheck_core::dataset::{
    approved_inputs, assemble_dataset, derive_all, ingest_sources, load_feed_manifest, originals_from_entries,
    review_rows, DatasetPrompts, DerivedHeadline, DirectiveInput, ReviewRow,
};
use manicheck_core::eval::{
    compute_metrics, evaluate_dataset, load_benchmark, run_ablation, run_benchmark, BenchmarkAdapterConfig,
    ConfusionMatrix, EvalReport, LabelScheme, Metrics,
};
use manicheck_core::exec::Execution;
use manicheck_core::inference::PromptTemplate;
use manicheck_core::jsonl;
use manicheck_core::model::{ClaimKind, ClaimRecord, Prediction};
use manicheck_core::pipeline::{ConfigLayer, DetectOptions, Detector, PipelineConfig, Providers};
use manicheck_core::retrieval::{FetchPolicy, HttpTransport, PageCache};

/// `println!` that tolerates a closed stdout (e.g. piped into `head`).
macro_rules! outln {
    ($($arg:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($arg)*);
    }};
}

#[derive(Parser)]
#[command(name = "manicheck", version, about = "Retrieval-augmented detection of manipulated news claims")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Flat `key = value` configuration file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Scripted search results (JSON mapping queries to hits).
    #[arg(long, global = true, value_name = "FILE")]
    search_fixture: Option<PathBuf>,
    /// Page fixture manifest served instead of the network.
    #[arg(long, global = true, value_name = "FILE")]
    pages: Option<PathBuf>,
    /// Scripted LLM transcript keyed by prompt digest.
    #[arg(long, global = true, value_name = "FILE")]
    llm_script: Option<PathBuf>,
    /// Embedding provider (mock16 unless an embedding URL is configured)
    #[arg(long, global = true, value_parser = ["mock16", "live"])]
    embed: Option<String>,
    /// Page cache directory (also MANICHECK_CACHE_DIR)
    #[arg(long, global = true, value_name = "DIR")]
    cache_dir: Option<PathBuf>,
    /// Serve pages from the cache only.
    #[arg(long, global = true)]
    no_fetch: bool,
    /// Detection prompt template file.
    #[arg(long, global = true, value_name = "FILE")]
    template: Option<PathBuf>,
    /// Machine-readable output on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Default)]
struct Tuning {
    /// Documents collected per claim.
    #[arg(long)]
    k: Option<usize>,
    /// Chunks placed in the context.
    #[arg(long)]
    chunks: Option<usize>,
    /// Inference runs per claim (odd).
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Classify one claim.
    Detect {
        claim: String,
        #[command(flatten)]
        tuning: Tuning,
        /// Answer without retrieved context.
        #[arg(long)]
        no_retrieval: bool,
        #[arg(long)]
        region: Option<String>,
        #[arg(long, value_name = "YYYY-MM-DD")]
        date: Option<NaiveDate>,
    },
    /// Evaluate a labeled dataset and write a report.
    Eval {
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        #[arg(long, value_name = "REPORT")]
        out: PathBuf,
        #[arg(long)]
        no_retrieval: bool,
        /// Claims evaluated at once.
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Evaluate a dataset with retrieval switched off.
    Ablation {
        #[arg(long, value_name = "PATH")]
        dataset: PathBuf,
        #[arg(long, value_name = "REPORT")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Evaluate an external fact-checking benchmark.
    Benchmark {
        #[arg(long, value_name = "PATH")]
        data: PathBuf,
        #[arg(long, value_parser = parse_scheme)]
        scheme: LabelScheme,
        /// Use each row's bundled evidence instead of web search.
        #[arg(long)]
        evidence_mode: bool,
        #[arg(long)]
        no_retrieval: bool,
        #[arg(long, value_name = "REPORT")]
        out: PathBuf,
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
        #[command(flatten)]
        tuning: Tuning,
    },
    /// Recompute metrics from a report or from raw counts.
    Metrics {
        /// Report written by eval, ablation or benchmark.
        #[arg(required_unless_present = "matrix", conflicts_with = "matrix")]
        report: Option<PathBuf>,
        /// Counts as TP,FP,FN,TN.
        #[arg(long, value_name = "TP,FP,FN,TN", value_parser = parse_matrix)]
        matrix: Option<ConfusionMatrix>,
    },
    /// Build a labeled dataset from news feeds.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Manage the page cache.
    #[command(subcommand)]
    Cache(CacheCommand),
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Read feeds into original records.
    Ingest {
        /// JSON array of {source, provider, region}.
        #[arg(long, value_name = "FILE")]
        feeds: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Date given to entries without one (defaults to the current day).
        #[arg(long, value_name = "YYYY-MM-DD")]
        today: Option<NaiveDate>,
    },
    /// Screen originals, draft negations and extract key contexts.
    Derive {
        #[arg(long, value_name = "FILE")]
        originals: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Directory holding claimworthy.txt, negation.txt or extraction.txt
        /// to use instead of the bundled prompts.
        #[arg(long, value_name = "DIR")]
        prompts: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        parallel: Option<usize>,
    },
    /// Write the review file for a human to approve.
    ReviewExport {
        #[arg(long, value_name = "FILE")]
        derived: PathBuf,
        /// Alteration directives, one JSON object per line.
        #[arg(long, value_name = "FILE")]
        directives: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Mark every complete row approved.
        #[arg(long)]
        approve_all: bool,
    },
    /// Assemble approved rows into the dataset.
    Assemble {
        #[arg(long, value_name = "FILE")]
        originals: PathBuf,
        #[arg(long, value_name = "FILE")]
        review: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum CacheCommand {
    /// Delete every cached page.
    Purge,
}

fn parse_scheme(s: &str) -> Result<LabelScheme, String> {
    s.parse()
}

fn parse_matrix(s: &str) -> Result<ConfusionMatrix, String> {
    let parts: Vec<u64> = s
        .split(',')
        .map(|p| p.trim().parse::<u64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [tp, fp, fn_, tn] => Ok(ConfusionMatrix::new(tp, fp, fn_, tn)),
        _ => Err("expected four comma-separated counts".into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(cli.global.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_logging(verbose: u8) {
    let default = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let filter = tracing_subscriber::EnvFilter::try_from_default_env()
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(default));
    tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr)
        .with_target(false)
        .with_ansi(std::io::stderr().is_terminal())
        .init();
}

/// Layers configuration as file < environment < flags.
fn load_config(g: &Global, extra: impl FnOnce(&mut ConfigLayer)) -> Result<PipelineConfig> {
    let mut layers = Vec::new();
    if let Some(path) = &g.config {
        layers.push(ConfigLayer::from_file(path)?);
    }
    layers.push(ConfigLayer::from_env(|k| std::env::var(k).ok()));
    let mut flags = ConfigLayer::new("command line");
    let path = |p: &Path| p.display().to_string();
    if let Some(p) = &g.search_fixture {
        flags.set("search.fixture", path(p));
    }
    if let Some(p) = &g.pages {
        flags.set("pages", path(p));
    }
    if let Some(p) = &g.llm_script {
        flags.set("llm.script", path(p));
    }
    if let Some(e) = &g.embed {
        flags.set("embed", e.as_str());
    }
    if let Some(p) = &g.cache_dir {
        flags.set("cache_dir", path(p));
    }
    if g.no_fetch {
        flags.set("no_fetch", "true");
    }
    if let Some(p) = &g.template {
        flags.set("template", path(p));
    }
    extra(&mut flags);
    layers.push(flags);
    Ok(PipelineConfig::from_layers(&layers)?)
}

impl Tuning {
    fn apply(&self, layer: &mut ConfigLayer) {
        if let Some(k) = self.k {
            layer.set("k_documents", k.to_string());
        }
        if let Some(n) = self.chunks {
            layer.set("retrieved_chunks", n.to_string());
        }
        if let Some(n) = self.runs {
            layer.set("runs", n.to_string());
        }
        if let Some(t) = self.temperature {
            layer.set("temperature", t.to_string());
        }
    }
}

fn run_flags(tuning: &Tuning, no_retrieval: bool, parallel: Option<usize>) -> impl FnOnce(&mut ConfigLayer) + '_ {
    move |layer| {
        tuning.apply(layer);
        if no_retrieval {
            layer.set("mode", "ablation");
        }
        if let Some(n) = parallel {
            layer.set("parallel", n.to_string());
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Detect {
            claim,
            tuning,
            no_retrieval,
            region,
            date,
        } => {
            let config = load_config(g, run_flags(tuning, *no_retrieval, None))?;
            let detector = Detector::from_config(config)?;
            let opts = DetectOptions {
                claim_id: None,
                region: region.clone(),
                date: *date,
            };
            let prediction = detector.detect(claim, &opts)?;
            if g.json {
                print_json(&prediction)
            } else {
                print_prediction(claim, &prediction);
                Ok(())
            }
        }
        Command::Eval {
            dataset,
            out,
            no_retrieval,
            parallel,
            tuning,
        } => {
            let config = load_config(g, run_flags(tuning, *no_retrieval, *parallel))?;
            let records = read_dataset(dataset)?;
            let detector = Detector::from_config(config)?;
            let report = evaluate_dataset(&records, &detector);
            finish_report(g, &report, out)
        }
        Command::Ablation {
            dataset,
            out,
            parallel,
            tuning,
        } => {
            let config = load_config(g, run_flags(tuning, true, *parallel))?;
            let records = read_dataset(dataset)?;
            let detector = Detector::from_config(config)?;
            let report = run_ablation(&records, &detector);
            finish_report(g, &report, out)
        }
        Command::Benchmark {
            data,
            scheme,
            evidence_mode,
            no_retrieval,
            out,
            parallel,
            tuning,
        } => {
            let config = load_config(g, run_flags(tuning, *no_retrieval, *parallel))?;
            let adapter = BenchmarkAdapterConfig {
                scheme: *scheme,
                evidence_mode: *evidence_mode,
            };
            let claims = load_benchmark(data, &adapter)?;
            let detector = Detector::from_config(config)?;
            let report = run_benchmark(&claims, &adapter, &detector);
            finish_report(g, &report, out)
        }
        Command::Metrics { report, matrix } => {
            let (cm, stored) = match (report, matrix) {
                (Some(path), _) => {
                    let raw = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
                    let report: EvalReport =
                        serde_json::from_str(&raw).with_context(|| format!("{} is not a report", path.display()))?;
                    let (cm, _) = report.recompute();
                    (cm, Some(report.confusion))
                }
                (None, Some(cm)) => (*cm, None),
                (None, None) => unreachable!("clap requires one of them"),
            };
            if stored.is_some_and(|s| s != cm) {
                tracing::warn!("stored confusion matrix differs from the per-claim outcomes; using the outcomes");
            }
            let metrics = compute_metrics(&cm);
            if g.json {
                print_json(&json!({"confusion": cm, "metrics": metrics}))
            } else {
                print_metrics(&cm, &metrics);
                Ok(())
            }
        }
        Command::Dataset(cmd) => run_dataset(g, cmd),
        Command::Cache(CacheCommand::Purge) => {
            let config = load_config(g, |_| {})?;
            let Some(dir) = config.cache_dir else {
                bail!("no cache directory configured (use --cache-dir or MANICHECK_CACHE_DIR)");
            };
            let removed = PageCache::new(&dir).purge().with_context(|| format!("cannot purge {}", dir.display()))?;
            if g.json {
                print_json(&json!({"cache_dir": dir, "removed": removed}))
            } else {
                outln!("removed {removed} cached page(s) from {}", dir.display());
                Ok(())
            }
        }
    }
}

fn run_dataset(g: &Global, cmd: &DatasetCommand) -> Result<()> {
    match cmd {
        DatasetCommand::Ingest { feeds, out, today } => {
            let sources = load_feed_manifest(feeds)?;
            let today = today.unwrap_or_else(|| chrono::Utc::now().date_naive());
            let base = feeds.parent().unwrap_or(Path::new("."));
            let entries = ingest_sources(&sources, base, today, &HttpTransport, &FetchPolicy::default())?;
            let originals = originals_from_entries(&entries);
            jsonl::write(out, &originals)?;
            report_written(g, out, originals.len(), "original record(s)")
        }
        DatasetCommand::Derive {
            originals,
            out,
            prompts,
            parallel,
        } => {
            let config = load_config(g, |_| {})?;
            let records: Vec<ClaimRecord> = jsonl::read(originals)?;
            let prompts = load_prompts(prompts.as_deref())?;
            let providers = Providers::from_config(&config)?;
            let exec = Execution::with_parallelism(parallel.unwrap_or(config.parallel));
            let derived = derive_all(&records, &prompts, providers.llm(), exec)?;
            jsonl::write(out, &derived)?;
            let worthy = derived.iter().filter(|d| d.claimworthy).count();
            if g.json {
                print_json(&json!({"out": out, "headlines": derived.len(), "claimworthy": worthy}))
            } else {
                outln!("wrote {} derived row(s) to {} ({worthy} claim-worthy)", derived.len(), out.display());
                Ok(())
            }
        }
        DatasetCommand::ReviewExport {
            derived,
            directives,
            out,
            approve_all,
        } => {
            let derived: Vec<DerivedHeadline> = jsonl::read(derived)?;
            let directives = match directives {
                Some(path) => jsonl::read::<DirectiveInput>(path)?
                    .into_iter()
                    .map(DirectiveInput::resolve)
                    .collect::<Result<Vec<_>, _>>()?,
                None => Vec::new(),
            };
            let mut rows = review_rows(&derived, &directives);
            if *approve_all {
                approve_complete(&mut rows);
            }
            jsonl::write(out, &rows)?;
            report_written(g, out, rows.len(), "review row(s)")
        }
        DatasetCommand::Assemble { originals, review, out } => {
            let records: Vec<ClaimRecord> = jsonl::read(originals)?;
            let rows: Vec<ReviewRow> = jsonl::read(review)?;
            let approved = approved_inputs(&rows)?;
            let keep: HashSet<&str> = approved.originals.iter().map(String::as_str).collect();
            let originals: Vec<ClaimRecord> = records.into_iter().filter(|r| keep.contains(r.id.as_str())).collect();
            if originals.len() != keep.len() {
                bail!("review approves originals missing from the originals file: {}", missing_ids(&keep, &originals));
            }
            let dataset = assemble_dataset(originals, &approved.negations, &approved.alterations)?;
            jsonl::write(out, &dataset.records)?;
            if g.json {
                print_json(&json!({"out": out, "summary": dataset.summary}))
            } else {
                outln!("wrote {} record(s) to {}", dataset.summary.total, out.display());
                for (kind, n) in &dataset.summary.per_kind {
                    outln!("  {kind}: {n}");
                }
                Ok(())
            }
        }
    }
}

fn missing_ids(keep: &HashSet<&str>, found: &[ClaimRecord]) -> String {
    let found: HashSet<&str> = found.iter().map(|r| r.id.as_str()).collect();
    let mut missing: Vec<&str> = keep.difference(&found).copied().collect();
    missing.sort_unstable();
    missing.join(", ")
}

/// Approves originals, drafted negations and alterations whose origin is
/// itself under review; rows with nothing to approve stay unapproved.
fn approve_complete(rows: &mut [ReviewRow]) {
    let reviewed: HashSet<String> = rows
        .iter()
        .filter(|r| r.kind == ClaimKind::Original)
        .map(|r| r.origin_id.clone())
        .collect();
    for row in rows.iter_mut() {
        row.approved = match row.kind {
            ClaimKind::Original => true,
            ClaimKind::Negation => row.proposed_headline.is_some(),
            ClaimKind::ContextAltered => reviewed.contains(&row.origin_id),
        };
    }
}

fn load_prompts(dir: Option<&Path>) -> Result<DatasetPrompts> {
    let mut prompts = DatasetPrompts::default();
    let Some(dir) = dir else {
        return Ok(prompts);
    };
    for (name, slot) in [
        ("claimworthy.txt", &mut prompts.claimworthy),
        ("negation.txt", &mut prompts.negation),
        ("extraction.txt", &mut prompts.extraction),
    ] {
        let path = dir.join(name);
        if path.exists() {
            *slot = PromptTemplate::load_headline(&path)?;
        }
    }
    Ok(prompts)
}

fn read_dataset(path: &Path) -> Result<Vec<ClaimRecord>> {
    jsonl::read(path).map_err(|e| {
        if e.is_not_found() {
            anyhow::anyhow!("dataset file not found: {}", path.display())
        } else {
            e.into()
        }
    })
}

fn finish_report(g: &Global, report: &EvalReport, out: &Path) -> Result<()> {
    let body = serde_json::to_string_pretty(report)? + "\n";
    fs::write(out, body).with_context(|| format!("cannot write {}", out.display()))?;
    let failed = report.per_claim.iter().filter(|o| o.error.is_some()).count();
    if g.json {
        return print_json(&json!({
            "out": out,
            "mode": report.mode,
            "claims": report.per_claim.len(),
            "failed": failed,
            "confusion": report.confusion,
            "metrics": report.metrics,
        }));
    }
    outln!("{} claim(s), report written to {}", report.per_claim.len(), out.display());
    if failed > 0 {
        outln!("{failed} claim(s) failed and were scored as non-conclusive");
    }
    print_metrics(&report.confusion, &report.metrics);
    for (kind, acc) in &report.per_kind_accuracy {
        outln!("accuracy[{kind}]: {acc:.4}");
    }
    if let Some(r) = report.non_conclusive_rate_majority {
        outln!("non-conclusive majorities: {:.1}%", r * 100.0);
    }
    Ok(())
}

fn report_written(g: &Global, out: &Path, n: usize, what: &str) -> Result<()> {
    if g.json {
        print_json(&json!({"out": out, "rows": n}))
    } else {
        outln!("wrote {n} {what} to {}", out.display());
        Ok(())
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    outln!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn print_prediction(claim: &str, p: &Prediction) {
    outln!("claim: {claim}");
    outln!("verdict: {}", p.majority);
    for (i, run) in p.runs.iter().enumerate() {
        outln!("run {}: {}: {}", i + 1, run.label, run.explanation);
    }
    if !p.context_digest.is_empty() {
        outln!("sources:");
        for s in &p.context_digest {
            outln!("  [{}] {}", s.rank, s.url);
        }
    }
    for w in &p.warnings {
        outln!("warning: {w}");
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.4}"))
}

fn print_metrics(cm: &ConfusionMatrix, m: &Metrics) {
    outln!("tp={} fp={} fn={} tn={}", cm.tp, cm.fp, cm.fn_, cm.tn);
    outln!(
        "precision={} recall={} f1={} accuracy={}",
        fmt_opt(m.precision),
        fmt_opt(m.recall),
        fmt_opt(m.f1),
        fmt_opt(m.accuracy)
    );
}
