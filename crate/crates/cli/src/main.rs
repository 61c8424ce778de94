//! `lsr`: encode, index, search, evaluate, train heads and run ablations
//! from per-method JSON configs.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use lsr_core::config::MethodConfig;
use lsr_core::error::{LsrError, Result};
use lsr_core::eval::{evaluate_standard, read_qrels, read_run, write_run};
use lsr_core::index::{read_index, write_index};
use lsr_core::io::{format_vectors, read_collection, read_vectors, write_atomic};
use lsr_core::pipeline::{
    audit_support, check_vocab, encode_texts, format_table, index_documents, obtain_heads, run_ablation, run_with_heads,
    search_all, side_encoder, Backbones, Dataset, Side,
};
use lsr_core::supervision::TrainOptions;
use lsr_core::synth::{generate, SynthParams};

#[derive(Parser)]
#[command(name = "lsr", version, about = "Learned sparse retrieval toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Method configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Seed for the toy backbone and trainer.
    #[arg(long, default_value_t = 13)]
    seed: u64,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Encode queries or documents into a JSONL vector file.
    Encode {
        #[command(flatten)]
        common: Common,
        /// `query` or `doc`.
        #[arg(long)]
        side: String,
        /// Texts to encode; defaults to the config's queries or collection.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Build an impact index from encoded documents.
    Index {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
    },
    /// Search an index with encoded queries and write a TREC run.
    Search {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        index: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Retrieval depth; defaults to the config's `depth`.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Score a run against qrels.
    Eval {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        run: PathBuf,
        /// Defaults to the config's qrels.
        #[arg(long)]
        qrels: Option<PathBuf>,
    },
    /// Train the neural heads and write them as JSON.
    TrainHead {
        #[command(flatten)]
        common: Common,
    },
    /// Run the full pipeline for a method (encode, index, search, eval).
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Compare a base method with single-change variants.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// `field=value`, repeatable.
        #[arg(long = "toggle")]
        toggles: Vec<String>,
    },
    /// Write a synthetic retrieval task.
    Synth {
        #[arg(long, default_value_t = 13)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
        /// JSON file overriding generator parameters.
        #[arg(long)]
        params: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> Result<MethodConfig> {
    let cfg = MethodConfig::load(&common.config)?;
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write_atomic(path, s.as_bytes())
}

fn prepare(common: &Common) -> Result<(MethodConfig, Dataset, Backbones)> {
    let cfg = load_config(common)?;
    let data = Dataset::load(&cfg)?;
    let backbones = Backbones::build(&cfg, data.vocab.len(), common.seed)?;
    Ok((cfg, data, backbones))
}

fn cmd_encode(common: &Common, side: &str, input: Option<&Path>) -> Result<()> {
    let side = Side::parse(side).ok_or_else(|| LsrError::config("side", format!("expected query or doc, got `{side}`")))?;
    let (cfg, data, backbones) = prepare(common)?;
    let texts = match (input, side) {
        (Some(p), _) => read_collection(p, &data.vocab)?,
        (None, Side::Query) => data.queries.clone(),
        (None, Side::Doc) => data.docs.clone(),
    };
    let heads = obtain_heads(&cfg, &data, &backbones, TrainOptions::new(0, 0.0))?;
    let enc = side_encoder(&cfg, side, &heads, &backbones, &data);
    let vectors = encode_texts(&enc, &texts)?;
    let audit = audit_support(&enc, &texts, &vectors)?;
    write_atomic(&common.output, format_vectors(&vectors, Some(&data.vocab))?.as_bytes())?;
    let nnz: usize = vectors.iter().map(|(_, v)| v.nnz()).sum();
    eprintln!(
        "encoded {} texts with {} ({} nnz total, {} expanded beyond input)",
        vectors.len(),
        enc.kind,
        nnz,
        audit.expanded
    );
    Ok(())
}

fn cmd_index(common: &Common, input: &Path) -> Result<()> {
    let cfg = load_config(common)?;
    let vocab = lsr_core::io::read_vocabulary(
        cfg.paths
            .vocab
            .as_deref()
            .ok_or_else(|| LsrError::config("paths.vocab", "required but not set"))?,
    )?;
    let docs = read_vectors(input, Some(&vocab))?;
    let index = index_documents(&cfg, &vocab, docs)?;
    write_index(&index, &common.output)?;
    println!("{}", serde_json::to_string(&index.stats)?);
    Ok(())
}

fn cmd_search(common: &Common, index_dir: &Path, input: &Path, k: Option<usize>) -> Result<()> {
    let cfg = load_config(common)?;
    let vocab = lsr_core::io::read_vocabulary(
        cfg.paths
            .vocab
            .as_deref()
            .ok_or_else(|| LsrError::config("paths.vocab", "required but not set"))?,
    )?;
    let index = read_index(index_dir)?;
    check_vocab(&index, &vocab)?;
    let queries = read_vectors(input, Some(&vocab))?;
    let out = search_all(&index, &queries, k.unwrap_or(cfg.depth), &cfg.name)?;
    write_run(&out.run, &common.output)?;
    let nnz: Vec<usize> = out.per_query.iter().map(|&(_, n, _)| n).collect();
    let n = nnz.len().max(1) as f64;
    let summary = json!({
        "queries": out.per_query.len(),
        "ops_count": out.ops_count,
        "mean_ops_per_query": out.ops_count as f64 / n,
        "query_nnz": {
            "mean": nnz.iter().sum::<usize>() as f64 / n,
            "min": nnz.iter().min().copied().unwrap_or(0),
            "max": nnz.iter().max().copied().unwrap_or(0),
        },
        "per_query": out.per_query.iter().map(|(id, nnz, ops)| json!({"id": id, "nnz": nnz, "ops": ops})).collect::<Vec<_>>(),
    });
    let mut stats_path = common.output.clone().into_os_string();
    stats_path.push(".stats.json");
    write_json(Path::new(&stats_path), &summary)?;
    eprintln!("ops_count {} over {} queries", out.ops_count, out.per_query.len());
    Ok(())
}

fn cmd_eval(common: &Common, run: &Path, qrels: Option<&Path>) -> Result<()> {
    let cfg = load_config(common)?;
    let qrels_path = qrels
        .or(cfg.paths.qrels.as_deref())
        .ok_or_else(|| LsrError::config("paths.qrels", "required but not set"))?;
    let metrics = evaluate_standard(&read_run(run)?, &read_qrels(qrels_path)?)?;
    let value = serde_json::to_value(metrics)?;
    write_json(&common.output, &value)?;
    println!("{}", serde_json::to_string(&value)?);
    Ok(())
}

fn cmd_train(common: &Common) -> Result<()> {
    let (cfg, data, backbones) = prepare(common)?;
    if cfg.training.steps == 0 {
        return Err(LsrError::config("training.steps", "train-head needs steps > 0"));
    }
    let heads = obtain_heads(&cfg, &data, &backbones, TrainOptions::new(0, 0.0))?;
    let dir = &common.output;
    if let Some(h) = &heads.query {
        write_atomic(&dir.join("query.json"), h.to_json()?.as_bytes())?;
    }
    if let Some(h) = &heads.doc {
        write_atomic(&dir.join("doc.json"), h.to_json()?.as_bytes())?;
    }
    let history: Vec<_> = heads
        .history
        .iter()
        .map(|r| json!({"step": r.step, "loss": r.loss, "regularization": r.regularization}))
        .collect();
    write_json(&dir.join("history.json"), &json!(history))?;
    if let (Some(first), Some(last)) = (heads.history.first(), heads.history.last()) {
        eprintln!("loss {:.6} -> {:.6} over {} steps", first.loss, last.loss, heads.history.len());
    }
    Ok(())
}

fn cmd_run(common: &Common) -> Result<()> {
    let (cfg, data, backbones) = prepare(common)?;
    let heads = obtain_heads(&cfg, &data, &backbones, TrainOptions::new(0, 0.0))?;
    let out = run_with_heads(&cfg, &data, &backbones, heads)?;
    let dir = &common.output;
    write_run(&out.run, &dir.join("run.txt"))?;
    write_json(&dir.join("report.json"), &serde_json::to_value(&out.report)?)?;
    let table = format_table(&[&out.report]);
    write_atomic(&dir.join("report.txt"), table.as_bytes())?;
    print!("{table}");
    Ok(())
}

fn cmd_ablate(common: &Common, toggles: &[String]) -> Result<()> {
    let cfg = load_config(common)?;
    let report = run_ablation(&cfg, toggles, common.seed)?;
    let text = report.to_text();
    write_atomic(&common.output.join("ablation.txt"), text.as_bytes())?;
    write_atomic(&common.output.join("ablation.json"), report.to_json()?.as_bytes())?;
    print!("{text}");
    Ok(())
}

fn cmd_synth(seed: u64, output: &Path, params: Option<&Path>) -> Result<()> {
    let mut p = match params {
        Some(path) => serde_json::from_str(&lsr_core::io::read_to_string(path)?)?,
        None => SynthParams::default(),
    };
    p.seed = seed;
    let task = generate(&p)?;
    task.write_to(output)?;
    eprintln!(
        "wrote {} docs, {} queries, {} training triples to {}",
        task.docs.len(),
        task.queries.len(),
        task.triples.len(),
        output.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Encode { common, side, input } => cmd_encode(common, side, input.as_deref()),
        Command::Index { common, input } => cmd_index(common, input),
        Command::Search { common, index, input, k } => cmd_search(common, index, input, *k),
        Command::Eval { common, run, qrels } => cmd_eval(common, run, qrels.as_deref()),
        Command::TrainHead { common } => cmd_train(common),
        Command::Run { common } => cmd_run(common),
        Command::Ablate { common, toggles } => cmd_ablate(common, toggles),
        Command::Synth { seed, output, params } => cmd_synth(*seed, output, params.as_deref()),
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("LSR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                log::warn!("could not size thread pool: {e}");
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    init_threads();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
