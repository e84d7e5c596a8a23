//! `walign`: build compact-window indexes, query them, and check the engine
//! against brute force.

mod bench;
mod verify;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use walign_core::corpus::{ingest_corpus, read_jsonl, Scheme, TokenizerConfig};
use walign_core::hashing::{HashFamily, HashKind};
use walign_core::index::{BuildStats, IndexConfig, InvertedIndex};
use walign_core::oracle::running_example;
use walign_core::partition::Mode;
use walign_core::query::{longest_match, query_text};
use walign_core::weights::{Idf, Tf, WeightScheme};

/// Cell outputs larger than this are refused by `--cells`.
const CELL_CAP: u64 = 100_000;

#[derive(Parser, Debug)]
#[command(name = "walign", version, about = "Near-duplicate text alignment with compact windows")]
struct Cli {
    /// Worker threads for index builds (defaults to all cores).
    #[arg(long, env = "WALIGN_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Partition every text of a JSONL corpus and write the index.
    Index(IndexArgs),
    /// Report subsequences similar to a query string.
    Query(QueryArgs),
    /// Summarize an index file.
    Stats(StatsArgs),
    /// Time partitioning along one parameter axis; prints CSV.
    Bench(bench::BenchArgs),
    /// Check partitions and queries against brute force.
    Verify(verify::VerifyArgs),
}

#[derive(Args, Debug, Serialize)]
struct IndexArgs {
    /// JSONL corpus, one {"id": .., "text": ..} per line.
    #[arg(long, required_unless_present = "running_example")]
    corpus: Option<PathBuf>,
    /// Output index file.
    #[arg(long, short)]
    out: PathBuf,
    /// Stats sidecar path (default: <out>.stats.json).
    #[arg(long)]
    stats: Option<PathBuf>,
    /// Sketch size.
    #[arg(long, short, default_value_t = 64)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Hash family: icws or universal.
    #[arg(long, default_value = "icws")]
    hash: String,
    /// Term frequency weight: binary, raw, log, squared.
    #[arg(long, default_value = "raw")]
    tf: String,
    /// Inverse document frequency weight: unary, standard, smooth, prob.
    #[arg(long, default_value = "unary")]
    idf: String,
    /// Keys visited while partitioning: active or all.
    #[arg(long, default_value = "active")]
    mode: String,
    /// Tokenizer: whitespace, qgram:N, or bytes.
    #[arg(long, default_value = "whitespace")]
    tokenizer: String,
    #[arg(long)]
    lowercase: bool,
    /// Index the lettered running example under its fixed hash table
    /// (k copies of the same table) instead of a corpus.
    #[arg(long)]
    running_example: bool,
}

#[derive(Args, Debug, Serialize)]
struct QueryArgs {
    #[arg(long, short)]
    index: PathBuf,
    /// Similarity threshold in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Query text.
    #[arg(long, short)]
    q: String,
    /// Print one line per cell instead of rectangles.
    #[arg(long)]
    cells: bool,
    /// Print only the longest match per text.
    #[arg(long, conflicts_with = "cells")]
    longest: bool,
}

#[derive(Args, Debug, Serialize)]
struct StatsArgs {
    #[arg(long, short)]
    index: PathBuf,
}

#[derive(Serialize)]
struct IndexReport<'a> {
    config: &'a IndexArgs,
    texts: usize,
    skipped: &'a [u32],
    clamped_idf_tokens: usize,
    #[serde(flatten)]
    stats: &'a BuildStats,
}

fn echo<T: Serialize>(config: &T) {
    if let Ok(s) = serde_json::to_string(config) {
        eprintln!("# config {s}");
    }
}

fn cmd_index(args: &IndexArgs) -> Result<()> {
    echo(args);
    let mode: Mode = args.mode.parse()?;
    let (idx, stats, texts, skipped, clamped) = if args.running_example {
        let (text, table) = running_example();
        let family = HashFamily::Table(vec![table; args.k.max(1)]);
        let (idx, stats) =
            InvertedIndex::build_texts(&[text], family, WeightScheme::raw_count(), mode)?;
        (idx, stats, 1, Vec::new(), 0)
    } else {
        let path = args.corpus.as_ref().expect("clap enforces --corpus");
        let file = File::open(path).with_context(|| format!("cannot open corpus {}", path.display()))?;
        let records = read_jsonl(BufReader::new(file))
            .with_context(|| format!("cannot read corpus {}", path.display()))?;
        let tokenizer = TokenizerConfig {
            scheme: args.tokenizer.parse::<Scheme>()?,
            lowercase: args.lowercase,
        };
        let corpus = ingest_corpus(records, tokenizer)?;
        for id in &corpus.skipped {
            eprintln!("warning: text {id} is empty after tokenization, skipped");
        }
        if corpus.texts.is_empty() {
            bail!("corpus {} has no non-empty texts", path.display());
        }
        let cfg = IndexConfig {
            kind: args.hash.parse::<HashKind>()?,
            k: args.k,
            master_seed: args.seed,
            tf: args.tf.parse::<Tf>()?,
            idf: args.idf.parse::<Idf>()?,
            mode,
        };
        let (idx, stats) = InvertedIndex::build(&corpus, &cfg)?;
        for t in idx.scheme().clamped_tokens() {
            let surface = corpus.vocab.surface(*t).unwrap_or("?");
            eprintln!("warning: idf of token {surface:?} is not positive, clamped");
        }
        let clamped = idx.scheme().clamped_tokens().len();
        (idx, stats, corpus.texts.len(), corpus.skipped, clamped)
    };
    idx.save(&args.out)
        .with_context(|| format!("cannot write index {}", args.out.display()))?;
    let stats_path = args.stats.clone().unwrap_or_else(|| {
        let mut p = args.out.clone().into_os_string();
        p.push(".stats.json");
        PathBuf::from(p)
    });
    let report = IndexReport {
        config: args,
        texts,
        skipped: &skipped,
        clamped_idf_tokens: clamped,
        stats: &stats,
    };
    let json = serde_json::to_string_pretty(&report)?;
    std::fs::write(&stats_path, &json)
        .with_context(|| format!("cannot write stats {}", stats_path.display()))?;
    eprintln!(
        "indexed {texts} texts: {} windows in {:.3}s -> {}",
        stats.windows_total,
        stats.build_seconds,
        args.out.display()
    );
    Ok(())
}

fn load(path: &Path) -> Result<InvertedIndex> {
    InvertedIndex::load(path).with_context(|| format!("cannot load index {}", path.display()))
}

fn cmd_query(args: &QueryArgs) -> Result<()> {
    echo(args);
    let idx = load(&args.index)?;
    let res = query_text(&idx, &args.q, args.theta)?;
    let mut out = BufWriter::new(io::stdout().lock());
    if args.longest {
        for (text_id, (i, j)) in longest_match(&res) {
            writeln!(out, "{}", serde_json::json!({"text_id": text_id, "i": i, "j": j}))?;
        }
    } else if args.cells {
        for (text_id, i, j) in res.cells(CELL_CAP)? {
            writeln!(out, "{}", serde_json::json!({"text_id": text_id, "i": i, "j": j}))?;
        }
    } else {
        for r in res.iter() {
            writeln!(out, "{}", serde_json::to_string(r)?)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_stats(args: &StatsArgs) -> Result<()> {
    echo(args);
    let idx = load(&args.index)?;
    let mut per_fn = Vec::with_capacity(idx.k());
    let mut per_text = std::collections::BTreeMap::<u32, u64>::new();
    let mut distinct_values = 0usize;
    for f in 0..idx.k() {
        let lists = idx.lists(f);
        distinct_values += lists.len();
        let mut n = 0u64;
        for w in lists.values().flatten() {
            n += 1;
            *per_text.entry(w.text_id).or_insert(0) += 1;
        }
        per_fn.push(n);
    }
    let meta = idx.meta();
    let summary = serde_json::json!({
        "hash": idx.family().kind().to_string(),
        "k": idx.k(),
        "scheme": idx.scheme().id().to_string(),
        "mode": meta.mode.to_string(),
        "master_seed": meta.master_seed,
        "texts": meta.text_lengths.len(),
        "tokens": meta.text_lengths.values().map(|&n| n as u64).sum::<u64>(),
        "vocabulary": meta.vocabulary.len(),
        "windows_total": idx.window_count(),
        "windows_per_fn": per_fn,
        "distinct_values": distinct_values,
        "windows_per_text": per_text,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("cannot configure the thread pool")?;
    }
    match &cli.command {
        Command::Index(a) => cmd_index(a)?,
        Command::Query(a) => cmd_query(a)?,
        Command::Stats(a) => cmd_stats(a)?,
        Command::Bench(a) => bench::run(a)?,
        Command::Verify(a) => return verify::run(a),
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
