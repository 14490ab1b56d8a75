//! `patrank`: batch evaluation of patent embedding systems.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use patrank_core::config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "patrank", version, about = "Batch evaluation engine for patent embeddings")]
pub struct Cli {
    /// key = value configuration file; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Worker threads (default: PATRANK_THREADS, then the config, then all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic labeled corpus with citations and embeddings.
    Synth(SynthArgs),
    /// Validate a corpus and write it back normalized.
    Ingest(IngestArgs),
    /// Family-disjoint train/validation/test split.
    Split(SplitArgs),
    /// Citation-derived relevance judgments.
    Qrels(QrelsArgs),
    /// Compose a corpus view as queries.jsonl-style text.
    View(ViewArgs),
    /// Build a BM25 index over a view file.
    Index(IndexArgs),
    /// Rank documents for each query (the judged ones with --qrels).
    Retrieve(RetrieveArgs),
    /// Linear or reciprocal-rank fusion of a dense and a sparse run.
    Fuse(FuseArgs),
    /// Reorder a run's top candidates with precomputed scores.
    Rerank(RerankArgs),
    /// Linear probe or kNN classification on frozen embeddings.
    Classify(ClassifyArgs),
    /// KMeans clustering scored against primary labels.
    Cluster(ClusterArgs),
    /// Matryoshka truncation with re-normalization.
    Truncate(TruncateArgs),
    /// Contrastive training pairs for one recipe.
    Pairs(PairsArgs),
    /// Paired bootstrap between runs.
    Significance(SignificanceArgs),
    /// Query-section by corpus-view retrieval grid.
    Ablate(AblateArgs),
    /// Leaderboard and slice tables for a set of runs.
    Report(ReportArgs),
    /// Print the effective configuration.
    Config(ConfigArgs),
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub docs: usize,
    #[arg(long, default_value_t = 6)]
    pub topics: usize,
    #[arg(long, default_value_t = 32)]
    pub dim: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Systems to embed, as name:noise.
    #[arg(long, value_delimiter = ',', default_value = "alpha:0.35,beta:0.5")]
    pub systems: Vec<String>,
    /// Views to embed for each system.
    #[arg(long, value_delimiter = ',', default_value = "TA")]
    pub views: Vec<String>,
}

#[derive(Args, Debug)]
pub struct CorpusInputs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long)]
    pub citations: Option<PathBuf>,
    /// Reject citation edges to families outside the corpus.
    #[arg(long)]
    pub strict: bool,
}

/// Qrels file plus the corpus used to tag judgments IN, OUT or UNRESOLVED.
#[derive(Args, Debug)]
pub struct QrelsInput {
    #[arg(long)]
    pub qrels: PathBuf,
    /// Corpus for domain tags (default: `corpus` in the config). Without
    /// one every judgment is UNRESOLVED and IN/OUT slices stay empty.
    #[arg(long = "tag-corpus")]
    pub tag_corpus: Option<PathBuf>,
    /// Label datasets that carry coarse domains (default: all).
    #[arg(long, value_delimiter = ',')]
    pub coarse: Vec<String>,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    /// Drop family members whose sections duplicate an earlier member.
    #[arg(long)]
    pub dedup: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    #[arg(long, value_delimiter = ',')]
    pub ratios: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct QrelsArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    /// Label datasets that carry coarse domains (default: all).
    #[arg(long, value_delimiter = ',')]
    pub coarse: Vec<String>,
    /// Keep only queries in this partition of --split.
    #[arg(long, requires = "partition")]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, requires = "split")]
    pub partition: Option<PartitionArg>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum PartitionArg {
    Train,
    Validation,
    Test,
}

#[derive(Args, Debug)]
pub struct ViewArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    /// Named view or a `+`-joined section list.
    #[arg(long)]
    pub view: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct IndexArgs {
    /// View file to index.
    #[arg(long)]
    pub docs: PathBuf,
    #[arg(long)]
    pub k1: Option<f64>,
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum RetrieveMethod {
    Bm25,
    Dense,
    Maxsim,
}

#[derive(Args, Debug)]
pub struct RetrieveArgs {
    #[arg(long)]
    pub system: String,
    #[arg(long, value_enum, default_value = "dense")]
    pub method: RetrieveMethod,
    /// Corpus view label; with `embedding.<system>` set in the config it
    /// also selects `<dir>/<view>.emb`.
    #[arg(long)]
    pub view: Option<String>,
    /// Query-side input: view file (bm25), EMB1 (dense) or TOK1 (maxsim).
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Document-side input: BM25 index, EMB1 or TOK1.
    #[arg(long)]
    pub docs: Option<PathBuf>,
    /// Retrieval depth per query.
    #[arg(long)]
    pub k: Option<usize>,
    /// Queries to run are the judged queries of this file (default: every
    /// query in the query input).
    #[arg(long)]
    pub qrels: Option<PathBuf>,
    /// Allow a query to retrieve its own document.
    #[arg(long)]
    pub keep_self: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FuseMethod {
    Linear,
    Rrf,
}

#[derive(Args, Debug)]
pub struct FuseArgs {
    #[arg(long)]
    pub dense: PathBuf,
    #[arg(long)]
    pub sparse: PathBuf,
    #[arg(long, value_enum, default_value = "linear")]
    pub method: FuseMethod,
    #[arg(long, default_value_t = 0.5)]
    pub alpha: f64,
    #[arg(long, default_value_t = 60)]
    pub rrf_k: usize,
    #[arg(long)]
    pub pool_depth: Option<usize>,
    /// Evaluate the whole alpha/k grid against these qrels instead.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long = "tag-corpus")]
    pub tag_corpus: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub coarse: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct RerankArgs {
    #[arg(long)]
    pub run: PathBuf,
    /// ScoreTable TSV (`query-id  doc-id  score`).
    #[arg(long)]
    pub scores: PathBuf,
    #[arg(long, default_value = "reranker")]
    pub reranker: String,
    #[arg(long, default_value_t = 100)]
    pub depth: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ClassifyMethod {
    Probe,
    Knn,
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long)]
    pub dataset: String,
    #[arg(long, value_enum, default_value = "probe")]
    pub method: ClassifyMethod,
    /// Neighbour count for kNN (default: every k of the config).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub c_grid: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Test-set predictions.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long)]
    pub dataset: String,
    /// Cluster count (default: number of classes).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TruncateArgs {
    #[arg(long)]
    pub emb: PathBuf,
    #[arg(long)]
    pub dim: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PairsArgs {
    #[command(flatten)]
    pub input: CorpusInputs,
    #[arg(long)]
    pub split: PathBuf,
    /// R1, R2, R3, R4 or R3M.
    #[arg(long)]
    pub recipe: String,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub r1_cap: Option<usize>,
    /// Keep every R1 pair.
    #[arg(long, conflicts_with = "r1_cap")]
    pub no_cap: bool,
    /// Pair count for R3M.
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub datasets: Vec<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SignificanceArgs {
    #[arg(long)]
    pub run_a: Option<PathBuf>,
    #[arg(long)]
    pub run_b: Option<PathBuf>,
    /// Further runs; with three or more runs adjacent systems are tested
    /// and grouped into tiers.
    #[arg(long = "run")]
    pub runs: Vec<PathBuf>,
    #[arg(long)]
    pub qrels: PathBuf,
    #[arg(long, default_value = "ndcg")]
    pub metric: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long = "B")]
    pub resamples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = patrank_core::stats::DEFAULT_FAMILY_SIZE)]
    pub family_size: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct AblateArgs {
    #[arg(long)]
    pub system: String,
    #[command(flatten)]
    pub qrels: QrelsInput,
    /// Directory holding `<section>.emb` query embeddings.
    #[arg(long)]
    pub query_dir: PathBuf,
    /// Directory holding `<view>.emb` corpus embeddings.
    #[arg(long)]
    pub doc_dir: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub sections: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub views: Option<Vec<String>>,
    #[arg(long, default_value = "ndcg")]
    pub metric: String,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    #[command(flatten)]
    pub qrels: QrelsInput,
    /// Run file, optionally prefixed with its view as `VIEW=PATH`.
    #[arg(long = "run", required = true)]
    pub runs: Vec<String>,
    #[arg(long, default_value = "ndcg")]
    pub metric: String,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "tsv,text")]
    pub format: Vec<String>,
    /// Add per-jurisdiction slices.
    #[arg(long)]
    pub jurisdictions: bool,
    #[arg(long, default_value = "leaderboard")]
    pub stem: String,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ConfigArgs {
    /// Print every key with its effective value.
    #[arg(long)]
    pub dump: bool,
    /// Apply `key=value` before printing.
    #[arg(long = "set")]
    pub sets: Vec<String>,
}

fn thread_count(cli: &Cli, cfg: &RunConfig) -> usize {
    cli.threads.or_else(|| std::env::var("PATRANK_THREADS").ok().and_then(|v| v.parse().ok())).unwrap_or(cfg.threads)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let cfg = match &cli.config {
        Some(path) => RunConfig::load(path),
        None => Ok(RunConfig::default()),
    };
    let result = cfg.map_err(anyhow::Error::from).and_then(|cfg| {
        let threads = thread_count(&cli, &cfg);
        if threads > 0 {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
        }
        commands::run(&cli, cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let c = cause.to_string();
                if !msg.contains(&c) {
                    msg = format!("{msg}: {c}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}
