use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use patrank_core::ablation::{run_ablation_grid, GridInputs};
use patrank_core::config::RunConfig;
use patrank_core::corpus::{
    build_qrels, build_view, domain_of, family_disjoint_split, load_corpus, write_citations, write_corpus, Corpus,
    JurisdictionMap, LoadOptions, Partition, Qrels, Split, SplitRatios, ViewCorpus, ViewSpec,
};
use patrank_core::dense::{maxsim_topk, retrieve_dense, truncate_renorm, EmbeddingMatrix, TokenEmbeddings};
use patrank_core::fusion::{linear_fuse, rerank_with_scores, rrf_fuse, sweep, ScoreTable};
use patrank_core::lexical::{build_bm25, retrieve_bm25, Bm25Index};
use patrank_core::metrics::{EvalContext, Metric, Slice};
use patrank_core::probes::{
    clustering_scores, dataset_classes, eval_probe, kmeans, knn_classify, macro_f1, train_linear_probe, LabelMatrix,
};
use patrank_core::recipes::{generate_pairs, Recipe, RecipeOptions};
use patrank_core::report::{emit_report, fmt4, leaderboard, slice_table, ReportFormat, Table};
use patrank_core::stats::{adjacent_tests, tier_group, write_significance, write_significance_to};
use patrank_core::synth::{generate, SynthConfig};
use patrank_core::{tsv, Error, Run};

use crate::*;

/// 2 for filesystem failures, 1 for everything else.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    let io = e
        .chain()
        .any(|c| c.downcast_ref::<Error>().is_some_and(Error::is_io) || c.downcast_ref::<std::io::Error>().is_some());
    if io {
        2
    } else {
        1
    }
}

pub fn run(cli: &Cli, mut cfg: RunConfig) -> Result<()> {
    if cli.config.is_some() {
        cfg.validate()?;
    }
    match &cli.command {
        Command::Synth(a) => synth(a, &cfg),
        Command::Ingest(a) => ingest(a, &cfg),
        Command::Split(a) => split(a, &cfg),
        Command::Qrels(a) => qrels(a, &cfg),
        Command::View(a) => view(a, &cfg),
        Command::Index(a) => index(a, &cfg),
        Command::Retrieve(a) => retrieve(a, &cfg),
        Command::Fuse(a) => fuse(a, &cfg),
        Command::Rerank(a) => rerank(a),
        Command::Classify(a) => classify(a, &cfg),
        Command::Cluster(a) => cluster(a, &cfg),
        Command::Truncate(a) => truncate(a),
        Command::Pairs(a) => pairs(a, &cfg),
        Command::Significance(a) => significance(a, &cfg),
        Command::Ablate(a) => ablate(a, &cfg),
        Command::Report(a) => report(a, &cfg),
        Command::Config(a) => {
            for s in &a.sets {
                let (k, v) =
                    s.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{s}`")))?;
                cfg.set(k.trim(), v.trim()).map_err(Error::Config)?;
            }
            cfg.validate()?;
            if a.dump {
                print!("{}", cfg.dump());
            }
            Ok(())
        }
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn load_inputs(input: &CorpusInputs, cfg: &RunConfig) -> Result<Corpus> {
    let corpus = input
        .corpus
        .as_ref()
        .or(cfg.corpus.as_ref())
        .ok_or_else(|| Error::Config("no corpus given (--corpus or `corpus` in the config)".into()))?;
    let labels = input.labels.as_ref().or(cfg.labels.as_ref());
    let citations = input.citations.as_ref().or(cfg.citations.as_ref());
    Ok(load_corpus(
        corpus,
        labels.map(PathBuf::as_path),
        citations.map(PathBuf::as_path),
        LoadOptions { strict_citations: input.strict },
    )?)
}

/// Loads qrels and, when a corpus is at hand, restores domain tags.
fn load_qrels(path: &Path, tag_corpus: Option<&PathBuf>, coarse: &[String], cfg: &RunConfig) -> Result<Qrels> {
    let mut qrels = Qrels::load(path)?;
    if let Some(corpus) = tag_corpus.or(cfg.corpus.as_ref()) {
        let labels = cfg.labels.as_deref();
        let corpus = load_corpus(corpus, labels, None, LoadOptions::default())?;
        qrels.retag(&corpus, |d| domain_of(d, coarse));
    }
    Ok(qrels)
}

fn partition(p: PartitionArg) -> Partition {
    match p {
        PartitionArg::Train => Partition::Train,
        PartitionArg::Validation => Partition::Validation,
        PartitionArg::Test => Partition::Test,
    }
}

fn synth(a: &SynthArgs, cfg: &RunConfig) -> Result<()> {
    let sc = generate(&SynthConfig {
        n_docs: a.docs,
        n_topics: a.topics,
        dim: a.dim,
        seed: a.seed.unwrap_or(cfg.seed),
        ..SynthConfig::default()
    })?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_corpus(&sc.corpus, &a.out.join("corpus.jsonl"))?;
    write_citations(&sc.edges, &a.out.join("citations.tsv"))?;
    let mut conf = String::from("corpus = corpus.jsonl\ncitations = citations.tsv\n");
    for spec in &a.systems {
        let (name, noise) = spec.split_once(':').unwrap_or((spec, "0.4"));
        let noise: f64 = noise.parse().map_err(|_| Error::Config(format!("bad noise in `{spec}`")))?;
        let dir = a.out.join("emb").join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        for v in &a.views {
            sc.embed(name, v, noise)?.save(&dir.join(format!("{v}.emb")))?;
        }
        conf.push_str(&format!("embedding.{name} = emb/{name}\n"));
    }
    let conf_path = a.out.join("patrank.conf");
    std::fs::write(&conf_path, conf).map_err(|e| Error::io(&conf_path, e))?;
    println!(
        "synthetic corpus: {} docs, {} families, {} citation edges -> {}",
        sc.corpus.len(),
        sc.corpus.families().len(),
        sc.edges.len(),
        a.out.display()
    );
    Ok(())
}

fn ingest(a: &IngestArgs, cfg: &RunConfig) -> Result<()> {
    let mut corpus = load_inputs(&a.input, cfg)?;
    let mut removed = Vec::new();
    if a.dedup {
        (corpus, removed) = corpus.dedup_families()?;
    }
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    write_corpus(&corpus, &a.out.join("corpus.jsonl"))?;
    if !corpus.citations().is_empty() {
        write_citations(corpus.citations(), &a.out.join("citations.tsv"))?;
    }
    println!(
        "{} docs, {} families, {} citation edges, {} label datasets, {} duplicates dropped",
        corpus.len(),
        corpus.families().len(),
        corpus.citations().len(),
        corpus.label_datasets().len(),
        removed.len()
    );
    Ok(())
}

fn split(a: &SplitArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    let r = a.ratios.as_ref().unwrap_or(&cfg.split_ratios);
    let [train, validation, test] = r[..] else {
        bail!(Error::Config(format!("split ratios need three values, got {}", r.len())));
    };
    let split = family_disjoint_split(&corpus, SplitRatios::new(train, validation, test)?, a.seed.unwrap_or(cfg.seed))?;
    ensure_parent(&a.out)?;
    split.save(&a.out)?;
    let [n_train, n_val, n_test] = split.counts();
    println!("train {n_train}, validation {n_val}, test {n_test}");
    Ok(())
}

fn qrels(a: &QrelsArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    if corpus.citations().is_empty() {
        bail!(Error::Data("qrels need citation edges (--citations)".into()));
    }
    let mut qrels = build_qrels(&corpus, corpus.citations(), |d| domain_of(d, &a.coarse));
    if let (Some(path), Some(p)) = (&a.split, a.partition) {
        let split = Split::load(path)?;
        let mut kept = Qrels::default();
        for (q, js) in qrels.iter() {
            if split.partition_of(q) == Some(partition(p)) {
                for j in js {
                    kept.add(q, &j.doc_id, j.domain);
                }
            }
        }
        qrels = kept;
    }
    let out = a.out.clone().unwrap_or_else(|| cfg.out_dir.join("qrels.tsv"));
    ensure_parent(&out)?;
    qrels.save(&out)?;
    let [inn, outside, unresolved] = qrels.domain_counts();
    println!(
        "{} queries, {} judgments (IN {inn}, OUT {outside}, UNRESOLVED {unresolved})",
        qrels.n_queries(),
        qrels.n_judgments()
    );
    Ok(())
}

fn view(a: &ViewArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    let v = build_view(&corpus, &ViewSpec::parse(&a.view)?);
    ensure_parent(&a.out)?;
    v.save(&a.out)?;
    println!("{} docs, {} with empty text", v.len(), v.empty_docs().count());
    Ok(())
}

fn index(a: &IndexArgs, cfg: &RunConfig) -> Result<()> {
    let docs = ViewCorpus::load(&a.docs)?;
    let idx = build_bm25(&docs, a.k1.unwrap_or(cfg.bm25_k1), a.b.unwrap_or(cfg.bm25_b))?;
    ensure_parent(&a.out)?;
    idx.save(&a.out)?;
    println!("{} docs, {} terms, avg length {:.2}", idx.doc_count(), idx.vocabulary_size(), idx.avg_doc_length());
    Ok(())
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn retrieve(a: &RetrieveArgs, cfg: &RunConfig) -> Result<()> {
    let judged: Option<Vec<String>> = match &a.qrels {
        Some(p) => Some(Qrels::load(p)?.query_ids().cloned().collect()),
        None => None,
    };
    let k = a.k.unwrap_or(cfg.depth);
    let exclude_self = !a.keep_self;
    let ext = match a.method {
        RetrieveMethod::Bm25 => "bm25",
        RetrieveMethod::Dense => "emb",
        RetrieveMethod::Maxsim => "tok",
    };
    let docs_path = match (&a.docs, &a.view, cfg.embeddings.get(&a.system)) {
        (Some(p), _, _) => p.clone(),
        (None, Some(v), Some(dir)) => dir.join(format!("{v}.{ext}")),
        _ => bail!(Error::Config(format!(
            "no document input for `{}`: pass --docs, or --view with embedding.{} in the config",
            a.system, a.system
        ))),
    };
    let view = a.view.clone().unwrap_or_else(|| file_stem(&docs_path));
    let run = match a.method {
        RetrieveMethod::Bm25 => {
            let queries = a
                .queries
                .as_ref()
                .ok_or_else(|| Error::Config("bm25 retrieval needs --queries (a view file)".into()))?;
            let index = Bm25Index::load(&docs_path)?;
            let queries = ViewCorpus::load(queries)?;
            let qids = judged.unwrap_or_else(|| queries.entries.iter().map(|e| e.doc_id.clone()).collect());
            retrieve_bm25(&a.system, &index, &queries, &qids, k, exclude_self)?
        }
        RetrieveMethod::Dense => {
            let docs = EmbeddingMatrix::load(&docs_path)?.normalized();
            let queries = match &a.queries {
                Some(p) => EmbeddingMatrix::load(p)?.normalized(),
                None => docs.clone(),
            };
            let qids = judged.unwrap_or_else(|| queries.ids().to_vec());
            retrieve_dense(&a.system, &queries, &docs, &qids, k, exclude_self)?
        }
        RetrieveMethod::Maxsim => {
            let docs = TokenEmbeddings::load(&docs_path)?;
            let queries = match &a.queries {
                Some(p) => TokenEmbeddings::load(p)?,
                None => docs.clone(),
            };
            let qids = judged.unwrap_or_else(|| queries.docs().iter().map(|d| d.id.clone()).collect());
            maxsim_topk(&a.system, &queries, &docs, &qids, k, exclude_self)?
        }
    }
    .with_view(&view);
    let out = a.out.clone().unwrap_or_else(|| cfg.out_dir.join("runs").join(format!("{}.{view}.tsv", a.system)));
    ensure_parent(&out)?;
    run.save(&out)?;
    println!("{} queries ranked to depth {k} -> {}", run.len(), out.display());
    Ok(())
}

fn metric_row(label: String, report: &patrank_core::metrics::MetricReport) -> Vec<String> {
    let mut row = vec![label];
    row.extend(Metric::ALL.iter().map(|&m| fmt4(report.mean(Slice::All, m))));
    row
}

fn metric_header(first: &str, k: usize) -> Vec<String> {
    let mut h = vec![first.to_string()];
    h.extend(Metric::ALL.iter().map(|m| m.label(k)));
    h
}

fn fuse(a: &FuseArgs, cfg: &RunConfig) -> Result<()> {
    let dense = Run::load(&a.dense)?;
    let sparse = Run::load(&a.sparse)?;
    let pool = a.pool_depth.unwrap_or(cfg.pool_depth);
    ensure_parent(&a.out)?;
    if let Some(qpath) = &a.sweep {
        let qrels = load_qrels(qpath, a.tag_corpus.as_ref(), &a.coarse, cfg)?;
        let ctx = EvalContext::new(&qrels, cfg.k);
        let rep = sweep(&dense, &sparse, &cfg.alphas, &cfg.rrf_ks, pool, &ctx)?;
        let table = Table {
            header: metric_header("method", cfg.k),
            rows: rep.rows.iter().map(|r| metric_row(r.method.to_string(), &r.report)).collect(),
        };
        std::fs::write(&a.out, table.render(ReportFormat::Tsv)).map_err(|e| Error::io(&a.out, e))?;
        print!("{}", table.render(ReportFormat::Text));
        if let (Some(best), Some(delta)) = (rep.best(Metric::Ndcg), rep.best_delta(Metric::Ndcg)) {
            println!("best fusion {}: {:+.4} over dense", best.method, delta);
        }
        return Ok(());
    }
    let fused = match a.method {
        FuseMethod::Linear => linear_fuse(&dense, &sparse, a.alpha, pool)?,
        FuseMethod::Rrf => rrf_fuse(&[&dense, &sparse], a.rrf_k, pool)?,
    };
    fused.save(&a.out)?;
    println!("{} ({}) -> {}", fused.system, fused.params, a.out.display());
    Ok(())
}

fn rerank(a: &RerankArgs) -> Result<()> {
    let run = Run::load(&a.run)?;
    let table = ScoreTable::load(&a.scores, &a.reranker)?;
    let out = rerank_with_scores(&run, a.depth, &table)?;
    ensure_parent(&a.out)?;
    out.save(&a.out)?;
    println!("{} queries reranked at depth {} -> {}", out.len(), a.depth, a.out.display());
    Ok(())
}

/// Labeled rows of one partition present in `emb`, aligned.
fn partition_rows(
    corpus: &Corpus,
    split: &Split,
    p: Partition,
    dataset: &str,
    classes: &[String],
    emb: &EmbeddingMatrix,
) -> Result<(EmbeddingMatrix, LabelMatrix)> {
    let ids: Vec<&str> = split.docs_in(p).filter(|id| emb.position(id).is_some()).collect();
    let y = LabelMatrix::from_corpus(corpus, dataset, classes, &ids)?;
    Ok((emb.select(y.docs())?, y))
}

fn classify(a: &ClassifyArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    let split = Split::load(&a.split)?;
    let emb = EmbeddingMatrix::load(&a.emb)?;
    let classes = dataset_classes(&corpus, &a.dataset);
    if classes.is_empty() {
        bail!(Error::Data(format!("no labels for dataset `{}`", a.dataset)));
    }
    let rows = |p| partition_rows(&corpus, &split, p, &a.dataset, &classes, &emb);
    let (xt, yt) = rows(Partition::Train)?;
    let (xs, ys) = rows(Partition::Test)?;
    match a.method {
        ClassifyMethod::Probe => {
            let (xv, yv) = rows(Partition::Validation)?;
            let grid = a.c_grid.as_ref().unwrap_or(&cfg.c_grid);
            let model = train_linear_probe(&xt, &yt, &xv, &yv, grid, a.seed.unwrap_or(cfg.seed))?;
            let f1 = eval_probe(&model, &xs, &ys)?;
            for (c, v) in &model.validation {
                println!("C={c}\tvalidation macro-F1 {v:.4}");
            }
            println!("chosen C={} converged={} test macro-F1 {f1:.4}", model.c, model.converged());
            if let Some(out) = &a.out {
                ensure_parent(out)?;
                model.predict(&xs, &a.dataset)?.save(out)?;
            }
        }
        ClassifyMethod::Knn => {
            let ks = a.k.map_or_else(|| cfg.knn_ks.clone(), |k| vec![k]);
            let mut best: Option<(f64, LabelMatrix)> = None;
            for k in ks {
                if k > xt.len() {
                    println!("k={k}\tskipped ({} training docs)", xt.len());
                    continue;
                }
                let pred = knn_classify(&xt, &yt, &xs, k)?;
                let f1 = macro_f1(&ys, &pred)?;
                println!("k={k}\ttest macro-F1 {f1:.4}");
                if best.as_ref().is_none_or(|(b, _)| f1 > *b) {
                    best = Some((f1, pred));
                }
            }
            if let (Some(out), Some((_, pred))) = (&a.out, best) {
                ensure_parent(out)?;
                pred.save(out)?;
            }
        }
    }
    Ok(())
}

fn cluster(a: &ClusterArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    let emb = EmbeddingMatrix::load(&a.emb)?;
    let classes = dataset_classes(&corpus, &a.dataset);
    let ids: Vec<&str> = emb.ids().iter().map(String::as_str).collect();
    let y = LabelMatrix::from_corpus(&corpus, &a.dataset, &classes, &ids)?;
    let x = emb.select(y.docs())?;
    let k = a.k.unwrap_or(y.n_classes());
    let res = kmeans(&x, k, a.seed.unwrap_or(cfg.seed))?;
    let s = clustering_scores(&res.assignment, &y.primary_labels()?)?;
    println!(
        "k={k} inertia {:.4}\tV {:.4}\tARI {:.4}\tNMI {:.4}\thomogeneity {:.4}\tcompleteness {:.4}",
        res.inertia, s.v_measure, s.ari, s.nmi, s.homogeneity, s.completeness
    );
    if let Some(out) = &a.out {
        ensure_parent(out)?;
        tsv::write_file(out, |w| {
            writeln!(w, "doc-id\tcluster")?;
            for (id, c) in y.docs().iter().zip(&res.assignment) {
                writeln!(w, "{id}\t{c}")?;
            }
            Ok(())
        })?;
    }
    Ok(())
}

fn truncate(a: &TruncateArgs) -> Result<()> {
    let m = EmbeddingMatrix::load(&a.emb)?.normalized();
    let t = truncate_renorm(&m, a.dim)?;
    ensure_parent(&a.out)?;
    t.save(&a.out)?;
    println!("{} rows truncated {} -> {}", t.len(), m.dim(), t.dim());
    Ok(())
}

fn pairs(a: &PairsArgs, cfg: &RunConfig) -> Result<()> {
    let corpus = load_inputs(&a.input, cfg)?;
    let split = Split::load(&a.split)?;
    let recipe: Recipe = a.recipe.parse()?;
    let opts = RecipeOptions {
        r1_datasets: a.datasets.clone(),
        r1_cap: (!a.no_cap).then(|| a.r1_cap.unwrap_or(cfg.r1_cap)),
        target_count: a.target,
    };
    let set = generate_pairs(&corpus, &split, recipe, a.seed.unwrap_or(cfg.seed), &opts)?;
    let leaked = set.leakage(&split);
    if !leaked.is_empty() {
        bail!(Error::Integrity(format!("{} non-train documents in pairs", leaked.len())));
    }
    ensure_parent(&a.out)?;
    set.save(&a.out)?;
    let counts: Vec<String> = set.counts().iter().map(|(p, n)| format!("{} {n}", p.name())).collect();
    println!("{}: {} pairs ({})", recipe.name(), set.len(), counts.join(", "));
    Ok(())
}

fn significance(a: &SignificanceArgs, cfg: &RunConfig) -> Result<()> {
    let paths: Vec<&PathBuf> = a.run_a.iter().chain(&a.run_b).chain(&a.runs).collect();
    if paths.len() < 2 {
        bail!(Error::Config("significance needs at least two runs".into()));
    }
    let qrels = Qrels::load(&a.qrels)?;
    let ctx = EvalContext::new(&qrels, a.k.unwrap_or(cfg.k));
    let metric = Metric::parse(&a.metric)?;
    let mut systems: Vec<(String, Vec<f64>)> = Vec::new();
    for p in paths {
        let run = Run::load(p)?;
        let mut name = if run.system.is_empty() { file_stem(p) } else { run.system.clone() };
        if systems.iter().any(|(n, _)| *n == name) {
            name = format!("{name}:{}", file_stem(p));
        }
        let values = ctx.evaluate(&run).per_query(metric).into_iter().map(|(_, v)| v).collect();
        systems.push((name, values));
    }
    let resamples = a.resamples.unwrap_or(cfg.bootstrap_b);
    let seed = a.seed.unwrap_or(cfg.seed);
    let alpha = a.alpha.unwrap_or(cfg.alpha);
    let (rows, tiers) = if systems.len() == 2 {
        (adjacent_tests(&systems, resamples, seed)?, None)
    } else {
        let (tiers, rows) = tier_group(&systems, alpha, resamples, seed)?;
        (rows, Some(tiers))
    };
    let mut stdout = std::io::stdout().lock();
    write_significance_to(&rows, a.family_size, &mut stdout)?;
    if let Some(tiers) = &tiers {
        for (i, t) in tiers.iter().enumerate() {
            writeln!(stdout, "tier {}: {}", i + 1, t.join(", "))?;
        }
    }
    if let Some(out) = &a.out {
        ensure_parent(out)?;
        write_significance(&rows, a.family_size, out)?;
    }
    Ok(())
}

fn ablate(a: &AblateArgs, cfg: &RunConfig) -> Result<()> {
    let qrels = load_qrels(&a.qrels.qrels, a.qrels.tag_corpus.as_ref(), &a.qrels.coarse, cfg)?;
    let ctx = EvalContext::new(&qrels, cfg.k);
    let qids: Vec<String> = qrels.query_ids().cloned().collect();
    let sections = a.sections.as_ref().unwrap_or(&cfg.query_sections);
    let views = a.views.as_ref().unwrap_or(&cfg.views);
    let mut inputs = GridInputs::default();
    for s in sections {
        inputs.queries.insert(s.clone(), a.query_dir.join(format!("{s}.emb")));
    }
    for v in views {
        inputs.docs.insert(v.clone(), a.doc_dir.join(format!("{v}.emb")));
    }
    let s_refs: Vec<&str> = sections.iter().map(String::as_str).collect();
    let v_refs: Vec<&str> = views.iter().map(String::as_str).collect();
    let grid = run_ablation_grid(&a.system, &s_refs, &v_refs, &inputs, &qids, cfg.depth, &ctx)?;
    let metric = Metric::parse(&a.metric)?;
    let table = grid.table(metric);
    let dir = a.out_dir.as_ref().unwrap_or(&cfg.out_dir);
    emit_report(&table, dir, &format!("ablation-{}", a.system), &[ReportFormat::Tsv, ReportFormat::Text])?;
    print!("{}", table.render(ReportFormat::Text));
    if let Some((s, v, value)) = grid.best_cell(metric) {
        println!("best cell: {s} query x {v} corpus = {value:.4}");
    }
    Ok(())
}

fn report(a: &ReportArgs, cfg: &RunConfig) -> Result<()> {
    let qrels = load_qrels(&a.qrels.qrels, a.qrels.tag_corpus.as_ref(), &a.qrels.coarse, cfg)?;
    let k = a.k.unwrap_or(cfg.k);
    let juris = JurisdictionMap::default();
    let mut ctx = EvalContext::new(&qrels, k);
    if a.jurisdictions {
        ctx = ctx.with_jurisdictions(&juris);
    }
    let metric = Metric::parse(&a.metric)?;
    let formats = a.format.iter().map(|f| ReportFormat::parse(f)).collect::<patrank_core::Result<Vec<_>>>()?;
    let mut reports = Vec::new();
    for spec in &a.runs {
        let (view, path) = match spec.split_once('=') {
            Some((v, p)) => (v.to_string(), PathBuf::from(p)),
            None => (String::new(), PathBuf::from(spec)),
        };
        let run = Run::load(&path).with_context(|| format!("loading run {}", path.display()))?;
        reports.push(ctx.evaluate(&run.with_view(view)));
    }
    let dir = a.out_dir.as_ref().unwrap_or(&cfg.out_dir);
    let board = leaderboard(&reports, metric)?;
    let mut written = emit_report(&board, dir, &a.stem, &formats)?;
    written.extend(emit_report(&slice_table(&reports)?, dir, &format!("{}-slices", a.stem), &formats)?);
    print!("{}", board.render(ReportFormat::Text));
    for p in written {
        println!("wrote {}", p.display());
    }
    if reports.iter().any(|r| r.missing_queries > 0) {
        let worst = reports.iter().map(|r| r.missing_queries).max().unwrap_or(0);
        eprintln!("warning: up to {worst} judged queries absent from a run; they score zero");
    }
    Ok(())
}
