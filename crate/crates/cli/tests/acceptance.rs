//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Every reference value is computed here from first principles.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use patrank_core::corpus::{
    build_qrels, domain_of, family_disjoint_split, CitationEdge, Corpus, Document, DomainPair, Partition, Qrels,
    Section, Split, SplitRatios, ViewCorpus, ViewEntry,
};
use patrank_core::dense::{
    maxsim_topk, retrieve_dense, truncate_renorm, EmbeddingMatrix, TokenDoc, TokenEmbeddings, TokenMatrix,
};
use patrank_core::fusion::{linear_fuse, rerank_with_scores, rrf_fuse, ScoreTable};
use patrank_core::lexical::{bm25_topk, build_bm25};
use patrank_core::metrics::{dwpi_advantage, EvalContext, Metric, Slice};
use patrank_core::probes::{clustering_scores, eval_probe, train_linear_probe, LabelMatrix, DEFAULT_C_GRID};
use patrank_core::recipes::{generate_pairs, Provenance, Recipe, RecipeOptions};
use patrank_core::stats::{paired_bootstrap, Significance};
use patrank_core::{Run, ScoredDoc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

macro_rules! req {
    ($cond:expr, $($msg:tt)*) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($msg)*));
        }
    };
}

fn within(elapsed: Duration, limit: Duration) -> Check {
    req!(elapsed < limit, "took {elapsed:.2?}, limit {limit:?}");
    Ok(format!("{elapsed:.2?}"))
}

fn ids(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i:03}")).collect()
}

fn run_of(system: &str, lists: &BTreeMap<String, Vec<(String, f64)>>) -> Run {
    let mut run = Run::new(system);
    for (q, list) in lists {
        run.insert(q.clone(), list.iter().map(|(d, s)| ScoredDoc::new(d.clone(), *s)).collect()).unwrap();
    }
    run
}

fn order(run: &Run, q: &str) -> Vec<String> {
    run.get(q).unwrap().iter().map(|e| e.doc_id.clone()).collect()
}

/// Sorts by score descending, then id ascending.
fn tie_sort(v: &mut [(String, f64)]) {
    v.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
}

fn metric_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let docs = ids("d", 500);
    let mut lists = BTreeMap::new();
    let mut qrels = Qrels::default();
    let mut truth: HashMap<String, HashSet<String>> = HashMap::new();
    for q in 0..200 {
        let qid = format!("q{q:03}");
        let ranked: Vec<String> = docs.choose_multiple(&mut rng, 100).cloned().collect();
        let n_rel = rng.gen_range(1..=5);
        let mut rel: HashSet<String> = ranked.choose_multiple(&mut rng, n_rel).cloned().collect();
        while rel.len() < n_rel + 1 && rng.gen_bool(0.3) {
            rel.insert(docs.choose(&mut rng).unwrap().clone());
        }
        for d in &rel {
            qrels.add(&qid, d, DomainPair::Unresolved);
        }
        lists.insert(qid.clone(), ranked.iter().enumerate().map(|(i, d)| (d.clone(), 100.0 - i as f64)).collect());
        truth.insert(qid, rel);
    }
    let report = EvalContext::new(&qrels, 10).evaluate(&run_of("rand", &lists));
    let mut max_err: f64 = 0.0;
    for (qid, got) in &report.slice(Slice::All).unwrap().per_query {
        let rel = &truth[qid];
        let ranked: Vec<&String> = lists[qid].iter().map(|(d, _)| d).collect();
        let is_rel: Vec<bool> = ranked.iter().map(|d| rel.contains(*d)).collect();
        let dcg: f64 = (0..10).filter(|&i| is_rel[i]).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
        let idcg: f64 = (0..rel.len().min(10)).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
        let recall = is_rel[..10].iter().filter(|&&r| r).count() as f64 / rel.len() as f64;
        let mut ap = 0.0;
        for i in 0..ranked.len() {
            if is_rel[i] {
                let prec = is_rel[..=i].iter().filter(|&&r| r).count() as f64 / (i + 1) as f64;
                ap += prec;
            }
        }
        ap /= rel.len() as f64;
        let rr = is_rel.iter().position(|&r| r).map_or(0.0, |i| 1.0 / (i + 1) as f64);
        for (g, w) in [(got.ndcg, dcg / idcg), (got.recall, recall), (got.ap, ap), (got.rr, rr)] {
            max_err = max_err.max((g - w).abs());
        }
    }
    req!(report.n_queries(Slice::All) == 200, "expected 200 queries");
    req!(max_err <= 1e-9, "max deviation {max_err:e}");
    let t = within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("200 queries, max |err| {max_err:.1e}, {t}"))
}

fn bm25_formula() -> Check {
    let docs = [
        ("d1", "solar panel mounting bracket"),
        ("d2", "solar cell efficiency solar"),
        ("d3", "wind turbine blade"),
        ("d4", "panel display screen panel panel"),
        ("d5", "battery cell thermal management"),
    ];
    let view = ViewCorpus {
        name: "TA".into(),
        entries: docs.iter().map(|(id, t)| ViewEntry { doc_id: id.to_string(), text: t.to_string() }).collect(),
    };
    let idx = build_bm25(&view, 1.5, 0.75).unwrap();
    let toks: Vec<Vec<&str>> = docs.iter().map(|(_, t)| t.split(' ').collect()).collect();
    let avgdl = toks.iter().map(Vec::len).sum::<usize>() as f64 / 5.0;
    let okapi = |query: &[&str], d: usize| -> f64 {
        query
            .iter()
            .map(|term| {
                let df = toks.iter().filter(|t| t.contains(term)).count() as f64;
                let tf = toks[d].iter().filter(|t| *t == term).count() as f64;
                let idf = (1.0 + (5.0 - df + 0.5) / (df + 0.5)).ln();
                idf * tf * 2.5 / (tf + 1.5 * (0.25 + 0.75 * toks[d].len() as f64 / avgdl))
            })
            .sum()
    };
    let mut checked = 0;
    for query in [&["solar", "panel"][..], &["cell"], &["panel"], &["wind", "battery", "solar"]] {
        let got = bm25_topk(&idx, &query.join(" "), 10);
        let mut want: Vec<(String, f64)> =
            (0..5).map(|d| (docs[d].0.to_string(), okapi(query, d))).filter(|(_, s)| *s > 0.0).collect();
        tie_sort(&mut want);
        req!(got.len() == want.len(), "{query:?}: {} hits vs {}", got.len(), want.len());
        for (g, (wd, ws)) in got.iter().zip(&want) {
            req!(g.doc_id == *wd, "{query:?}: order {} vs {wd}", g.doc_id);
            req!((g.score - ws).abs() < 1e-6, "{query:?} {wd}: {} vs {ws}", g.score);
            checked += 1;
        }
    }
    let top = bm25_topk(&idx, "solar panel", 1);
    req!((top[0].score - 1.7509374747078).abs() < 1e-6, "d1 hand value {}", top[0].score);
    Ok(format!("{checked} scores within 1e-6"))
}

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f32> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / n) as f32).collect()
}

fn dot64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(*x) * f64::from(*y)).sum()
}

fn dense_maxsim_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let dim = 16;
    let doc_ids = ids("doc", 50);
    let mut rows: Vec<Vec<f32>> = (0..50).map(|_| unit(&mut rng, dim)).collect();
    rows[31] = rows[7].clone();
    let m = EmbeddingMatrix::from_rows(doc_ids.clone(), dim, rows.concat()).unwrap().normalized();
    let queries: Vec<Vec<f32>> = (0..10).map(|_| unit(&mut rng, dim)).collect();
    let mut qs = queries.clone();
    qs[0] = rows[7].clone();
    let qm = EmbeddingMatrix::from_rows(ids("q", 10), dim, qs.concat()).unwrap().normalized();
    let run = retrieve_dense("cos", &qm, &m, &ids("q", 10), 50, false).unwrap();
    for (qi, q) in qs.iter().enumerate() {
        let mut want: Vec<(String, f64)> = rows
            .iter()
            .zip(&doc_ids)
            .map(|(r, id)| {
                let norm = (dot64(r, r) * dot64(q, q)).sqrt();
                (id.clone(), dot64(r, q) / norm)
            })
            .collect();
        tie_sort(&mut want);
        let got = run.get(&format!("q{qi:03}")).unwrap();
        for (g, (wd, ws)) in got.iter().zip(&want) {
            req!(g.doc_id == *wd, "cosine q{qi}: {} vs {wd}", g.doc_id);
            req!((g.score - ws).abs() < 1e-6, "cosine q{qi} {wd}: {} vs {ws}", g.score);
        }
    }
    let top = order(&run, "q000");
    req!(top[..2] == ["doc007".to_string(), "doc031".to_string()], "tie order {:?}", &top[..2]);

    let tdim = 8;
    let tok_docs: Vec<Vec<Vec<f32>>> =
        (0..50).map(|_| (0..rng.gen_range(1..=6)).map(|_| unit(&mut rng, tdim)).collect()).collect();
    let tdocs = TokenEmbeddings::new(
        tdim,
        tok_docs
            .iter()
            .zip(&doc_ids)
            .map(|(t, id)| TokenDoc { id: id.clone(), tokens: TokenMatrix::from_rows(t).unwrap() })
            .collect(),
    )
    .unwrap();
    let tq: Vec<Vec<Vec<f32>>> = (0..5).map(|_| (0..3).map(|_| unit(&mut rng, tdim)).collect()).collect();
    let tqs = TokenEmbeddings::new(
        tdim,
        tq.iter()
            .enumerate()
            .map(|(i, t)| TokenDoc { id: format!("q{i:03}"), tokens: TokenMatrix::from_rows(t).unwrap() })
            .collect(),
    )
    .unwrap();
    let mrun = maxsim_topk("cb", &tqs, &tdocs, &ids("q", 5), 50, false).unwrap();
    for (qi, q) in tq.iter().enumerate() {
        let mut want: Vec<(String, f64)> = tok_docs
            .iter()
            .zip(&doc_ids)
            .map(|(d, id)| {
                let s = q.iter().map(|qt| d.iter().map(|dt| dot64(qt, dt)).fold(f64::MIN, f64::max)).sum();
                (id.clone(), s)
            })
            .collect();
        tie_sort(&mut want);
        let got = mrun.get(&format!("q{qi:03}")).unwrap();
        for (g, (wd, ws)) in got.iter().zip(&want) {
            req!(g.doc_id == *wd, "maxsim q{qi}: {} vs {wd}", g.doc_id);
            req!((g.score - ws).abs() < 1e-6, "maxsim q{qi} {wd}: {} vs {ws}", g.score);
        }
    }
    Ok("10 cosine + 5 MaxSim queries over 50 docs, forced tie ordered by id".into())
}

fn random_runs(rng: &mut ChaCha8Rng, n_q: usize, depth: usize) -> (Run, Run) {
    let pool = ids("p", 80);
    let mut dense = BTreeMap::new();
    let mut sparse = BTreeMap::new();
    for q in 0..n_q {
        let qid = format!("q{q:03}");
        let d: Vec<(String, f64)> =
            pool.choose_multiple(rng, depth).map(|id| (id.clone(), rng.gen_range(-1.0..1.0))).collect();
        let s: Vec<(String, f64)> =
            pool.choose_multiple(rng, depth).map(|id| (id.clone(), rng.gen_range(0.0..30.0))).collect();
        dense.insert(qid.clone(), d);
        sparse.insert(qid, s);
    }
    (run_of("dense", &dense), run_of("bm25", &sparse))
}

fn fusion_identities() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(60);
    let (dense, sparse) = random_runs(&mut rng, 40, 50);
    let a1 = linear_fuse(&dense, &sparse, 1.0, 1000).unwrap();
    let a0 = linear_fuse(&dense, &sparse, 0.0, 1000).unwrap();
    for q in dense.query_ids() {
        req!(order(&a1, q) == order(&dense, q), "alpha=1 differs from dense on {q}");
        req!(order(&a0, q) == order(&sparse, q), "alpha=0 differs from sparse on {q}");
    }

    let mut one = Run::new("a");
    one.insert("q", vec![ScoredDoc::new("x", 0.9), ScoredDoc::new("y", 0.1)]).unwrap();
    let mut two = Run::new("b");
    two.insert("q", vec![ScoredDoc::new("x", 12.0), ScoredDoc::new("z", 3.0)]).unwrap();
    let rrf = rrf_fuse(&[&one, &two], 60, 1000).unwrap();
    let top = &rrf.get("q").unwrap()[0];
    req!(top.doc_id == "x" && (top.score - 2.0 / 61.0).abs() < 1e-12, "rank-1-in-both scored {}", top.score);

    let warp = |run: &Run, f: &dyn Fn(f64) -> f64| {
        let mut out = Run::new(run.system.clone());
        for (q, r) in run.iter() {
            out.insert(q.clone(), r.iter().map(|e| ScoredDoc::new(e.doc_id.clone(), f(e.score))).collect()).unwrap();
        }
        out
    };
    let base = rrf_fuse(&[&dense, &sparse], 60, 1000).unwrap();
    let warped =
        rrf_fuse(&[&warp(&dense, &|s| (3.0 * s).exp()), &warp(&sparse, &|s| s.powi(3) + 7.0)], 60, 1000).unwrap();
    req!(base == warped, "RRF changed under monotone transforms");
    Ok("alpha extremes reproduce legs on 40 queries; RRF 2/61 exact; monotone-invariant".into())
}

fn rerank_invariance() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let pool = ids("c", 300);
    let mut lists = BTreeMap::new();
    let mut qrels = Qrels::default();
    for q in 0..30 {
        let qid = format!("q{q:02}");
        let l: Vec<(String, f64)> = pool.choose_multiple(&mut rng, 150).map(|d| (d.clone(), rng.gen())).collect();
        for d in pool.choose_multiple(&mut rng, 8) {
            qrels.add(&qid, d, DomainPair::Unresolved);
        }
        lists.insert(qid, l);
    }
    let first = run_of("first", &lists);
    let mut table = ScoreTable::new("ce");
    for (q, r) in first.iter() {
        for e in r.iter().take(100) {
            table.insert(q, &e.doc_id, rng.gen_range(-5.0..5.0)).unwrap();
        }
    }
    let reranked = rerank_with_scores(&first, 100, &table).unwrap();
    for (q, r) in first.iter() {
        let before: HashSet<&str> = r.iter().take(100).map(|e| e.doc_id.as_str()).collect();
        let after: HashSet<&str> = reranked.get(q).unwrap().iter().map(|e| e.doc_id.as_str()).collect();
        req!(before == after, "top-100 set changed on {q}");
    }
    let ctx = EvalContext::new(&qrels, 100);
    let rb = ctx.evaluate(&first).per_query(Metric::Recall);
    let ra = ctx.evaluate(&reranked).per_query(Metric::Recall);
    req!(rb.iter().zip(&ra).all(|(x, y)| x.0 == y.0 && x.1.to_bits() == y.1.to_bits()), "Recall@100 not bit-equal");
    Ok("30 queries: top-100 sets equal, Recall@100 bit-equal".into())
}

fn truncation_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(80);
    let dim = 64;
    let data: Vec<f32> = (0..200 * dim).map(|_| rng.sample(StandardNormal)).collect();
    let m = EmbeddingMatrix::from_rows(ids("d", 200), dim, data).unwrap().normalized();
    let qids = ids("d", 40);
    let full = truncate_renorm(&m, dim).unwrap();
    let a = retrieve_dense("s", &m, &m, &qids, 100, true).unwrap();
    let b = retrieve_dense("s", &full, &full, &qids, 100, true).unwrap();
    for q in &qids {
        req!(order(&a, q) == order(&b, q), "full-width truncation reordered {q}");
    }
    let mut worst: f64 = 0.0;
    for d in [8, 16, 32] {
        let t = truncate_renorm(&m, d).unwrap();
        for i in 0..t.len() {
            worst = worst.max((dot64(t.row(i), t.row(i)).sqrt() - 1.0).abs());
        }
    }
    req!(worst <= 1e-6, "row norm off by {worst:e}");
    Ok(format!("identical rankings at full width; max |norm-1| {worst:.1e}"))
}

fn plain_doc(id: &str, fam: &str) -> Document {
    Document { doc_id: id.into(), family_id: fam.into(), ..Default::default() }
}

fn split_hygiene() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(90);
    let mut docs = Vec::new();
    for f in 0..10_000 {
        for m in 0..rng.gen_range(1..=4) {
            docs.push(plain_doc(&format!("US{f}X{m}"), &format!("F{f}")));
        }
    }
    let corpus = Corpus::from_documents(docs).unwrap();
    let start = Instant::now();
    let split = family_disjoint_split(&corpus, SplitRatios::default(), 42).unwrap();
    let again = family_disjoint_split(&corpus, SplitRatios::default(), 42).unwrap();
    let elapsed = start.elapsed();
    let mut spans = 0;
    for members in corpus.families().values() {
        let parts: HashSet<Partition> =
            members.iter().map(|&i| split.partition_of(&corpus.docs()[i].doc_id).unwrap()).collect();
        spans += usize::from(parts.len() > 1);
    }
    req!(spans == 0, "{spans} families span partitions");
    req!(split == again, "same-seed reruns differ");
    let f = split.fractions();
    for (got, want) in f.iter().zip([0.8, 0.1, 0.1]) {
        req!((got - want).abs() <= 0.015, "fraction {got:.4} vs {want}");
    }
    let t = within(elapsed, Duration::from_secs(5))?;
    Ok(format!("{} docs; realized {:.3}/{:.3}/{:.3}; {t}", corpus.len(), f[0], f[1], f[2]))
}

fn qrels_hygiene() -> Check {
    let labeled = |id: &str, fam: &str, dom: Option<&str>| {
        let mut d = plain_doc(id, fam);
        if let Some(x) = dom {
            d.add_label("coarse", x);
        }
        d
    };
    let corpus = Corpus::from_documents(vec![
        labeled("US1", "F1", Some("Vision")),
        labeled("EP1", "F1", Some("Vision")),
        labeled("US2", "F2", Some("Vision")),
        labeled("US3", "F3", Some("Mobility")),
        labeled("US4", "F4", None),
    ])
    .unwrap();
    let edges = [
        CitationEdge::new("F1", "F1"),
        CitationEdge::new("F2", "F2"),
        CitationEdge::new("F1", "F2"),
        CitationEdge::new("F1", "F3"),
        CitationEdge::new("F2", "F4"),
        CitationEdge::new("F2", "F404"),
        CitationEdge::new("F404", "F1"),
    ];
    let qrels = build_qrels(&corpus, &edges, |d| domain_of(d, &[]));
    // F1 cites F2 and F3: 2 queries x 2 targets; F2 cites F4: 1.
    req!(qrels.n_judgments() == 5, "{} judgments, hand count 5", qrels.n_judgments());
    for (q, js) in qrels.iter() {
        let fam = &corpus.get(q).unwrap().family_id;
        for j in js {
            req!(corpus.get(&j.doc_id).is_some_and(|d| &d.family_id != fam), "bad judgment {q} -> {}", j.doc_id);
        }
        let all = qrels.relevant(q);
        let parts: Vec<HashSet<&str>> = [DomainPair::In, DomainPair::Out, DomainPair::Unresolved]
            .iter()
            .map(|&t| qrels.relevant_in(q, t))
            .collect();
        let total: usize = parts.iter().map(HashSet::len).sum();
        let union: HashSet<&str> = parts.iter().flatten().copied().collect();
        req!(total == all.len() && union == all, "tags do not partition {q}");
    }
    let mut lists = BTreeMap::new();
    lists.insert("US1".to_string(), vec![("US3".to_string(), 2.0), ("US2".to_string(), 1.0)]);
    let report = EvalContext::new(&qrels, 10).evaluate(&run_of("r", &lists));
    let in_slice = |s: Slice| report.slice(s).is_some_and(|r| r.per_query.iter().any(|(q, _)| q == "US1"));
    req!(in_slice(Slice::In) && in_slice(Slice::Out), "mixed query missing from a slice");
    Ok(format!("5 judgments; domain counts {:?}; mixed query in IN and OUT", qrels.domain_counts()))
}

fn bootstrap_calibration() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    let trials = 500;
    let mut rejections = 0;
    for t in 0..trials {
        let n = 200;
        let mut a = Vec::with_capacity(n);
        let mut b = Vec::with_capacity(n);
        for _ in 0..n {
            let base: f64 = rng.gen();
            let x = (base + 0.15 * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0);
            let y = (base + 0.15 * rng.sample::<f64, _>(StandardNormal)).clamp(0.0, 1.0);
            if rng.gen_bool(0.5) {
                a.push(x);
                b.push(y);
            } else {
                a.push(y);
                b.push(x);
            }
        }
        let r = paired_bootstrap(&a, &b, 2000, t).unwrap();
        rejections += usize::from(r.p_value < 0.05);
    }
    let rate = rejections as f64 / trials as f64;
    req!((rate - 0.05).abs() <= 0.02, "type-I rate {rate:.3}");
    let same: Vec<f64> = (0..100).map(|i| (i % 7) as f64 / 7.0).collect();
    let r = paired_bootstrap(&same, &same, 2000, 42).unwrap();
    req!(r.p_value == 1.0 && r.marker == Significance::NotSignificant, "identical inputs gave p={}", r.p_value);
    let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.37).sin().abs()).collect();
    let y: Vec<f64> = (0..50).map(|i| (i as f64 * 0.11).cos().abs()).collect();
    req!(paired_bootstrap(&x, &y, 2000, 9).unwrap() == paired_bootstrap(&x, &y, 2000, 9).unwrap(), "not deterministic");
    let t = within(start.elapsed(), Duration::from_secs(120))?;
    Ok(format!("type-I rate {rate:.3} over {trials} trials at B=2000; identical p=1.0; {t}"))
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
}

/// Contingency-table V-measure, ARI and NMI.
fn contingency_oracle(a: &[usize], t: &[usize]) -> (f64, f64, f64) {
    let ka = a.iter().max().unwrap() + 1;
    let kt = t.iter().max().unwrap() + 1;
    let mut table = vec![vec![0.0f64; kt]; ka];
    for (&x, &y) in a.iter().zip(t) {
        table[x][y] += 1.0;
    }
    let n = a.len() as f64;
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..kt).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let (ha, ht) = (entropy(&rows, n), entropy(&cols, n));
    let mut mi = 0.0;
    for i in 0..ka {
        for j in 0..kt {
            let c = table[i][j];
            if c > 0.0 {
                mi += c / n * (n * c / (rows[i] * cols[j])).ln();
            }
        }
    }
    let h = if ht == 0.0 { 1.0 } else { mi / ht };
    let c = if ha == 0.0 { 1.0 } else { mi / ha };
    let v = if h + c == 0.0 { 0.0 } else { 2.0 * h * c / (h + c) };
    let comb = |x: f64| x * (x - 1.0) / 2.0;
    let index: f64 = table.iter().flatten().map(|&c| comb(c)).sum();
    let sa: f64 = rows.iter().map(|&x| comb(x)).sum();
    let st: f64 = cols.iter().map(|&x| comb(x)).sum();
    let expected = sa * st / comb(n);
    let max = (sa + st) / 2.0;
    let ari = if max == expected { 1.0 } else { (index - expected) / (max - expected) };
    let nmi = if ha == 0.0 && ht == 0.0 {
        1.0
    } else if ha == 0.0 || ht == 0.0 {
        0.0
    } else {
        mi / ((ha + ht) / 2.0)
    };
    (v, ari, nmi)
}

fn clustering_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let a: Vec<usize> = (0..30).map(|_| rng.gen_range(0..5)).collect();
        let t: Vec<usize> = (0..30).map(|_| rng.gen_range(0..4)).collect();
        let s = clustering_scores(&a, &t).unwrap();
        let (v, ari, nmi) = contingency_oracle(&a, &t);
        worst = worst.max((s.v_measure - v).abs()).max((s.ari - ari).abs()).max((s.nmi - nmi).abs());
    }
    req!(worst <= 1e-9, "max deviation {worst:e}");
    let truth: Vec<usize> = (0..30).map(|i| i % 3).collect();
    let perfect = clustering_scores(&truth, &truth).unwrap();
    req!(perfect.v_measure == 1.0 && perfect.ari == 1.0 && perfect.nmi == 1.0, "perfect clustering {perfect:?}");
    let single = clustering_scores(&[0; 30], &truth).unwrap();
    req!(single.v_measure == 0.0 && single.ari == 0.0, "single cluster {single:?}");
    Ok(format!("100 fixtures, max |err| {worst:.1e}; perfect = 1; single cluster V = ARI = 0"))
}

fn blobs(rng: &mut ChaCha8Rng, n: usize, tag: &str) -> (EmbeddingMatrix, LabelMatrix) {
    let mut doc_ids = Vec::new();
    let mut data = Vec::new();
    let mut sets = Vec::new();
    for (c, centre) in [-2.5f32, 2.5].iter().enumerate() {
        for i in 0..n {
            doc_ids.push(format!("{tag}{c}{i:03}"));
            data.push(centre + 0.4 * rng.sample::<f32, _>(StandardNormal));
            data.push(-centre + 0.4 * rng.sample::<f32, _>(StandardNormal));
            sets.push(vec![c]);
        }
    }
    let y = LabelMatrix::new("blobs", doc_ids.clone(), vec!["L".into(), "R".into()], sets).unwrap();
    (EmbeddingMatrix::from_rows(doc_ids, 2, data).unwrap(), y)
}

fn probe_sanity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (xt, yt) = blobs(&mut rng, 80, "t");
    let (xv, yv) = blobs(&mut rng, 25, "v");
    let (xs, ys) = blobs(&mut rng, 25, "s");
    let model = train_linear_probe(&xt, &yt, &xv, &yv, &DEFAULT_C_GRID, 42).unwrap();
    let f1 = eval_probe(&model, &xs, &ys).unwrap();
    req!(f1 == 1.0, "test macro-F1 {f1}");
    req!(model.max_grad_norm() < 1e-6, "gradient max-norm {:e}", model.max_grad_norm());
    let again = train_linear_probe(&xt, &yt, &xv, &yv, &DEFAULT_C_GRID, 42).unwrap();
    req!(again.c == model.c, "chosen C changed: {} vs {}", model.c, again.c);
    Ok(format!("macro-F1 1.0 at C={}; gradient max-norm {:.1e}", model.c, model.max_grad_norm()))
}

fn recipe_counts() -> Check {
    let doc = |id: &str, fam: &str, label: &str, claim: bool| {
        let mut d = plain_doc(id, fam);
        d.sections.insert(Section::Title, format!("title of {id}"));
        d.sections.insert(Section::Abstract, format!("abstract of {id}"));
        if claim {
            d.sections.insert(Section::Claim1, format!("1. claim of {id}"));
        }
        d.add_label("coarse", label);
        d
    };
    let corpus = Corpus::from_documents(vec![
        doc("US1", "F1", "A", true),
        doc("US2", "F2", "A", true),
        doc("US3", "F3", "A", false),
        doc("US4", "F4", "A", true),
        doc("US5", "F5", "B", true),
        doc("US6", "F6", "B", true),
        doc("US7", "F7", "A", true),
        doc("US8", "F8", "B", true),
    ])
    .unwrap()
    .with_citations(
        [
            CitationEdge::new("F1", "F2"),
            CitationEdge::new("F3", "F5"),
            CitationEdge::new("F4", "F6"),
            CitationEdge::new("F1", "F7"),
            CitationEdge::new("F8", "F2"),
        ],
        true,
    )
    .unwrap();
    let mut assignment = BTreeMap::new();
    for i in 1..=6 {
        assignment.insert(format!("US{i}"), Partition::Train);
    }
    assignment.insert("US7".into(), Partition::Test);
    assignment.insert("US8".into(), Partition::Validation);
    let split = Split { assignment, ratios: SplitRatios::default(), seed: 0 };
    let opts = RecipeOptions::default();
    let count = |r: Recipe, o: &RecipeOptions| generate_pairs(&corpus, &split, r, 1, o).unwrap();
    // Train: A = {US1..US4} gives C(4,2) = 6, B = {US5, US6} gives 1.
    let r1 = count(Recipe::R1, &opts);
    req!(r1.len() == 7, "R1 {} vs 7", r1.len());
    // Edges with both families in train: F1-F2, F3-F5, F4-F6.
    let r2 = count(Recipe::R2, &opts);
    req!(r2.len() == 3, "R2 {} vs 3", r2.len());
    let r3 = count(Recipe::R3, &opts);
    req!(r3.len() == 5, "R3 {} vs 5", r3.len());
    let r4 = count(Recipe::R4, &opts);
    req!(r4.len() == r1.len() + r2.len() + r3.len(), "R4 {} vs sum", r4.len());
    req!(r4.count(Provenance::R2) == 3, "R4 provenance counts {:?}", r4.counts());
    for target in [3, 5, r4.len(), 40] {
        let m = count(Recipe::R3M, &RecipeOptions { target_count: Some(target), ..RecipeOptions::default() });
        req!(m.len() == target, "R3M {} vs target {target}", m.len());
    }
    for set in [&r1, &r2, &r3, &r4] {
        req!(set.leakage(&split).is_empty(), "{:?} touches held-out docs", set.recipe);
    }
    Ok(format!("R1 7, R2 3, R3 5, R4 {}; R3M hits targets 3/5/{}/40; no leakage", r4.len(), r4.len()))
}

fn dwpi() -> Check {
    let adv = dwpi_advantage(0.7673, 0.7432);
    req!((adv - 0.0241).abs() < 1e-9, "advantage {adv}");
    let bge = dwpi_advantage(0.7661, 0.7425);
    req!((bge - 0.0236).abs() < 1e-9, "second row {bge}");
    Ok(format!("{adv:.4}"))
}

fn patrank(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_patrank"))
        .args(args)
        .env("PATRANK_THREADS", "2")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("`{}` failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn pipeline(data: &Path, out: &Path) -> Result<(), String> {
    let o = |p: &str| out.join(p).display().to_string();
    let d = |p: &str| data.join(p).display().to_string();
    patrank(&[
        "ingest",
        "--corpus",
        &d("corpus.jsonl"),
        "--citations",
        &d("citations.tsv"),
        "--strict",
        "--out",
        &o("ingest"),
    ])?;
    let corpus = o("ingest/corpus.jsonl");
    let cites = o("ingest/citations.tsv");
    patrank(&["split", "--corpus", &corpus, "--seed", "42", "--out", &o("split.tsv")])?;
    patrank(&["qrels", "--corpus", &corpus, "--citations", &cites, "--out", &o("qrels.tsv")])?;
    patrank(&["view", "--corpus", &corpus, "--view", "TA", "--out", &o("TA.jsonl")])?;
    patrank(&["index", "--docs", &o("TA.jsonl"), "--out", &o("TA.bm25")])?;
    let qrels = o("qrels.tsv");
    patrank(&[
        "retrieve",
        "--system",
        "bm25",
        "--method",
        "bm25",
        "--view",
        "TA",
        "--queries",
        &o("TA.jsonl"),
        "--docs",
        &o("TA.bm25"),
        "--qrels",
        &qrels,
        "--k",
        "100",
        "--out",
        &o("runs/bm25.tsv"),
    ])?;
    for sys in ["alpha", "beta"] {
        patrank(&[
            "retrieve",
            "--system",
            sys,
            "--view",
            "TA",
            "--docs",
            &d(&format!("emb/{sys}/TA.emb")),
            "--qrels",
            &qrels,
            "--k",
            "100",
            "--out",
            &o(&format!("runs/{sys}.tsv")),
        ])?;
    }
    patrank(&[
        "fuse",
        "--dense",
        &o("runs/alpha.tsv"),
        "--sparse",
        &o("runs/bm25.tsv"),
        "--alpha",
        "0.5",
        "--out",
        &o("runs/fused.tsv"),
    ])?;
    patrank(&[
        "significance",
        "--run-a",
        &o("runs/alpha.tsv"),
        "--run-b",
        &o("runs/bm25.tsv"),
        "--qrels",
        &qrels,
        "--B",
        "10000",
        "--seed",
        "42",
        "--out",
        &o("significance.tsv"),
    ])?;
    let runs: Vec<String> =
        ["alpha", "beta", "bm25", "fused"].iter().map(|s| format!("TA={}", o(&format!("runs/{s}.tsv")))).collect();
    let report = o("report");
    let mut args = vec!["report", "--qrels", &qrels, "--tag-corpus", &corpus, "--out-dir", &report];
    for r in &runs {
        args.extend(["--run", r.as_str()]);
    }
    patrank(&args)?;
    Ok(())
}

fn collect_files(dir: &Path, base: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
    for entry in std::fs::read_dir(dir).unwrap() {
        let p = entry.unwrap().path();
        if p.is_dir() {
            collect_files(&p, base, out);
        } else {
            out.insert(p.strip_prefix(base).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
        }
    }
}

fn end_to_end() -> Check {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synth200");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let start = Instant::now();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    pipeline(&data, &a)?;
    let elapsed = start.elapsed();
    pipeline(&data, &b)?;
    let (mut fa, mut fb) = (BTreeMap::new(), BTreeMap::new());
    collect_files(&a, &a, &mut fa);
    collect_files(&b, &b, &mut fb);
    req!(fa.keys().eq(fb.keys()), "different output file sets");
    for (k, v) in &fa {
        req!(fb[k] == *v, "{} differs between reruns", k.display());
    }
    req!(fa.contains_key(Path::new("report/leaderboard.tsv")), "no leaderboard written");
    let t = within(elapsed, Duration::from_secs(60))?;
    Ok(format!("{} output files byte-identical across reruns; one pass {t}", fa.len()))
}

fn main() {
    let criteria: [Criterion; 14] = [
        ("metric oracle equivalence", metric_oracle),
        ("bm25 formula check", bm25_formula),
        ("dense/maxsim oracle", dense_maxsim_oracle),
        ("fusion identities", fusion_identities),
        ("rerank set-invariance", rerank_invariance),
        ("truncation identity", truncation_identity),
        ("split hygiene", split_hygiene),
        ("qrels hygiene", qrels_hygiene),
        ("bootstrap calibration", bootstrap_calibration),
        ("clustering metric oracle", clustering_oracle),
        ("probe sanity", probe_sanity),
        ("recipe counts", recipe_counts),
        ("dwpi advantage", dwpi),
        ("end-to-end smoke", end_to_end),
    ];
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panic: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name:<28} {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name:<28} {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
