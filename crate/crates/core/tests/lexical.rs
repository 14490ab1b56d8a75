use std::collections::HashMap;

use patrank_core::corpus::{ViewCorpus, ViewEntry};
use patrank_core::lexical::{bm25_topk, build_bm25, retrieve_bm25, Bm25Index};
use proptest::prelude::*;

fn view(docs: &[(&str, &str)]) -> ViewCorpus {
    ViewCorpus {
        name: "TA".into(),
        entries: docs.iter().map(|(id, text)| ViewEntry { doc_id: id.to_string(), text: text.to_string() }).collect(),
    }
}

const FIVE: [(&str, &str); 5] = [
    ("d1", "solar panel mounting bracket"),
    ("d2", "solar cell efficiency solar"),
    ("d3", "wind turbine blade"),
    ("d4", "panel display screen panel panel"),
    ("d5", "battery cell thermal management"),
];

#[test]
fn five_doc_hand_values() {
    let idx = build_bm25(&view(&FIVE), 1.5, 0.75).unwrap();
    assert_eq!(idx.doc_count(), 5);
    assert!((idx.avg_doc_length() - 4.0).abs() < 1e-12);
    assert_eq!(idx.doc_freq("solar"), 2);
    assert_eq!(idx.doc_freq("panel"), 2);
    assert_eq!(idx.doc_freq("cell"), 2);
    assert_eq!(idx.postings("panel").iter().map(|p| p.tf).collect::<Vec<_>>(), [1, 3]);

    let r = bm25_topk(&idx, "solar panel", 10);
    let got: Vec<(&str, f64)> = r.iter().map(|e| (e.doc_id.as_str(), e.score)).collect();
    let want = [("d1", 1.7509374747078), ("d4", 1.3732842938884704), ("d2", 1.2506696247912856)];
    assert_eq!(got.len(), 3);
    for ((gd, gs), (wd, ws)) in got.iter().zip(want) {
        assert_eq!(*gd, wd);
        assert!((gs - ws).abs() < 1e-6, "{gd}: {gs} vs {ws}");
    }

    let tie = bm25_topk(&idx, "cell", 10);
    assert_eq!(tie.iter().map(|e| e.doc_id.as_str()).collect::<Vec<_>>(), ["d2", "d5"]);
    assert!((tie[0].score - 0.8754687373539).abs() < 1e-6);
    assert!(bm25_topk(&idx, "absent", 10).is_empty());
}

#[test]
fn term_order_irrelevant() {
    let idx = build_bm25(&view(&FIVE), 1.5, 0.75).unwrap();
    assert_eq!(bm25_topk(&idx, "solar panel cell", 10), bm25_topk(&idx, "cell panel solar", 10));
}

// A multi-term query can reorder because N shifts each term's IDF by a
// different factor; single-term queries only rescale.
#[test]
fn irrelevant_doc_keeps_order() {
    let before = build_bm25(&view(&FIVE), 1.5, 0.75).unwrap();
    let mut more = FIVE.to_vec();
    more.push(("d6", "gear shaft housing seal"));
    let after = build_bm25(&view(&more), 1.5, 0.75).unwrap();
    for q in ["solar", "panel", "cell", "blade"] {
        let ids = |i: &Bm25Index| bm25_topk(i, q, 10).into_iter().map(|e| e.doc_id).collect::<Vec<_>>();
        assert_eq!(ids(&before), ids(&after), "{q}");
    }
}

#[test]
fn run_excludes_self() {
    let v = view(&FIVE);
    let idx = build_bm25(&v, 1.5, 0.75).unwrap();
    let run = retrieve_bm25("bm25", &idx, &v, &["d1", "d3"], 10, true).unwrap();
    assert!(run.get("d1").unwrap().iter().all(|e| e.doc_id != "d1"));
    assert!(run.get("d3").unwrap().is_empty());
}

fn naive(docs: &[(String, String)], query: &str, k1: f64, b: f64) -> HashMap<String, f64> {
    let toks = |s: &str| -> Vec<String> {
        s.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
    };
    let tokenized: Vec<Vec<String>> = docs.iter().map(|(_, t)| toks(t)).collect();
    let n = docs.len() as f64;
    let avg = tokenized.iter().map(Vec::len).sum::<usize>() as f64 / n;
    let mut out = HashMap::new();
    for (i, (id, _)) in docs.iter().enumerate() {
        let mut s = 0.0;
        for t in toks(query) {
            let df = tokenized.iter().filter(|d| d.contains(&t)).count() as f64;
            if df == 0.0 {
                continue;
            }
            let tf = tokenized[i].iter().filter(|w| **w == t).count() as f64;
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            let norm = if avg > 0.0 { tokenized[i].len() as f64 / avg } else { 1.0 };
            s += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm));
        }
        if s > 0.0 {
            out.insert(id.clone(), s);
        }
    }
    out
}

proptest! {
    #[test]
    fn matches_full_scan(
        texts in prop::collection::vec(prop::collection::vec(0usize..8, 0..12), 1..20),
        query in prop::collection::vec(0usize..10, 1..5),
        k1 in 0.5f64..2.0,
        b in 0.0f64..1.0,
    ) {
        const WORDS: [&str; 10] = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta", "iota", "kappa"];
        let docs: Vec<(String, String)> = texts
            .iter()
            .enumerate()
            .map(|(i, ws)| (format!("d{i:02}"), ws.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ")))
            .collect();
        let q = query.iter().map(|&w| WORDS[w]).collect::<Vec<_>>().join(" ");
        let refs: Vec<(&str, &str)> = docs.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
        let idx = build_bm25(&view(&refs), k1, b).unwrap();
        let got = bm25_topk(&idx, &q, 100);
        let want = naive(&docs, &q, k1, b);
        prop_assert_eq!(got.len(), want.len());
        for e in &got {
            prop_assert!((e.score - want[&e.doc_id]).abs() < 1e-9);
            prop_assert!(e.score >= 0.0);
        }
        for w in got.windows(2) {
            prop_assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].doc_id < w[1].doc_id));
        }
    }
}
