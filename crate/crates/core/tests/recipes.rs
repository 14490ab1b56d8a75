use std::collections::BTreeMap;

use patrank_core::corpus::{CitationEdge, Corpus, Document, Partition, Section, Split, SplitRatios};
use patrank_core::recipes::{generate_pairs, read_pairs, Provenance, Recipe, RecipeOptions};

fn doc(id: &str, fam: &str, label: Option<&str>, claim: bool) -> Document {
    let mut d = Document { doc_id: id.into(), family_id: fam.into(), ..Default::default() };
    d.sections.insert(Section::Title, format!("title {id}"));
    d.sections.insert(Section::Abstract, format!("abstract {id}"));
    if claim {
        d.sections.insert(Section::Claim1, format!("1. claim {id}"));
    }
    if let Some(l) = label {
        d.add_label("coarse", l);
    }
    d
}

fn fixture() -> (Corpus, Split) {
    let docs = vec![
        doc("US1", "F1", Some("A"), true),
        doc("US2", "F2", Some("A"), true),
        doc("US3", "F3", Some("A"), false),
        doc("US4", "F4", Some("B"), true),
        doc("US5", "F5", Some("A"), true),
    ];
    let corpus = Corpus::from_documents(docs)
        .unwrap()
        .with_citations(
            [CitationEdge::new("F1", "F2"), CitationEdge::new("F3", "F4"), CitationEdge::new("F1", "F5")],
            true,
        )
        .unwrap();
    let mut assignment = BTreeMap::new();
    for id in ["US1", "US2", "US3", "US4"] {
        assignment.insert(id.to_string(), Partition::Train);
    }
    assignment.insert("US5".to_string(), Partition::Test);
    let split = Split { assignment, ratios: SplitRatios::new(0.8, 0.1, 0.1).unwrap(), seed: 0 };
    (corpus, split)
}

#[test]
fn recipe_counts() {
    let (corpus, split) = fixture();
    let opts = RecipeOptions::default();
    let r1 = generate_pairs(&corpus, &split, Recipe::R1, 7, &opts).unwrap();
    assert_eq!(r1.len(), 3);
    let r2 = generate_pairs(&corpus, &split, Recipe::R2, 7, &opts).unwrap();
    assert_eq!(r2.len(), 2);
    let r3 = generate_pairs(&corpus, &split, Recipe::R3, 7, &opts).unwrap();
    assert_eq!(r3.len(), 3);
    let r4 = generate_pairs(&corpus, &split, Recipe::R4, 7, &opts).unwrap();
    assert_eq!(r4.len(), 8);
    assert_eq!(r4.count(Provenance::R1), 3);
    assert_eq!(r4.count(Provenance::R2), 2);
    assert_eq!(r4.count(Provenance::R3), 3);
    for set in [&r1, &r2, &r3, &r4] {
        assert!(set.leakage(&split).is_empty());
    }

    let matched = RecipeOptions { target_count: Some(r4.len()), ..RecipeOptions::default() };
    let r3m = generate_pairs(&corpus, &split, Recipe::R3M, 7, &matched).unwrap();
    assert_eq!(r3m.len(), r4.len());
    assert!(r3m.pairs.iter().all(|p| p.provenance == Provenance::R3));
}

#[test]
fn cap_and_byte_identical_output() {
    let docs: Vec<Document> = (0..40).map(|i| doc(&format!("US{i:02}"), &format!("F{i}"), Some("A"), true)).collect();
    let corpus = Corpus::from_documents(docs).unwrap();
    let assignment = corpus.docs().iter().map(|d| (d.doc_id.clone(), Partition::Train)).collect();
    let split = Split { assignment, ratios: SplitRatios::new(0.8, 0.1, 0.1).unwrap(), seed: 0 };
    let opts = RecipeOptions::default();
    let a = generate_pairs(&corpus, &split, Recipe::R1, 3, &opts).unwrap();
    assert_eq!(a.len(), 50);
    let dir = tempfile::tempdir().unwrap();
    let (pa, pb) = (dir.path().join("a.tsv"), dir.path().join("b.tsv"));
    a.save(&pa).unwrap();
    generate_pairs(&corpus, &split, Recipe::R1, 3, &opts).unwrap().save(&pb).unwrap();
    assert_eq!(std::fs::read(&pa).unwrap(), std::fs::read(&pb).unwrap());
    assert_eq!(read_pairs(&pa).unwrap().len(), 50);
    let other = generate_pairs(&corpus, &split, Recipe::R1, 4, &opts).unwrap();
    assert_ne!(other.pairs, a.pairs);
    let uncapped = RecipeOptions { r1_cap: None, ..RecipeOptions::default() };
    assert_eq!(generate_pairs(&corpus, &split, Recipe::R1, 3, &uncapped).unwrap().len(), 780);
}
