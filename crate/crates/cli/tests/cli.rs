use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn patrank(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patrank"))
        .current_dir(dir)
        .env_remove("PATRANK_THREADS")
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn synth() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/synth200")
}

const SELF_CITE_CORPUS: &str = r#"{"_id":"US1","title":"a","text":"a","family_id":"F1","labels":{"ipc_coarse":["H04"]}}
{"_id":"EP1","title":"a","text":"a","family_id":"F1","labels":{"ipc_coarse":["H04"]}}
{"_id":"US2","title":"b","text":"b","family_id":"F2","labels":{"ipc_coarse":["H04"]}}
{"_id":"US3","title":"c","text":"c","family_id":"F3","labels":{"ipc_coarse":["B60"]}}
"#;

const SELF_CITE_EDGES: &str = "citing_family\tcited_family\nF1\tF1\nF1\tF2\nF1\tF2\nF2\tF3\nF3\tF9\n";

#[test]
fn qrels_hand_count() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("corpus.jsonl"), SELF_CITE_CORPUS).unwrap();
    std::fs::write(dir.path().join("cites.tsv"), SELF_CITE_EDGES).unwrap();
    let o = patrank(dir.path(), &["qrels", "--corpus", "corpus.jsonl", "--citations", "cites.tsv", "--out", "q.tsv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    // US1 and EP1 each judge US2 (IN); US2 judges US3 (OUT).
    assert_eq!(stdout(&o).trim(), "3 queries, 3 judgments (IN 2, OUT 1, UNRESOLVED 0)");
    let body = std::fs::read_to_string(dir.path().join("q.tsv")).unwrap();
    assert_eq!(body.lines().count(), 4);
    assert!(body.lines().skip(1).all(|l| {
        let f: Vec<&str> = l.split('\t').collect();
        f.len() == 3 && f[0] != f[1]
    }));
}

#[test]
fn unknown_flag_exits_one() {
    let o = patrank(&synth(), &["retrieve", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_file_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = patrank(dir.path(), &["qrels", "--corpus", "nope.jsonl", "--citations", "nope.tsv"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn config_dump_reflects_overrides() {
    let o = patrank(&synth(), &["--config", "patrank.conf", "config", "--dump", "--set", "depth=50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.replace(' ', "") == "depth=50"), "{text}");
    assert!(text.contains("embedding.alpha"), "{text}");
}

#[test]
fn retrieve_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("alpha.tsv");
    let o = patrank(
        &synth(),
        &[
            "--config",
            "patrank.conf",
            "retrieve",
            "--view",
            "TA",
            "--system",
            "alpha",
            "--k",
            "10",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = std::fs::read_to_string(&out).unwrap();
    let mut lines = body.lines();
    assert_eq!(lines.next(), Some("query-id\tdoc-id\trank\tscore\tsystem"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 200 * 10);
    assert!(rows.iter().all(|r| r[0] != r[1] && r[4] == "alpha"));
}

#[test]
fn significance_row_shape() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let data = synth();
    let s = |p: &str| data.join(p).display().to_string();
    let q = d.join("q.tsv").display().to_string();
    assert!(patrank(d, &["qrels", "--corpus", &s("corpus.jsonl"), "--citations", &s("citations.tsv"), "--out", &q])
        .status
        .success());
    for sys in ["alpha", "beta"] {
        let out = d.join(format!("{sys}.tsv")).display().to_string();
        let emb = s(&format!("emb/{sys}/TA.emb"));
        let o = patrank(d, &["retrieve", "--system", sys, "--view", "TA", "--docs", &emb, "--k", "100", "--out", &out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let out = d.join("sig.tsv");
    let o = patrank(
        d,
        &[
            "significance",
            "--run-a",
            "alpha.tsv",
            "--run-b",
            "beta.tsv",
            "--qrels",
            "q.tsv",
            "--B",
            "2000",
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let body = std::fs::read_to_string(&out).unwrap();
    let rows: Vec<Vec<&str>> = body.lines().filter(|l| !l.starts_with('#')).map(|l| l.split('\t').collect()).collect();
    assert_eq!(rows.len(), 2, "{body}");
    assert_eq!(rows[0], ["model_a", "model_b", "mean_a", "mean_b", "diff", "p", "sig"]);
    let row = &rows[1];
    assert_eq!(row.len(), 7);
    let mean = |i: usize| row[i].parse::<f64>().unwrap();
    assert!(mean(2) >= mean(3));
    assert!((mean(2) - mean(3) - mean(4)).abs() <= 1e-4);
    assert!((0.0..=1.0).contains(&mean(5)));
    assert!(["**", "*", "n.s."].contains(&row[6]));
}
