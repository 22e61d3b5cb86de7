use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn phraselm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_phraselm"))
        .args(args)
        .env_remove("PHRASELM_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = phraselm(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn porcelain(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect()
}

struct Scratch(TempDir);

impl Scratch {
    fn new() -> Self {
        Scratch(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> String {
        self.0.path().join(name).to_string_lossy().into_owned()
    }

    fn write(&self, name: &str, text: &str) -> String {
        let p: PathBuf = self.0.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.to_string_lossy().into_owned()
    }

    fn train(&self, corpus: &str, name: &str, extra: &[&str]) -> String {
        let model = self.path(name);
        let mut args = vec!["train", "--corpus", corpus, "--model", &model];
        args.extend_from_slice(extra);
        ok(&args);
        model
    }
}

#[test]
fn train_reports_counts() {
    let s = Scratch::new();
    let model = s.path("m.lm");
    let out = ok(&[
        "--porcelain",
        "train",
        "--corpus",
        &fixture("train.txt"),
        "--model",
        &model,
        "--order",
        "2",
        "--mpl",
        "1",
    ]);
    let kv = porcelain(&out);
    assert_eq!(kv["mode"], "word");
    assert_eq!(kv["sentences"], "200");
    assert!(kv.contains_key("ngrams.1") && kv.contains_key("ngrams.2"));
    let text = std::fs::read_to_string(&model).unwrap();
    assert!(text.starts_with("\\order 2\n\\mpl 1\n"));
}

#[test]
fn phrase_model_holds_multiword_unigrams() {
    let s = Scratch::new();
    let model = s.train(&fixture("train.txt"), "p.lm", &["--order", "2"]);
    let text = std::fs::read_to_string(model).unwrap();
    let unigrams = text
        .split("\\1-grams:")
        .nth(1)
        .unwrap()
        .split("\\2-grams:")
        .next()
        .unwrap();
    assert!(unigrams.lines().any(|l| l.contains("\tplayed basketball")));
}

#[test]
fn training_twice_is_byte_identical() {
    let s = Scratch::new();
    let a = s.train(&fixture("train.txt"), "a.lm", &[]);
    let b = s.train(&fixture("train.txt"), "b.lm", &[]);
    assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
}

#[test]
fn ppl_on_training_corpus_is_finite_in_every_mode() {
    let s = Scratch::new();
    let corpus = fixture("train.txt");
    let word = s.train(&corpus, "w.lm", &["--mpl", "1"]);
    let phrase = s.train(&corpus, "p.lm", &[]);
    for (model, mode) in [
        (&word, "word"),
        (&word, "sum"),
        (&word, "max"),
        (&phrase, "sum"),
        (&phrase, "max"),
    ] {
        let kv = porcelain(&ok(&[
            "--porcelain",
            "ppl",
            "--model",
            model,
            "--test",
            &corpus,
            "--mode",
            mode,
        ]));
        let ppl: f64 = kv["ppl"].parse().unwrap();
        assert!(ppl.is_finite() && ppl >= 1.0, "{mode}: {ppl}");
    }
}

#[test]
fn uniform_fixture_ppl_is_vocabulary_size() {
    for mode in ["word", "sum", "max"] {
        let kv = porcelain(&ok(&[
            "--porcelain",
            "ppl",
            "--model",
            &fixture("uniform.lm"),
            "--test",
            &fixture("test.txt"),
            "--mode",
            mode,
        ]));
        let ppl: f64 = kv["ppl"].parse().unwrap();
        assert!((ppl - 8.0).abs() < 1e-9, "{mode}: {ppl}");
    }
}

#[test]
fn default_mode_follows_model() {
    let s = Scratch::new();
    let corpus = fixture("train.txt");
    let word = s.train(&corpus, "w.lm", &["--mpl", "1"]);
    let phrase = s.train(&corpus, "p.lm", &[]);
    let test = fixture("test.txt");
    assert_eq!(
        porcelain(&ok(&[
            "--porcelain",
            "ppl",
            "--model",
            &word,
            "--test",
            &test
        ]))["mode"],
        "word"
    );
    assert_eq!(
        porcelain(&ok(&[
            "--porcelain",
            "ppl",
            "--model",
            &phrase,
            "--test",
            &test
        ]))["mode"],
        "sum"
    );
}

#[test]
fn smoothing_off_sets_lambda_to_one() {
    let s = Scratch::new();
    let phrase = s.train(&fixture("train.txt"), "p.lm", &[]);
    let test = fixture("test.txt");
    let on = porcelain(&ok(&[
        "--porcelain",
        "ppl",
        "--model",
        &phrase,
        "--test",
        &test,
    ]));
    let off = porcelain(&ok(&[
        "--porcelain",
        "ppl",
        "--model",
        &phrase,
        "--test",
        &test,
        "--smoothing",
        "off",
    ]));
    assert_eq!(on["lambda"], "0.43");
    assert_eq!(off["lambda"], "1");
    assert_ne!(on["ppl"], off["ppl"]);
}

#[test]
fn sweep_has_one_row_per_order() {
    let s = Scratch::new();
    let corpus = fixture("train.txt");
    let word = s.train(&corpus, "w.lm", &["--mpl", "1"]);
    let phrase = s.train(&corpus, "p.lm", &[]);
    let out = ok(&[
        "ppl",
        "--model",
        &phrase,
        "--test",
        &fixture("test.txt"),
        "--sweep-order",
        "--word-model",
        &word,
    ]);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("Word") && lines[0].contains("Max Smoo."));
    assert!(lines[1].starts_with("Unigram") && lines[3].starts_with("Trigram"));
    let kv = porcelain(&ok(&[
        "--porcelain",
        "ppl",
        "--model",
        &phrase,
        "--test",
        &fixture("test.txt"),
        "--sweep-order",
    ]));
    assert!(kv.contains_key("ppl.3.sumsmoo") && kv.contains_key("ppl.1.max"));
}

#[test]
fn word_mode_on_phrase_model_is_usage_error() {
    let s = Scratch::new();
    let phrase = s.train(&fixture("train.txt"), "p.lm", &[]);
    let out = phraselm(&[
        "ppl",
        "--model",
        &phrase,
        "--test",
        &fixture("test.txt"),
        "--mode",
        "word",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_two() {
    let s = Scratch::new();
    let empty = s.write("empty.txt", "\n\n");
    let model = s.path("m.lm");
    let cases: Vec<Vec<&str>> = vec![
        vec!["train", "--corpus", &empty, "--model", &model],
        vec![
            "train",
            "--corpus",
            "/nonexistent/corpus.txt",
            "--model",
            &model,
        ],
        vec![
            "train", "--corpus", &empty, "--model", &model, "--order", "0",
        ],
        vec![
            "train", "--corpus", &empty, "--model", &model, "--lambda", "1.5",
        ],
        vec!["ppl", "--model", "/nonexistent/model.lm", "--test", &empty],
        vec!["frobnicate"],
    ];
    for args in cases {
        assert_eq!(phraselm(&args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn rerank_writes_one_line_per_segment() {
    let s = Scratch::new();
    let model = s.train(&fixture("train.txt"), "p.lm", &[]);
    let out_file = s.path("selected.txt");
    let kv = porcelain(&ok(&[
        "--porcelain",
        "rerank",
        "--model",
        &model,
        "--nbest",
        &fixture("nbest.txt"),
        "--refs",
        &fixture("refs.txt"),
        "--out",
        &out_file,
    ]));
    assert_eq!(kv["mode"], "max");
    assert_eq!(kv["segments"], "10");
    assert_eq!(
        std::fs::read_to_string(&out_file).unwrap().lines().count(),
        10
    );
    assert!(
        kv.contains_key("baseline.bleu") && kv.contains_key("lm.bleu") && kv.contains_key("delta")
    );
}

#[test]
fn lm_trained_on_references_does_not_lose_to_rank_one() {
    let s = Scratch::new();
    let model = s.train(&fixture("refs.txt"), "refs.lm", &["--order", "2"]);
    for mode in ["sum", "max"] {
        let kv = porcelain(&ok(&[
            "--porcelain",
            "rerank",
            "--model",
            &model,
            "--nbest",
            &fixture("nbest.txt"),
            "--refs",
            &fixture("refs.txt"),
            "--mode",
            mode,
            "--out",
            &s.path("out.txt"),
        ]));
        let base: f64 = kv["baseline.bleu"].parse().unwrap();
        let lm: f64 = kv["lm.bleu"].parse().unwrap();
        assert!(lm >= base, "{mode}: {lm} < {base}");
    }
}

#[test]
fn single_entry_lists_match_rank_one() {
    let s = Scratch::new();
    let model = s.train(&fixture("train.txt"), "p.lm", &[]);
    let nbest = s.write(
        "one.nbest",
        "0 ||| xiaoming played basketball ||| -1\n1 ||| the teacher read a book\n",
    );
    let refs = s.write(
        "refs.txt",
        "xiaoming played basketball last night\nthe teacher read a book\n",
    );
    let kv = porcelain(&ok(&[
        "--porcelain",
        "rerank",
        "--model",
        &model,
        "--nbest",
        &nbest,
        "--refs",
        &refs,
        "--out",
        &s.path("o.txt"),
    ]));
    assert_eq!(kv["delta"], "0");
    assert_eq!(kv["changed"], "0");
}

#[test]
fn rerank_reference_count_mismatch() {
    let s = Scratch::new();
    let model = s.train(&fixture("train.txt"), "p.lm", &[]);
    let refs = s.write("refs.txt", "only one line\n");
    let out = phraselm(&[
        "rerank",
        "--model",
        &model,
        "--nbest",
        &fixture("nbest.txt"),
        "--refs",
        &refs,
        "--out",
        &s.path("o.txt"),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn combine_needs_decoder_scores() {
    let s = Scratch::new();
    let model = s.train(&fixture("train.txt"), "p.lm", &[]);
    let nbest = s.write("n.nbest", "0 ||| a b c\n0 ||| a c b ||| -2\n");
    let refs = s.write("r.txt", "a b c\n");
    let base = [
        "rerank",
        "--model",
        &model,
        "--nbest",
        &nbest,
        "--refs",
        &refs,
        "--out",
        &s.path("o.txt"),
    ];
    assert!(phraselm(&base).status.success());
    let mut with = base.to_vec();
    with.extend(["--combine", "0.5"]);
    assert_eq!(phraselm(&with).status.code(), Some(2));
}

#[test]
fn bleu_command() {
    let refs = fixture("refs.txt");
    let kv = porcelain(&ok(&[
        "--porcelain",
        "bleu",
        "--hyp",
        &refs,
        "--ref",
        &refs,
    ]));
    assert_eq!(kv["bleu"], "1");
    let s = Scratch::new();
    let short = s.write("short.txt", "one line\n");
    assert_eq!(
        phraselm(&["bleu", "--hyp", &short, "--ref", &refs])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn threads_from_environment() {
    let s = Scratch::new();
    let model = s.path("m.lm");
    let out = Command::new(env!("CARGO_BIN_EXE_phraselm"))
        .args([
            "train",
            "--corpus",
            &fixture("train.txt"),
            "--model",
            &model,
        ])
        .env("PHRASELM_THREADS", "3")
        .output()
        .unwrap();
    assert!(out.status.success());
    let reference = s.train(&fixture("train.txt"), "ref.lm", &[]);
    assert_eq!(
        std::fs::read(model).unwrap(),
        std::fs::read(reference).unwrap()
    );
}

#[test]
fn unnormalized_backoff_changes_weights() {
    let s = Scratch::new();
    let corpus = fixture("train.txt");
    let normal = s.train(&corpus, "n.lm", &[]);
    let raw = s.train(&corpus, "u.lm", &["--unnormalized-backoff"]);
    let alias = s.train(&corpus, "a.lm", &["--paper-literal-backoff"]);
    let read = |p: &str| std::fs::read(p).unwrap();
    assert_ne!(read(&normal), read(&raw));
    assert_eq!(read(&raw), read(&alias));
}
