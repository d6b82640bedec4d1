mod common;

use std::fs;
use std::path::Path;

use clfkit::io;
use clfkit::report;
use clfkit_core::clf::{olf_to_text, parse_program, validate};
use clfkit_testkit::fixtures::{alias_corpus, covr_corpus, olf_corpus};
use common::{clfkit, p, write_examples, write_graphs};
use tempfile::TempDir;

fn corpus_dir(per_template: usize) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let c = covr_corpus(17, per_template);
    write_graphs(&p(dir.path(), "graphs.json"), &c.graphs);
    write_examples(&p(dir.path(), "examples.jsonl"), &c.examples);
    let preds = common::gold_predictions(&c.examples);
    fs::write(
        p(dir.path(), "gold-programs.jsonl"),
        io::predictions_to_jsonl(&preds),
    )
    .unwrap();
    dir
}

fn ok(out: &std::process::Output) {
    assert!(
        out.status.success(),
        "status {:?}\nstderr: {}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(p(dir, name)).unwrap()
}

#[test]
fn translate_produces_valid_clf() {
    let dir = tempfile::tempdir().unwrap();
    let list: Vec<String> = olf_corpus().iter().map(olf_to_text).collect();
    fs::write(p(dir.path(), "olf.json"), format!("[{}]", list.join(","))).unwrap();
    ok(&clfkit(
        dir.path(),
        &["translate", "--in", "olf.json", "--out", "clf.json"],
    ));
    let v: Vec<serde_json::Value> = serde_json::from_str(&read(dir.path(), "clf.json")).unwrap();
    assert_eq!(v.len(), list.len());
    for prog in v {
        let c = parse_program(&prog.to_string()).unwrap();
        assert!(validate(&c).is_executable());
    }
}

#[test]
fn translate_examples_file() {
    let dir = corpus_dir(3);
    ok(&clfkit(
        dir.path(),
        &["translate", "--in", "examples.jsonl", "--out", "t.jsonl"],
    ));
    // Already CLF: translation is the identity on canonical text.
    assert_eq!(
        read(dir.path(), "t.jsonl"),
        read(dir.path(), "examples.jsonl")
    );
}

#[test]
fn segcomb_is_seed_deterministic() {
    let dir = corpus_dir(10);
    let args = |out: &'static str, seed: &'static str| {
        [
            "gen-segcomb",
            "--examples",
            "examples.jsonl",
            "--graphs-gold",
            "graphs.json",
            "--seed",
            seed,
            "--out",
            out,
        ]
    };
    ok(&clfkit(dir.path(), &args("a.jsonl", "7")));
    ok(&clfkit(dir.path(), &args("b.jsonl", "7")));
    ok(&clfkit(dir.path(), &args("c.jsonl", "8")));
    let (a, b, c) = (
        read(dir.path(), "a.jsonl"),
        read(dir.path(), "b.jsonl"),
        read(dir.path(), "c.jsonl"),
    );
    assert!(!a.is_empty());
    assert_eq!(a, b);
    assert_ne!(a, c);
    let derived = io::parse_examples(Path::new("a"), &a).unwrap();
    assert!(derived
        .iter()
        .all(|d| d.provenance.as_ref().unwrap().seed == Some(7)));
}

#[test]
fn eval_gold_programs_scores_one() {
    let dir = corpus_dir(6);
    let out = clfkit(
        dir.path(),
        &[
            "eval",
            "--graphs",
            "gold",
            "--graphs-gold",
            "graphs.json",
            "--examples",
            "examples.jsonl",
            "--predictions",
            "gold-programs.jsonl",
            "--out",
            "report.csv",
        ],
    );
    ok(&out);
    let rows = report::from_csv(&read(dir.path(), "report.csv")).unwrap();
    assert_eq!(rows[0].template, "all");
    for r in &rows {
        assert_eq!(
            (r.accuracy, r.gt_exec, r.exact),
            (Some(1.0), Some(1.0), Some(1.0))
        );
        assert_eq!(r.gen_exec, None);
        assert_eq!(r.missing_object_ratio, Some(0.0));
    }
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("- [100.0]"), "{table}");

    ok(&clfkit(
        dir.path(),
        &[
            "eval",
            "--gold-programs",
            "--graphs-gold",
            "graphs.json",
            "--examples",
            "examples.jsonl",
            "--format",
            "json",
            "--out",
            "report.json",
        ],
    ));
    let r: clfkit_core::metrics::MetricReport =
        serde_json::from_str(&read(dir.path(), "report.json")).unwrap();
    assert_eq!(r.rows[0].gt_exec.hits, r.rows[0].gt_exec.total);
}

#[test]
fn contrast_then_coherency() {
    let dir = corpus_dir(8);
    ok(&clfkit(
        dir.path(),
        &[
            "gen-contrast",
            "--examples",
            "examples.jsonl",
            "--graphs-gold",
            "graphs.json",
            "--out",
            "contrast.jsonl",
            "--pairs",
            "pairs.jsonl",
        ],
    ));
    let contrast = read(dir.path(), "contrast.jsonl");
    let pairs = io::load_pairs(&p(dir.path(), "pairs.jsonl")).unwrap();
    assert_eq!(pairs.len(), contrast.lines().count());
    assert!(!pairs.is_empty());

    // Scoring the union with gold answers as direct predictions.
    let mut all = read(dir.path(), "examples.jsonl");
    all.push_str(&contrast);
    fs::write(p(dir.path(), "union.jsonl"), &all).unwrap();
    let ex = io::load_examples(&p(dir.path(), "union.jsonl")).unwrap();
    let preds: Vec<_> = ex
        .iter()
        .map(|e| clfkit_core::metrics::PredictionRecord {
            example_id: e.example_id.clone(),
            program: None,
            answer: Some(e.gold_answer.clone()),
            system: "oracle".into(),
        })
        .collect();
    fs::write(
        p(dir.path(), "answers.jsonl"),
        io::predictions_to_jsonl(&preds),
    )
    .unwrap();
    ok(&clfkit(
        dir.path(),
        &[
            "eval",
            "--graphs-gold",
            "graphs.json",
            "--examples",
            "union.jsonl",
            "--predictions",
            "answers.jsonl",
            "--pairs",
            "pairs.jsonl",
            "--out",
            "r.csv",
        ],
    ));
    let rows = report::from_csv(&read(dir.path(), "r.csv")).unwrap();
    let by_id: std::collections::BTreeMap<_, _> =
        ex.iter().map(|e| (e.example_id.as_str(), e)).collect();
    let same = pairs
        .iter()
        .filter(|q| {
            by_id[q.original_id.as_str()].gold_answer == by_id[q.contrast_id.as_str()].gold_answer
        })
        .count();
    assert_eq!(
        rows[0].local_coherency,
        Some(same as f64 / pairs.len() as f64)
    );
    assert!(rows[1..].iter().all(|r| r.local_coherency.is_none()));
}

#[test]
fn alias_dictionary_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let c = alias_corpus(4, 12);
    write_graphs(&p(dir.path(), "g.json"), &c.graphs);
    write_examples(&p(dir.path(), "train.jsonl"), &c.train);
    write_examples(&p(dir.path(), "test.jsonl"), &c.test);
    ok(&clfkit(
        dir.path(),
        &[
            "build-alias-dict",
            "--examples",
            "train.jsonl",
            "--graphs-gold",
            "g.json",
            "--out",
            "d.json",
        ],
    ));
    let run = |extra: &[&str], out: &str| {
        let mut args = vec![
            "execute",
            "--examples",
            "test.jsonl",
            "--graphs-gold",
            "g.json",
            "--out",
            out,
        ];
        args.extend_from_slice(extra);
        ok(&clfkit(dir.path(), &args));
        io::parse_jsonl::<io::OutcomeRecord>(Path::new(out), &read(dir.path(), out))
            .unwrap()
            .into_iter()
            .map(|(_, r)| r)
            .collect::<Vec<_>>()
    };
    let without = run(&[], "o1.jsonl");
    assert!(without
        .iter()
        .all(|o| o.fatal && o.events.contains(&"object_not_found".to_string())));
    let with = run(&["--dict", "d.json", "--trace"], "o2.jsonl");
    for (o, ex) in with.iter().zip(&c.test) {
        assert_eq!(o.answer.as_deref(), Some(ex.gold_answer.as_str()));
        assert!(o.trace.is_some());
    }
}

#[test]
fn few_shot_files() {
    let dir = corpus_dir(4);
    let c = covr_corpus(99, 20);
    let contrast: Vec<_> = c.examples.iter().take(20).cloned().collect();
    write_examples(&p(dir.path(), "contrast.jsonl"), &contrast);
    let train = read(dir.path(), "examples.jsonl");
    let fs_args = |k: &'static str, out: &'static str| {
        [
            "few-shot",
            "--in",
            "examples.jsonl",
            "--contrast",
            "contrast.jsonl",
            "--k",
            k,
            "--seed",
            "3",
            "--out",
            out,
        ]
    };
    ok(&clfkit(dir.path(), &fs_args("0", "k0.jsonl")));
    assert_eq!(read(dir.path(), "k0.jsonl"), train);
    ok(&clfkit(dir.path(), &fs_args("1", "k1.jsonl")));
    assert_eq!(
        read(dir.path(), "k1.jsonl").lines().count(),
        train.lines().count() + 1
    );
    ok(&clfkit(dir.path(), &fs_args("5", "k5a.jsonl")));
    ok(&clfkit(dir.path(), &fs_args("5", "k5b.jsonl")));
    let k5 = read(dir.path(), "k5a.jsonl");
    assert_eq!(k5, read(dir.path(), "k5b.jsonl"));
    assert!(k5.starts_with(&train));
    assert!(k5
        .lines()
        .skip(train.lines().count())
        .all(|l| l.contains(r#""augment":"few_shot""#)));
    assert_eq!(read(dir.path(), "examples.jsonl"), train);

    let out = clfkit(dir.path(), &fs_args("21", "k21.jsonl"));
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cannot sample 21"));
    let out = clfkit(dir.path(), &fs_args("2", "examples.jsonl"));
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(read(dir.path(), "examples.jsonl"), train);
}

#[test]
fn exit_codes() {
    let dir = corpus_dir(2);
    assert_eq!(
        clfkit(dir.path(), &["no-such-command"]).status.code(),
        Some(2)
    );
    assert_eq!(
        clfkit(dir.path(), &["execute", "--bogus"]).status.code(),
        Some(2)
    );
    assert_eq!(
        clfkit(dir.path(), &["execute", "--graphs-gold", "graphs.json"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        clfkit(
            dir.path(),
            &[
                "eval",
                "--examples",
                "examples.jsonl",
                "--graphs-gold",
                "graphs.json"
            ]
        )
        .status
        .code(),
        Some(2)
    );
    fs::write(p(dir.path(), "bad.json"), "{\"i\": {\"objects\": {\"o\": {\"name\": \"cup\", \"relations\": [{\"name\": \"on\", \"object\": \"zz\"}]}}}}").unwrap();
    let out = clfkit(
        dir.path(),
        &[
            "execute",
            "--examples",
            "examples.jsonl",
            "--graphs-gold",
            "bad.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing object zz"));
    let out = clfkit(
        dir.path(),
        &[
            "execute",
            "--examples",
            "missing.jsonl",
            "--graphs-gold",
            "graphs.json",
        ],
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_data_root() {
    let dir = corpus_dir(3);
    let data = dir.path().to_path_buf();
    let work = tempfile::tempdir().unwrap();
    fs::write(
        p(work.path(), "run.toml"),
        format!(
            "examples = {:?}\ngraphs_gold = {:?}\nseed = 7\n",
            p(&data, "examples.jsonl"),
            p(&data, "graphs.json")
        ),
    )
    .unwrap();
    ok(&clfkit(
        work.path(),
        &["gen-segcomb", "--config", "run.toml", "--out", "cfg.jsonl"],
    ));
    ok(&clfkit(
        work.path(),
        &[
            "gen-segcomb",
            "--config",
            "run.toml",
            "--seed",
            "8",
            "--out",
            "flag.jsonl",
        ],
    ));

    // Relative inputs resolve against the data root; outputs do not.
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_clfkit"))
        .current_dir(work.path())
        .env("CLFKIT_DATA", &data)
        .args([
            "gen-segcomb",
            "--examples",
            "examples.jsonl",
            "--graphs-gold",
            "graphs.json",
            "--seed",
            "7",
        ])
        .args(["--out", "env.jsonl"])
        .output()
        .unwrap();
    ok(&out);
    let cfg = read(work.path(), "cfg.jsonl");
    assert_eq!(cfg, read(work.path(), "env.jsonl"));
    assert_ne!(cfg, read(work.path(), "flag.jsonl"));

    fs::write(p(work.path(), "bad.toml"), "sede = 1\n").unwrap();
    let out = clfkit(work.path(), &["gen-segcomb", "--config", "bad.toml"]);
    assert_eq!(out.status.code(), Some(1));
}
