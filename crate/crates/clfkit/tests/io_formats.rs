mod common;

use std::path::Path;

use clfkit::io::{self, LoadError, OutcomeRecord};
use clfkit::report::{self, CsvRow};
use clfkit_core::clf::GoldProgram;
use clfkit_core::exec::{BatchItem, ExecOptions, GraphSource};
use clfkit_core::metrics::{
    build_report, example_scores, exec_items, index_predictions, judge_all, ProgramChoice,
};
use clfkit_core::scene::SceneError;
use clfkit_core::testgen::builtin_rules;
use clfkit_core::{AliasDictionary, SceneGraph};
use clfkit_testkit::fixtures::covr_corpus;
use clfkit_testkit::gen::{random_graph, random_program};
use proptest::prelude::*;

const HERE: &str = "<test>";

fn graphs(text: &str) -> Result<Vec<SceneGraph>, LoadError> {
    io::parse_scene_graphs(Path::new(HERE), text)
}

#[test]
fn minimal_graph() {
    let g = graphs(r#"{"img1": {"objects": {"o1": {"name": "parrot"}}}}"#).unwrap();
    assert_eq!(g.len(), 1);
    assert_eq!(g[0].image_id(), "img1");
    assert_eq!(g[0].objects()[0].name, "parrot");
}

#[test]
fn dangling_and_duplicate_objects() {
    let e = graphs(r#"{"i": {"objects": {"o1": {"name": "cup", "relations": [{"name": "on", "object": "o9"}]}}}}"#)
        .unwrap_err();
    assert!(
        matches!(
            e,
            LoadError::Scene {
                source: SceneError::DanglingRelation { .. },
                ..
            }
        ),
        "{e}"
    );
    let e = graphs(r#"{"i": {"objects": {"o1": {"name": "cup"}, "o1": {"name": "mug"}}}}"#)
        .unwrap_err();
    assert!(
        matches!(
            e,
            LoadError::Scene {
                source: SceneError::DuplicateObjectId { .. },
                ..
            }
        ),
        "{e}"
    );
    let e = graphs(r#"{"i": {"objects": {}}, "i": {"objects": {}}}"#).unwrap_err();
    assert!(matches!(e, LoadError::DuplicateImage { .. }), "{e}");
}

#[test]
fn malformed_syntax() {
    let e = graphs(r#"{"i": {"objects": {"o1": {"name": "cup",}}}}"#).unwrap_err();
    assert!(matches!(e, LoadError::MalformedFile { .. }), "{e}");
    let e = graphs(r#"{"i": {"objects": {"o1": {"attributes": []}}}}"#).unwrap_err();
    assert!(matches!(e, LoadError::MalformedFile { .. }), "{e}");
}

#[test]
fn gqa_fixture_counts_and_order() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data/gqa_three.json");
    let map = io::load_scene_graphs(&path).unwrap();
    assert_eq!(map.len(), 3);
    // Four, five and three objects, counted in the file.
    assert_eq!(map.values().map(|g| g.len()).sum::<usize>(), 12);
    let ids: Vec<&str> = map["2368310"]
        .objects()
        .iter()
        .map(|o| o.object_id.as_str())
        .collect();
    assert_eq!(ids, ["9", "3", "5", "1", "12"]);
    let man = map["2368310"].get("12").unwrap();
    assert_eq!(
        (man.name.as_str(), man.attributes.as_slice()),
        ("man", &["standing".to_string()][..])
    );
    assert_eq!(
        map["2354786"].get("776").unwrap().attributes,
        ["brown", "wooden"]
    );
}

#[test]
fn examples_accept_string_programs_and_scalar_answers() {
    let text = concat!(
        r#"{"example_id":"a","question":"How many?","image_ids":["i"],"answer":3,"#,
        r#""program":"[{\"op\":\"find\",\"args\":[\"cup\"]},{\"op\":\"count\",\"deps\":[0]}]"}"#,
        "\n\n",
        r#"{"example_id":"b","question":"Cup or mug?","image_ids":["i"],"answer":"Cup","template_id":"T","#,
        r#""program":[{"op":"find","args":["cup"]},{"op":"choose_name","args":["cup","mug"],"deps":[0]}]}"#,
        "\n"
    );
    let ex = io::parse_examples(Path::new(HERE), text).unwrap();
    assert_eq!(ex.len(), 2);
    assert_eq!(ex[0].example.gold_answer, "3");
    assert_eq!(ex[1].example.gold_answer, "cup");
    assert!(matches!(
        ex[0].example.gold_program,
        Some(GoldProgram::Clf(_))
    ));
    assert!(matches!(
        ex[1].example.gold_program,
        Some(GoldProgram::Olf(_))
    ));
}

#[test]
fn example_errors_carry_line_numbers() {
    let ok = r#"{"example_id":"a","question":"q","image_ids":["i"],"answer":"no"}"#;
    let e = io::parse_examples(Path::new(HERE), &format!("{ok}\n{{broken\n")).unwrap_err();
    assert!(
        matches!(e, LoadError::MalformedFile { line: Some(2), .. }),
        "{e}"
    );
    let e = io::parse_examples(Path::new(HERE), &format!("{ok}\n{ok}\n")).unwrap_err();
    assert!(matches!(e, LoadError::DuplicateExample { .. }), "{e}");
    let bad = r#"{"example_id":"b","question":"q","image_ids":["i"],"answer":"no","program":[{"op":"fly"}]}"#;
    let e = io::parse_examples(Path::new(HERE), bad).unwrap_err();
    assert!(matches!(e, LoadError::Program { line: 1, .. }), "{e}");
}

#[test]
fn predictions_keep_unparseable_programs() {
    let text = concat!(
        r#"{"example_id":"a","program":[{"op":"find","args":["x"]}],"system":"s"}"#,
        "\n",
        r#"{"example_id":"b","program":"not a program","answer":2,"system":"s"}"#,
        "\n",
        r#"{"example_id":"c","answer":"No"}"#,
        "\n"
    );
    let p = io::parse_predictions(Path::new(HERE), text).unwrap();
    assert_eq!(
        p[0].program.as_deref(),
        Some(r#"[{"op":"find","args":["x"]}]"#)
    );
    assert_eq!(p[1].program.as_deref(), Some("not a program"));
    assert_eq!(p[1].answer.as_deref(), Some("2"));
    assert_eq!((p[2].program.as_deref(), p[2].system.as_str()), (None, ""));
    let back = io::parse_predictions(Path::new(HERE), &io::predictions_to_jsonl(&p)).unwrap();
    assert_eq!(back, p);
}

#[test]
fn dictionary_and_rules_round_trip() {
    let d = io::parse_alias_dictionary(
        Path::new(HERE),
        r#"{"bird": [["eagle", 1], ["parrot", 3]], "Cup": [["mug", 2]]}"#,
    )
    .unwrap();
    assert_eq!(
        d.aliases("bird"),
        &[("parrot".to_string(), 3), ("eagle".to_string(), 1)]
    );
    assert_eq!(d.count("cup", "mug"), 2);
    let again: AliasDictionary =
        io::parse_alias_dictionary(Path::new(HERE), &io::alias_dictionary_to_json(&d)).unwrap();
    assert_eq!(again, d);

    let rules = builtin_rules();
    assert_eq!(
        io::parse_rules(Path::new(HERE), &io::rules_to_json(&rules)).unwrap(),
        rules
    );
    let bad = r#"[{"template_id":"T","source_phrase":"a","replacement_phrase":"b","meaning":"preserving","label_transform":"flip"}]"#;
    assert!(matches!(
        io::parse_rules(Path::new(HERE), bad),
        Err(LoadError::MalformedFile { .. })
    ));
}

#[test]
fn outcome_records() {
    let c = covr_corpus(3, 2);
    let ex = &c.examples[0];
    let item = BatchItem::gold(ex);
    let o = clfkit_core::exec::run_item(
        &item,
        &c.graphs,
        GraphSource::Gold,
        None,
        ExecOptions { trace: true },
    );
    let plain = OutcomeRecord::from_outcome(&o, false);
    assert_eq!(plain.answer.as_deref(), Some(ex.gold_answer.as_str()));
    assert_eq!(plain.graphs_source, "gold");
    assert!(plain.trace.is_none());
    let line = serde_json::to_string(&plain).unwrap();
    assert!(!line.contains("trace"), "{line}");
    let traced = OutcomeRecord::from_outcome(&o, true);
    assert_eq!(
        traced.trace.as_ref().unwrap().len(),
        ex.clf_program().unwrap().unwrap().len()
    );
    let back: OutcomeRecord =
        serde_json::from_str(&serde_json::to_string(&traced).unwrap()).unwrap();
    assert_eq!(back, traced);
}

fn gold_report(per_template: usize, templates: Option<&str>) -> clfkit_core::metrics::MetricReport {
    let c = covr_corpus(11, per_template);
    let examples: Vec<_> = match templates {
        Some(t) => c.by_template(t).cloned().collect(),
        None => c.examples.clone(),
    };
    let preds = index_predictions(common::gold_predictions(&examples), &examples).unwrap();
    let items = exec_items(&examples, &preds, ProgramChoice::Predicted);
    let gt = judge_all(
        &examples,
        &clfkit::par::run_parallel(
            &items,
            &c.graphs,
            GraphSource::Gold,
            None,
            ExecOptions::default(),
        ),
    );
    build_report(
        "test",
        &examples,
        &example_scores(&examples, &preds, None, Some(&gt)),
        None,
    )
}

#[test]
fn one_template_report_has_one_row() {
    let r = gold_report(4, Some("VerifyCount"));
    let rows = report::from_csv(&report::to_csv(&r).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].template, "VerifyCount");
}

#[test]
fn absent_coherency_is_omitted() {
    let r = gold_report(4, None);
    let csv = report::to_csv(&r).unwrap();
    assert!(csv.starts_with(&report::CSV_COLUMNS.join(",")), "{csv}");
    for row in report::from_csv(&csv).unwrap() {
        assert_eq!(row.local_coherency, None);
        assert_eq!(row.gen_exec, None);
    }
    assert!(!report::to_json(&r).contains("local_coherency"));
}

#[test]
fn csv_parses_back_to_report_values() {
    let r = gold_report(8, None);
    let rows = report::from_csv(&report::to_csv(&r).unwrap()).unwrap();
    let want: Vec<CsvRow> = r.rows.iter().map(CsvRow::from).collect();
    assert_eq!(rows, want);
    assert_eq!(rows[0].gt_exec, Some(1.0));
    let json: clfkit_core::metrics::MetricReport =
        serde_json::from_str(&report::to_json(&r)).unwrap();
    assert_eq!(json, r);
    let table = report::render_table(&r);
    assert!(
        table.contains("100.0 [100.0]") || table.contains("- [100.0]"),
        "{table}"
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_files_round_trip(seed in any::<u64>(), n in 1usize..4) {
        let mut rng = clfkit_core::seed::stream(seed, "io", 0);
        let gs: Vec<SceneGraph> = (0..n).map(|i| random_graph(&mut rng, &format!("img{i}"))).collect();
        let refs: Vec<&SceneGraph> = gs.iter().collect();
        let text = io::scene_graphs_to_json(&refs);
        let back = graphs(&text).unwrap();
        prop_assert_eq!(&back, &gs);
        prop_assert_eq!(io::scene_graphs_to_json(&back.iter().collect::<Vec<_>>()), text);
    }

    #[test]
    fn example_files_round_trip(seed in any::<u64>()) {
        let mut rng = clfkit_core::seed::stream(seed, "io", 0);
        let ex: Vec<_> = (0..4)
            .map(|i| {
                clfkit_core::QaExample::new(format!("e{i}"), "What?", vec!["a".into(), "b".into()], "yes")
                    .with_program(random_program(&mut rng))
                    .with_template("T")
            })
            .collect();
        let text = io::examples_to_jsonl(ex.iter().map(|e| (e, None)));
        let back: Vec<_> = io::parse_examples(Path::new(HERE), &text).unwrap().into_iter().map(|l| l.example).collect();
        prop_assert_eq!(&back, &ex);
        prop_assert_eq!(io::examples_to_jsonl(back.iter().map(|e| (e, None))), text);
    }
}
