use std::sync::Arc;

use clfkit_core::clf::{ClfStep, OperationTag as Op, Qualifier as Q};
use clfkit_core::exec::{
    execute_batch, normalize_answer, BatchItem, ExecOptions, GraphSource, NonAnswerValue,
    ValueSummary,
};
use clfkit_core::scene::{graph_map, ImageSet, ObjectNode, SceneGraph};
use clfkit_core::{execute, ClfProgram, GrammarEventKind as K, Value};
use clfkit_testkit::fixtures::covr_corpus;
use clfkit_testkit::gen::{random_graph, random_image_set, ATTRS, NAMES, PREDICATES};
use clfkit_testkit::oracle_execute;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn node(id: &str, name: &str, attrs: &[&str]) -> ObjectNode {
    ObjectNode::new(id, name, attrs.iter().copied(), Vec::new()).unwrap()
}

fn one(graph: SceneGraph) -> ImageSet {
    ImageSet::single(graph)
}

fn program(steps: Vec<ClfStep>) -> ClfProgram {
    ClfProgram::new(steps).unwrap()
}

#[test]
fn first_of_several_boys_is_verified() {
    let g = SceneGraph::new(
        "img",
        vec![
            node("o1", "boy", &["hat"]),
            node("o2", "girl", &[]),
            node("o3", "boy", &[]),
        ],
    )
    .unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("boy"),
        ClfStep::qualified(Op::Verify, Q::Attr).arg("hat").dep(0),
    ]);
    let out = execute(&p, &one(g), None).unwrap();
    assert_eq!(out.answer.as_deref(), Some("yes"));
    assert_eq!(out.event_kinds(), vec![K::NonUniqueAutoFix]);
    assert_eq!(out.events[0].step_index, 1);
}

#[test]
fn mattress_without_alias_is_fatal() {
    let g = SceneGraph::new("img", vec![node("o1", "bed", &["white"])]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("mattress"),
        ClfStep::qualified(Op::Query, Q::Attr).arg("color").dep(0),
    ]);
    let out = execute(&p, &one(g), None).unwrap();
    assert!(out.fatal);
    assert_eq!(out.answer, None);
    assert_eq!(out.event_kinds(), vec![K::ObjectNotFound]);
}

#[test]
fn three_bottles_counted() {
    let g = SceneGraph::new(
        "img",
        vec![
            node("b1", "bottle", &["green"]),
            node("c1", "cup", &[]),
            node("b2", "bottle", &[]),
            node("b3", "bottle", &["red"]),
        ],
    )
    .unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("bottle"),
        ClfStep::new(Op::Count).dep(0),
    ]);
    let images = one(g);
    let want = oracle_execute(&p, &images, None).unwrap().answer;
    let got = execute(&p, &images, None).unwrap();
    assert_eq!(got.answer, want);
    assert_eq!(got.answer.as_deref(), Some("3"));
}

#[test]
fn compare_defaults_missing_operand_to_zero() {
    let g = SceneGraph::new("img", vec![node("b1", "bottle", &[])]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("jar"),
        ClfStep::new(Op::Count).dep(0),
        ClfStep::qualified(Op::Compare, Q::Geq).arg(2u32),
    ]);
    let out = execute(&p, &one(g), None).unwrap();
    assert_eq!(out.answer.as_deref(), Some("no"));
    assert_eq!(out.event_kinds(), vec![K::DefaultValueInserted]);
    assert_eq!(out.events[0].step_index, 2);
}

#[test]
fn logic_defaults_to_false() {
    let g = SceneGraph::new("img", vec![node("b1", "bottle", &[])]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("bottle"),
        ClfStep::new(Op::Exists).dep(0),
        ClfStep::new(Op::LogicAnd).dep(1),
    ]);
    let out = execute(&p, &one(g), None).unwrap();
    assert_eq!(out.answer.as_deref(), Some("no"));
    assert_eq!(out.event_kinds(), vec![K::DefaultValueInserted]);
}

#[test]
fn choose_resolutions() {
    let g = SceneGraph::new("img", vec![node("o1", "cup", &["red", "metal"])]).unwrap();
    let images = one(g);
    let run = |a: &str, b: &str| {
        let p = program(vec![
            ClfStep::new(Op::Find).arg("cup"),
            ClfStep::qualified(Op::Choose, Q::Attr).arg(a).arg(b).dep(0),
        ]);
        execute(&p, &images, None).unwrap()
    };
    let o = run("blue", "red");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some("red"), vec![])
    );
    let o = run("metal", "red");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some("metal"), vec![K::NonUniqueAutoFix])
    );
    let o = run("blue", "green");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some("blue"), vec![K::DefaultValueInserted])
    );
}

#[test]
fn query_attribute_kinds() {
    let g = SceneGraph::new("img", vec![node("o1", "cup", &["large", "red", "blue"])]).unwrap();
    let images = one(g);
    let run = |kind: &str| {
        let p = program(vec![
            ClfStep::new(Op::Find).arg("cup"),
            ClfStep::qualified(Op::Query, Q::Attr).arg(kind).dep(0),
        ]);
        execute(&p, &images, None).unwrap()
    };
    let o = run("size");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some("large"), vec![])
    );
    let o = run("color");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some("red"), vec![K::NonUniqueAutoFix])
    );
    let o = run("material");
    assert_eq!(
        (o.answer.as_deref(), o.event_kinds()),
        (Some(""), vec![K::DefaultValueInserted])
    );
}

#[test]
fn empty_sets_flow_through_set_operations() {
    let g = SceneGraph::new("img", vec![node("o1", "cup", &[])]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("unicorn"),
        ClfStep::qualified(Op::Filter, Q::Attr).arg("red").dep(0),
        ClfStep::new(Op::Exists).dep(1),
    ]);
    let out = execute(&p, &one(g), None).unwrap();
    assert_eq!(out.answer.as_deref(), Some("no"));
    assert!(out.events.is_empty() && !out.fatal);
}

#[test]
fn empty_quantifiers() {
    let g = SceneGraph::new("img", vec![node("o1", "cup", &[])]).unwrap();
    let images = one(g);
    for (q, want) in [(Q::Or, "no"), (Q::And, "yes")] {
        let p = program(vec![
            ClfStep::new(Op::Find).arg("cup"),
            ClfStep::new(Op::GroupByImages).dep(0),
            ClfStep::qualified(Op::KeepIfValuesCount, Q::Geq)
                .arg(5u32)
                .dep(1),
            ClfStep::qualified(Op::Map, q).dep(2).sub(vec![
                ClfStep::new(Op::Scene),
                ClfStep::new(Op::Exists).dep(0),
            ]),
        ]);
        assert_eq!(
            execute(&p, &images, None).unwrap().answer.as_deref(),
            Some(want)
        );
    }
}

#[test]
fn group_by_keeps_empty_images() {
    let a = SceneGraph::new("a", vec![node("o1", "cup", &[])]).unwrap();
    let b = SceneGraph::new("b", vec![node("o1", "dog", &[])]).unwrap();
    let images = ImageSet::new(vec![Arc::new(a), Arc::new(b)]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("cup"),
        ClfStep::new(Op::GroupByImages).dep(0),
        ClfStep::qualified(Op::KeepIfValuesCount, Q::Eq)
            .arg(0u32)
            .dep(1),
        ClfStep::new(Op::Keys).dep(2),
        ClfStep::new(Op::Count).dep(3),
    ]);
    let out = execute(&p, &images, None).unwrap();
    assert_eq!(out.answer.as_deref(), Some("1"));
    assert_eq!(
        out.trace[1].value,
        ValueSummary::Groups(vec![("a".into(), 1), ("b".into(), 0)])
    );
}

#[test]
fn fatal_inside_map_stops_the_run() {
    let a = SceneGraph::new("a", vec![node("o1", "cup", &["red"])]).unwrap();
    let b = SceneGraph::new("b", vec![node("o1", "dog", &[])]).unwrap();
    let images = ImageSet::new(vec![Arc::new(a), Arc::new(b)]).unwrap();
    let p = program(vec![
        ClfStep::new(Op::Find).arg("cup"),
        ClfStep::new(Op::GroupByImages).dep(0),
        ClfStep::qualified(Op::Map, Q::And).dep(1).sub(vec![
            ClfStep::new(Op::Scene),
            ClfStep::qualified(Op::Verify, Q::Attr).arg("red").dep(0),
        ]),
    ]);
    let out = execute(&p, &images, None).unwrap();
    assert!(out.fatal);
    assert_eq!(out.event_kinds(), vec![K::ObjectNotFound]);
    assert_eq!(out.events[0].step_index, 2);
    assert_eq!(out.events[0].path.to_string(), "2.sub.1");
}

#[test]
fn answers_normalize() {
    assert_eq!(normalize_answer(&Value::Boolean(true)).unwrap(), "yes");
    assert_eq!(normalize_answer(&Value::Integer(0)).unwrap(), "0");
    assert_eq!(
        normalize_answer(&Value::Str("Parrot".into())).unwrap(),
        "parrot"
    );
    assert!(matches!(
        normalize_answer(&Value::Tokens(vec![])),
        Err(NonAnswerValue(_))
    ));
}

#[test]
fn batch_on_gold_and_corrupted_graphs() {
    let gold = graph_map([
        SceneGraph::new("i1", vec![node("o1", "bottle", &["green"])]).unwrap(),
        SceneGraph::new(
            "i2",
            vec![node("o1", "bottle", &["red"]), node("o2", "bottle", &[])],
        )
        .unwrap(),
    ]);
    let corrupted = graph_map([
        SceneGraph::new("i1", vec![node("o1", "jar", &["green"])]).unwrap(),
        SceneGraph::new(
            "i2",
            vec![node("o1", "jar", &["red"]), node("o2", "jar", &[])],
        )
        .unwrap(),
    ]);
    let p = program(vec![
        ClfStep::new(Op::Find).arg("bottle"),
        ClfStep::qualified(Op::Query, Q::Attr).arg("color").dep(0),
    ]);
    let items = vec![
        BatchItem {
            example_id: "e1".into(),
            image_ids: vec!["i1".into()],
            program: Ok(p.clone()),
        },
        BatchItem {
            example_id: "e2".into(),
            image_ids: vec!["i2".into()],
            program: Ok(p),
        },
    ];
    let out = execute_batch(
        &items,
        &gold,
        GraphSource::Gold,
        None,
        ExecOptions::default(),
    );
    let answers: Vec<_> = out
        .iter()
        .map(|o| o.result.as_ref().unwrap().answer.clone())
        .collect();
    assert_eq!(answers, vec![Some("green".into()), Some("red".into())]);
    let out = execute_batch(
        &items,
        &corrupted,
        GraphSource::Generated,
        None,
        ExecOptions::default(),
    );
    assert!(out.iter().all(|o| o.result.as_ref().unwrap().fatal));
    assert!(execute_batch(&[], &gold, GraphSource::Gold, None, ExecOptions::default()).is_empty());
}

#[test]
fn missing_graph_is_per_item() {
    let gold = graph_map([SceneGraph::new("i1", vec![node("o1", "cup", &[])]).unwrap()]);
    let p = program(vec![
        ClfStep::new(Op::Scene),
        ClfStep::new(Op::Count).dep(0),
    ]);
    let items = vec![
        BatchItem {
            example_id: "a".into(),
            image_ids: vec!["nope".into()],
            program: Ok(p.clone()),
        },
        BatchItem {
            example_id: "b".into(),
            image_ids: vec!["i1".into()],
            program: Ok(p),
        },
    ];
    let out = execute_batch(
        &items,
        &gold,
        GraphSource::Gold,
        None,
        ExecOptions::default(),
    );
    assert!(out[0].result.is_err());
    assert_eq!(out[1].result.as_ref().unwrap().answer.as_deref(), Some("1"));
}

#[test]
fn gold_programs_reproduce_corpus_answers() {
    let c = covr_corpus(11, 60);
    for ex in &c.examples {
        let images = ImageSet::resolve(&ex.image_ids, &c.graphs).unwrap();
        let out = execute(&ex.clf_program().unwrap().unwrap(), &images, None).unwrap();
        assert_eq!(
            out.answer.as_deref(),
            Some(ex.gold_answer.as_str()),
            "{}",
            ex.example_id
        );
    }
}

fn set_program(seed: u64) -> (Vec<ClfStep>, usize) {
    // find(name) optionally filtered; returns steps and the index of the set.
    let name = NAMES[(seed % NAMES.len() as u64) as usize];
    let mut steps = vec![ClfStep::new(Op::Find).arg(name)];
    if seed.is_multiple_of(3) {
        steps.push(
            ClfStep::qualified(Op::Filter, Q::Attr)
                .arg(ATTRS[(seed % 7) as usize])
                .dep(0),
        );
    }
    let i = steps.len() - 1;
    (steps, i)
}

fn answer(steps: Vec<ClfStep>, images: &ImageSet) -> String {
    execute(&program(steps), images, None)
        .unwrap()
        .answer
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn filters_never_grow_sets(seed in any::<u64>(), which in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = random_image_set(&mut rng);
        let (mut steps, s) = set_program(seed);
        let f = match which {
            0 => ClfStep::qualified(Op::Filter, Q::Attr).arg(ATTRS[(seed % 8) as usize]).dep(s),
            1 => ClfStep::qualified(Op::Filter, Q::Rel).arg(PREDICATES[(seed % 3) as usize]).dep(s),
            _ => ClfStep::qualified(Op::Filter, Q::Rel).arg(PREDICATES[(seed % 3) as usize]).dep(s).dep(0),
        };
        steps.push(f);
        let f = steps.len() - 1;
        // |S \ F| + |F| == |S|  and  |F ∩ S| == |F|
        let mut whole = steps.clone();
        whole.push(ClfStep::new(Op::Count).dep(s));
        let mut part = steps.clone();
        part.push(ClfStep::new(Op::Count).dep(f));
        let mut inter = steps;
        inter.push(ClfStep::new(Op::Find).arg(NAMES[(seed % NAMES.len() as u64) as usize]).dep(f));
        inter.push(ClfStep::new(Op::Count).dep(f + 1));
        let (w, p, i) = (answer(whole, &images), answer(part, &images), answer(inter, &images));
        prop_assert!(p.parse::<u32>().unwrap() <= w.parse::<u32>().unwrap());
        prop_assert_eq!(i, p);
    }

    #[test]
    fn group_by_partitions_and_counts(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = random_image_set(&mut rng);
        let (steps, s) = set_program(seed);
        let mut p = steps.clone();
        p.push(ClfStep::new(Op::GroupByImages).dep(s));
        let out = execute(&program({ let mut q = p.clone(); q.push(ClfStep::new(Op::Keys).dep(s + 1)); q.push(ClfStep::new(Op::Count).dep(s + 2)); q }), &images, None).unwrap();
        prop_assert_eq!(out.answer.unwrap(), images.len().to_string());
        let ValueSummary::Groups(groups) = &out.trace[s + 1].value else { panic!() };
        let ValueSummary::Objects(members) = &out.trace[s].value else { panic!() };
        let total: usize = groups.iter().map(|(_, n)| n).sum();
        prop_assert_eq!(total, members.len());
        let ids: Vec<_> = groups.iter().map(|(id, _)| id.clone()).collect();
        prop_assert_eq!(ids, images.image_ids());
        for (id, n) in groups {
            prop_assert_eq!(*n, members.iter().filter(|(i, _)| i == id).count());
        }
    }

    #[test]
    fn quantifier_duality(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let images = random_image_set(&mut rng);
        let attr = ATTRS[(seed % 8) as usize];
        let (mut head, s) = set_program(seed / 7);
        head.push(ClfStep::new(Op::GroupByImages).dep(s));
        let g = head.len() - 1;
        let sub = || vec![
            ClfStep::new(Op::Scene),
            ClfStep::qualified(Op::Filter, Q::Attr).arg(attr).dep(0),
            ClfStep::new(Op::Exists).dep(1),
        ];
        let mut neg_sub = sub();
        neg_sub.push(ClfStep::new(Op::LogicNot).dep(2));

        let with = |tail: Vec<ClfStep>| { let mut p = head.clone(); p.extend(tail); answer(p, &images) };
        let or = with(vec![ClfStep::qualified(Op::Map, Q::Or).dep(g).sub(sub())]);
        let not_or = with(vec![ClfStep::qualified(Op::Map, Q::Or).dep(g).sub(sub()), ClfStep::new(Op::LogicNot).dep(g + 1)]);
        prop_assert_ne!(&or, &not_or);
        let and = with(vec![ClfStep::qualified(Op::Map, Q::And).dep(g).sub(sub())]);
        let de_morgan = with(vec![ClfStep::qualified(Op::Map, Q::Or).dep(g).sub(neg_sub), ClfStep::new(Op::LogicNot).dep(g + 1)]);
        prop_assert_eq!(and, de_morgan);
    }

    #[test]
    fn execution_is_deterministic(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_graph(&mut rng, "x");
        let images = one(g);
        let (mut steps, s) = set_program(seed);
        steps.push(ClfStep::qualified(Op::Query, Q::Name).dep(s));
        let p = program(steps);
        prop_assert_eq!(execute(&p, &images, None).unwrap(), execute(&p, &images, None).unwrap());
    }
}
