use clfkit_core::clf::{ClfStep, GoldProgram, OperationTag as Op};
use clfkit_core::scene::{
    build_alias_dictionary, graph_map, resolve_name, Alignments, Grounding, ImageSet,
    ImageSetError, ObjectNode, SceneError, SceneGraph,
};
use clfkit_core::{AliasDictionary, ClfProgram, QaExample};
use clfkit_testkit::fixtures::{alias_corpus, RENAMES};
use proptest::prelude::*;

fn node(id: &str, name: &str) -> ObjectNode {
    ObjectNode::new(id, name, Vec::<&str>::new(), Vec::new()).unwrap()
}

fn grounded(id: &str, image: &str, mentions: &[&str]) -> QaExample {
    let mut steps: Vec<ClfStep> = mentions
        .iter()
        .map(|m| ClfStep::new(Op::Find).arg(*m))
        .collect();
    steps.push(ClfStep::new(Op::Exists).dep(0));
    QaExample::new(id, "q", vec![image.into()], "yes")
        .with_program(GoldProgram::Clf(ClfProgram::new(steps).unwrap()))
}

#[test]
fn graph_invariants() {
    let dangling = ObjectNode::new(
        "o1",
        "cup",
        ["red"],
        vec![("on".to_string(), "o9".to_string())],
    )
    .unwrap();
    assert!(matches!(
        SceneGraph::new("i", vec![dangling]),
        Err(SceneError::DanglingRelation { .. })
    ));
    assert!(matches!(
        SceneGraph::new("i", vec![node("o1", "a"), node("o1", "b")]),
        Err(SceneError::DuplicateObjectId { .. })
    ));
    assert!(ObjectNode::new("o1", "  ", Vec::<&str>::new(), Vec::new()).is_err());
    let n = ObjectNode::new("o1", " Parrot ", ["Red", "red", "big"], Vec::new()).unwrap();
    assert_eq!(n.name, "parrot");
    assert_eq!(n.attributes, vec!["red", "big"]);
}

#[test]
fn image_set_bounds() {
    let g = |i: usize| std::sync::Arc::new(SceneGraph::new(format!("g{i}"), vec![]).unwrap());
    assert!(matches!(ImageSet::new(vec![]), Err(ImageSetError::Empty)));
    assert!(ImageSet::new((0..5).map(g).collect()).is_ok());
    assert!(matches!(
        ImageSet::new((0..6).map(g).collect()),
        Err(ImageSetError::TooMany(_))
    ));
    assert!(matches!(
        ImageSet::new(vec![g(1), g(1)]),
        Err(ImageSetError::DuplicateImage(_))
    ));
}

#[test]
fn bird_grounds_to_parrot() {
    let graphs =
        graph_map([SceneGraph::new("i1", vec![node("775", "parrot"), node("2", "dog")]).unwrap()]);
    let train = vec![grounded("t1", "i1", &["bird(775)", "dog(2)"])];
    let b = build_alias_dictionary(&train, &graphs, None);
    assert_eq!(b.dictionary.aliases("bird"), &[("parrot".to_string(), 1)]);
    assert_eq!(b.dictionary.aliases("dog"), &[("dog".to_string(), 1)]);
    assert!(b.ungroundable.is_empty());
}

#[test]
fn counts_order_resolution() {
    let graphs = graph_map([
        SceneGraph::new("i1", vec![node("p", "parrot")]).unwrap(),
        SceneGraph::new("i2", vec![node("e", "eagle")]).unwrap(),
    ]);
    let mut train: Vec<QaExample> = (0..3)
        .map(|k| grounded(&format!("p{k}"), "i1", &["bird(p)"]))
        .collect();
    train.push(grounded("e0", "i2", &["bird(e)"]));
    let d = build_alias_dictionary(&train, &graphs, None).dictionary;
    // Three parrot groundings and one eagle grounding, counted by hand.
    assert_eq!(
        d.aliases("bird"),
        &[("parrot".to_string(), 3), ("eagle".to_string(), 1)]
    );

    let both = SceneGraph::new("x", vec![node("a", "eagle"), node("b", "parrot")]).unwrap();
    let names: Vec<_> = resolve_name(&d, "bird", &both)
        .iter()
        .map(|n| n.name.clone())
        .collect();
    assert_eq!(names, vec!["parrot", "eagle"]);
}

#[test]
fn ungroundable_mentions_are_reported() {
    let graphs = graph_map([SceneGraph::new("i1", vec![node("1", "dog")]).unwrap()]);
    let train = vec![
        grounded("t1", "i1", &["cat"]),
        grounded("t2", "i1", &["dog(99)"]),
    ];
    let b = build_alias_dictionary(&train, &graphs, None);
    assert_eq!(b.ungroundable.len(), 2);
    assert!(b.dictionary.is_empty());
}

#[test]
fn sidecar_alignments() {
    let graphs = graph_map([SceneGraph::new("i1", vec![node("7", "couch")]).unwrap()]);
    let train = vec![grounded("t1", "i1", &["sofa"])];
    let mut al = Alignments::new();
    al.insert(
        "t1".into(),
        vec![Grounding {
            mention: "sofa".into(),
            image_id: Some("i1".into()),
            object_id: "7".into(),
        }],
    );
    let b = build_alias_dictionary(&train, &graphs, Some(&al));
    assert_eq!(b.dictionary.count("sofa", "couch"), 1);
    assert!(b.ungroundable.is_empty());
}

#[test]
fn exact_matches_are_never_mixed_with_aliases() {
    let mut d = AliasDictionary::new();
    d.observe("cat", "kitten");
    let g = SceneGraph::new(
        "x",
        vec![node("1", "kitten"), node("2", "cat"), node("3", "cat")],
    )
    .unwrap();
    let hits: Vec<_> = resolve_name(&d, "cat", &g)
        .iter()
        .map(|n| n.object_id.clone())
        .collect();
    assert_eq!(hits, vec!["2", "3"]);
}

#[test]
fn observed_pairs_resolve_at_test_time() {
    let c = alias_corpus(5, 24);
    let d = build_alias_dictionary(&c.train, &c.graphs, None).dictionary;
    for (mention, name) in RENAMES {
        let g = SceneGraph::new("t", vec![node("z", name)]).unwrap();
        assert_eq!(resolve_name(&d, mention, &g).len(), 1, "{mention}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn adding_training_data_is_monotone(split in 0usize..24, seed in any::<u64>()) {
        let c = alias_corpus(seed, 24);
        let small = build_alias_dictionary(&c.train[..split], &c.graphs, None).dictionary;
        let big = build_alias_dictionary(&c.train, &c.graphs, None).dictionary;
        for (mention, names) in small.iter() {
            for (name, count) in names {
                prop_assert!(big.count(mention, name) >= *count);
            }
        }
    }
}
