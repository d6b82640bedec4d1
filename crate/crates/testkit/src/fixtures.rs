//! Synthetic multi-image QA corpora with gold answers computed directly
//! from the scene graphs.

use clfkit_core::clf::{
    ClfStep, GoldProgram, OlfOp, OlfProgram, OlfStep, OperationTag as Op, Qualifier as Q,
};
use clfkit_core::scene::{graph_map, GraphMap, ObjectNode, QaExample, SceneGraph};
use clfkit_core::testgen::templates;
use clfkit_core::ClfProgram;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

pub const ITEMS: &[&str] = &["bottle", "cup", "dog", "chair", "book"];
pub const COLORS: &[&str] = &["red", "blue", "green", "white"];

#[derive(Debug, Clone)]
pub struct Corpus {
    pub graphs: GraphMap,
    pub examples: Vec<QaExample>,
}

impl Corpus {
    pub fn by_template(&self, t: &str) -> impl Iterator<Item = &QaExample> {
        let t = t.to_string();
        self.examples
            .iter()
            .filter(move |e| e.template_id.as_deref() == Some(t.as_str()))
    }
}

fn pool_graph<R: Rng>(rng: &mut R, id: &str) -> SceneGraph {
    let mut objects = Vec::new();
    let tables = rng.random_range(0..=1);
    for t in 0..tables {
        objects
            .push(ObjectNode::new(&format!("{id}t{t}"), "table", ["wooden"], Vec::new()).unwrap());
    }
    let mut n = 0;
    for item in ITEMS {
        // Skewed towards zero so that distractors are plentiful.
        let c = [0, 0, 0, 1, 1, 2, 2, 3][rng.random_range(0..8)];
        for _ in 0..c {
            let color = *COLORS.choose(rng).unwrap();
            let rels = if tables > 0 && rng.random_bool(0.5) {
                vec![("on".to_string(), format!("{id}t0"))]
            } else {
                Vec::new()
            };
            objects.push(ObjectNode::new(&format!("{id}o{n}"), item, [color], rels).unwrap());
            n += 1;
        }
    }
    objects.shuffle(rng);
    SceneGraph::new(id, objects).unwrap()
}

fn count_named(g: &SceneGraph, name: &str) -> usize {
    g.objects().iter().filter(|o| o.name == name).count()
}

fn count_on_table(g: &SceneGraph, name: &str) -> usize {
    g.objects()
        .iter()
        .filter(|o| o.name == name)
        .filter(|o| {
            o.relations
                .iter()
                .any(|r| r.predicate == "on" && g.get(&r.target).is_some_and(|t| t.name == "table"))
        })
        .count()
}

fn plural(name: &str) -> String {
    format!("{name}s")
}

pub fn count_group_by_program(name: &str, q: Q, n: u32) -> ClfProgram {
    ClfProgram::new(vec![
        ClfStep::new(Op::Find).arg(name),
        ClfStep::new(Op::GroupByImages).dep(0),
        ClfStep::qualified(Op::KeepIfValuesCount, q).arg(n).dep(1),
        ClfStep::new(Op::Keys).dep(2),
        ClfStep::new(Op::Count).dep(3),
    ])
    .unwrap()
}

pub fn verify_count_group_by_program(name: &str, n: u32) -> ClfProgram {
    let mut steps = count_group_by_program(name, Q::Eq, n).into_steps();
    steps.push(ClfStep::qualified(Op::Compare, Q::Geq).dep(4).arg(1u32));
    ClfProgram::new(steps).unwrap()
}

pub fn verify_count_program(name: &str, n: u32) -> ClfProgram {
    ClfProgram::new(vec![
        ClfStep::new(Op::Find).arg(name),
        ClfStep::new(Op::Find).arg("table"),
        ClfStep::qualified(Op::Filter, Q::Rel)
            .arg("on")
            .dep(0)
            .dep(1),
        ClfStep::new(Op::Count).dep(2),
        ClfStep::qualified(Op::Compare, Q::Geq).dep(3).arg(n),
    ])
    .unwrap()
}

/// Quantifier forms: `some`, `no` and `all`.
pub fn quantifier_program(form: &str, name: &str, color: &str) -> ClfProgram {
    let head = vec![
        ClfStep::new(Op::Find).arg(name),
        ClfStep::new(Op::GroupByImages).dep(0),
    ];
    let exists_sub = vec![
        ClfStep::new(Op::Scene),
        ClfStep::qualified(Op::Filter, Q::Attr).arg(color).dep(0),
        ClfStep::new(Op::Exists).dep(1),
    ];
    let mut steps = head;
    match form {
        "some" => steps.push(ClfStep::qualified(Op::Map, Q::Or).dep(1).sub(exists_sub)),
        "no" => {
            steps.push(ClfStep::qualified(Op::Map, Q::Or).dep(1).sub(exists_sub));
            steps.push(ClfStep::new(Op::LogicNot).dep(2));
        }
        _ => steps.push(ClfStep::qualified(Op::Map, Q::And).dep(1).sub(vec![
            ClfStep::new(Op::Scene),
            ClfStep::qualified(Op::Filter, Q::Attr).arg(color).dep(0),
            ClfStep::new(Op::Count).dep(1),
            ClfStep::new(Op::Count).dep(0),
            ClfStep::qualified(Op::Compare, Q::Eq).dep(2).dep(3),
        ])),
    }
    ClfProgram::new(steps).unwrap()
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// A pool of graphs plus `per_template` examples of each of CountGroupBy and
/// VerifyCountGroupBy (2 to 5 images each), and smaller VerifyCount and
/// Quantifier sets.
pub fn covr_corpus(seed: u64, per_template: usize) -> Corpus {
    let mut rng = clfkit_core::seed::stream(seed, "covr-corpus", 0);
    let pool: Vec<SceneGraph> = (0..160)
        .map(|i| pool_graph(&mut rng, &format!("g{i:03}")))
        .collect();
    let mut examples = Vec::new();
    let pick_images = |rng: &mut rand_chacha::ChaCha8Rng, lo: usize, hi: usize| {
        let k = rng.random_range(lo..=hi);
        let mut idx: Vec<usize> = rand::seq::index::sample(rng, pool.len(), k).into_vec();
        idx.sort_unstable();
        idx
    };

    for i in 0..per_template {
        let imgs = pick_images(&mut rng, 2, 5);
        let name = *ITEMS.choose(&mut rng).unwrap();
        let n = rng.random_range(1..=3u32);
        let (q, word) = if rng.random_bool(0.5) {
            (Q::Eq, "exactly")
        } else {
            (Q::Geq, "at least")
        };
        let hits = imgs
            .iter()
            .filter(|&&g| {
                let c = count_named(&pool[g], name) as u32;
                if q == Q::Eq {
                    c == n
                } else {
                    c >= n
                }
            })
            .count();
        let ids = imgs
            .iter()
            .map(|&g| pool[g].image_id().to_string())
            .collect();
        examples.push(
            QaExample::new(
                format!("cgb{i:03}"),
                format!("How many images have {word} {n} {}?", plural(name)),
                ids,
                &hits.to_string(),
            )
            .with_program(GoldProgram::Clf(count_group_by_program(name, q, n)))
            .with_template(templates::COUNT_GROUP_BY),
        );
    }

    for i in 0..per_template {
        let imgs = pick_images(&mut rng, 2, 5);
        let name = *ITEMS.choose(&mut rng).unwrap();
        let n = rng.random_range(1..=3u32);
        let any = imgs
            .iter()
            .any(|&g| count_named(&pool[g], name) as u32 == n);
        let ids = imgs
            .iter()
            .map(|&g| pool[g].image_id().to_string())
            .collect();
        examples.push(
            QaExample::new(
                format!("vcgb{i:03}"),
                format!(
                    "Is it true that at least one image has exactly {n} {}?",
                    plural(name)
                ),
                ids,
                yes_no(any),
            )
            .with_program(GoldProgram::Clf(verify_count_group_by_program(name, n)))
            .with_template(templates::VERIFY_COUNT_GROUP_BY),
        );
    }

    for i in 0..per_template / 4 {
        let imgs = pick_images(&mut rng, 1, 3);
        let name = *ITEMS.choose(&mut rng).unwrap();
        let n = rng.random_range(1..=3u32);
        let total: usize = imgs.iter().map(|&g| count_on_table(&pool[g], name)).sum();
        let ids = imgs
            .iter()
            .map(|&g| pool[g].image_id().to_string())
            .collect();
        examples.push(
            QaExample::new(
                format!("vc{i:03}"),
                format!("Are there at least {n} {} on a table?", plural(name)),
                ids,
                yes_no(total as u32 >= n),
            )
            .with_program(GoldProgram::Clf(verify_count_program(name, n)))
            .with_template(templates::VERIFY_COUNT),
        );
    }

    for i in 0..per_template / 3 {
        let imgs = pick_images(&mut rng, 2, 4);
        let name = *ITEMS.choose(&mut rng).unwrap();
        let color = *COLORS.choose(&mut rng).unwrap();
        let form = *["some", "no", "all"].choose(&mut rng).unwrap();
        let objs = || {
            imgs.iter()
                .flat_map(|&g| pool[g].objects().iter())
                .filter(|o| o.name == name)
        };
        let any = objs().any(|o| o.has_attribute(color));
        let all = objs().all(|o| o.has_attribute(color));
        let (question, answer) = match form {
            "some" => (format!("Do some images contain a {color} {name}?"), any),
            "no" => (format!("Do no images contain a {color} {name}?"), !any),
            _ => (format!("Are all {} {color}?", plural(name)), all),
        };
        let ids = imgs
            .iter()
            .map(|&g| pool[g].image_id().to_string())
            .collect();
        examples.push(
            QaExample::new(format!("qt{i:03}"), question, ids, yes_no(answer))
                .with_program(GoldProgram::Clf(quantifier_program(form, name, color)))
                .with_template(templates::QUANTIFIER),
        );
    }

    Corpus {
        graphs: graph_map(pool),
        examples,
    }
}

/// Mention to the node name used in the graphs.
pub const RENAMES: &[(&str, &str)] = &[
    ("bird", "parrot"),
    ("cup", "mug"),
    ("sofa", "couch"),
    ("man", "person"),
    ("car", "sedan"),
    ("kid", "child"),
];

/// Graphs name objects differently from the questions. `train` carries
/// object-grounded programs for building the dictionary; `test` asks for the
/// color of the single renamed object.
#[derive(Debug, Clone)]
pub struct AliasCorpus {
    pub graphs: GraphMap,
    pub train: Vec<QaExample>,
    pub test: Vec<QaExample>,
}

pub fn alias_corpus(seed: u64, n: usize) -> AliasCorpus {
    let mut rng = clfkit_core::seed::stream(seed, "alias-corpus", 0);
    let mut graphs = Vec::new();
    let mut train = Vec::new();
    let mut test = Vec::new();
    for i in 0..n {
        let (mention, node_name) = RENAMES[i % RENAMES.len()];
        let color = *COLORS.choose(&mut rng).unwrap();
        let id = format!("a{i:03}");
        let mut objects = vec![
            ObjectNode::new(&format!("{id}x"), node_name, [color], Vec::new()).unwrap(),
            ObjectNode::new(&format!("{id}y"), "table", ["wooden"], Vec::new()).unwrap(),
        ];
        objects.shuffle(&mut rng);
        graphs.push(SceneGraph::new(id.clone(), objects).unwrap());

        let grounded = ClfProgram::new(vec![
            ClfStep::new(Op::Find).arg(format!("{mention}({id}x)").as_str()),
            ClfStep::new(Op::Exists).dep(0),
        ])
        .unwrap();
        train.push(
            QaExample::new(
                format!("atr{i:03}"),
                format!("Is there a {mention}?"),
                vec![id.clone()],
                "yes",
            )
            .with_program(GoldProgram::Clf(grounded)),
        );
        let ask = ClfProgram::new(vec![
            ClfStep::new(Op::Find).arg(mention),
            ClfStep::qualified(Op::Query, Q::Attr).arg("color").dep(0),
        ])
        .unwrap();
        test.push(
            QaExample::new(
                format!("ate{i:03}"),
                format!("What color is the {mention}?"),
                vec![id],
                color,
            )
            .with_program(GoldProgram::Clf(ask)),
        );
    }
    AliasCorpus {
        graphs: graph_map(graphs),
        train,
        test,
    }
}

/// Hand-written OLF programs that together use every documented operation.
pub fn olf_corpus() -> Vec<OlfProgram> {
    use OlfOp::*;
    let s = OlfStep::new;
    let quant = |op: OlfOp| {
        OlfProgram::new(vec![
            s(Find).arg("bottle"),
            s(GroupByImages).dep(0),
            s(op).dep(1).sub(vec![
                s(Scene),
                s(Filter).arg("red").dep(0),
                s(Exists).dep(1),
            ]),
        ])
    };
    let keep = |op: OlfOp, cmp: OlfOp| {
        OlfProgram::new(vec![
            s(Find).arg("cup"),
            s(GroupByImages).dep(0),
            s(op).arg(2u32).dep(1),
            s(Keys).dep(2),
            s(Count).dep(3),
            s(cmp).arg(1u32).dep(4),
        ])
    };
    vec![
        quant(Some),
        quant(All),
        quant(None),
        OlfProgram::new(vec![
            s(Find).arg("child"),
            s(Unique).dep(0),
            s(ChooseName).arg("boy").arg("girl").dep(1),
        ]),
        OlfProgram::new(vec![
            s(Find).arg("child"),
            s(AssertUnique).dep(0),
            s(ChooseAttr).arg("red").arg("blue").dep(1),
        ]),
        OlfProgram::new(vec![
            s(Find).arg("child"),
            s(Find).arg("tree"),
            s(ChooseRelation).arg("near").arg("on").dep(0).dep(1),
        ]),
        OlfProgram::new(vec![
            s(Find).arg("cup"),
            s(Find).arg("table"),
            s(RelationBetweenNouns).arg("on").arg("under").dep(0).dep(1),
        ]),
        OlfProgram::new(vec![s(Find).arg("dog"), s(QueryName).dep(0)]),
        OlfProgram::new(vec![s(Find).arg("dog"), s(QueryAttr).arg("color").dep(0)]),
        OlfProgram::new(vec![s(Find).arg("dog"), s(VerifyAttr).arg("black").dep(0)]),
        OlfProgram::new(vec![
            s(Find).arg("cup"),
            s(Find).arg("table"),
            s(WithRelation).arg("on").dep(0).dep(1),
            s(Count).dep(2),
        ]),
        OlfProgram::new(vec![
            s(Find).arg("man"),
            s(Find).arg("cup"),
            s(WithRelationObject).arg("holding").dep(0).dep(1),
            s(Exists).dep(2),
        ]),
        OlfProgram::new(vec![
            s(Scene),
            s(Filter).arg("red").dep(0),
            s(UniqueImages).dep(1),
            s(Count).dep(2),
        ]),
        keep(KeepIfValuesCountEq, Eq),
        keep(KeepIfValuesCountGeq, Geq),
        keep(KeepIfValuesCountLeq, Leq),
        keep(KeepIfValuesCountEq, Lt),
        keep(KeepIfValuesCountGeq, Gt),
        OlfProgram::new(vec![
            s(Find).arg("cup"),
            s(Exists).dep(0),
            s(Find).arg("dog"),
            s(Exists).dep(2),
            s(LogicOr).dep(1).dep(3),
            s(LogicAnd).dep(4).dep(1),
        ]),
    ]
}
