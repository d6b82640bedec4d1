//! Scene graphs, image sets, QA examples and the alias dictionary.

mod alias;
mod example;
mod graph;

pub use alias::{
    build_alias_dictionary, resolve_name, resolve_positions, split_grounded, AliasBuild,
    AliasDictionary, Alignments, Grounding, UngroundableMention,
};
pub use example::QaExample;
pub use graph::{
    graph_map, GraphMap, ImageSet, ImageSetError, ObjectNode, Relation, SceneError, SceneGraph,
    MAX_IMAGES,
};
