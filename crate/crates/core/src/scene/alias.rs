use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::example::QaExample;
use super::graph::{GraphMap, ObjectNode, SceneGraph};
use crate::token;

/// Maps a program mention ("bird") to the scene-graph names it grounded to
/// during training ("parrot"), with observation counts.
///
/// Each list is kept sorted by descending count, then by name, so
/// resolution order does not depend on insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AliasDictionary {
    entries: BTreeMap<String, Vec<(String, u32)>>,
}

impl AliasDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds from raw entries, merging duplicates and restoring order.
    /// Zero counts and blank tokens are dropped.
    pub fn from_entries<I>(entries: I) -> Self
    where
        I: IntoIterator<Item = (String, Vec<(String, u32)>)>,
    {
        let mut d = Self::new();
        for (mention, names) in entries {
            for (name, count) in names {
                if count > 0 {
                    d.observe_n(&mention, &name, count);
                }
            }
        }
        d
    }

    pub fn observe(&mut self, mention: &str, name: &str) {
        self.observe_n(mention, name, 1);
    }

    pub fn observe_n(&mut self, mention: &str, name: &str, n: u32) {
        let (Ok(mention), Ok(name)) = (token::normalize(mention), token::normalize(name)) else {
            return;
        };
        let list = self.entries.entry(mention).or_default();
        match list.iter_mut().find(|(n, _)| *n == name) {
            Some((_, c)) => *c = c.saturating_add(n),
            None => list.push((name, n)),
        }
        list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    }

    /// Aliases for `mention` in resolution order.
    pub fn aliases(&self, mention: &str) -> &[(String, u32)] {
        self.entries.get(mention).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn count(&self, mention: &str, name: &str) -> u32 {
        self.aliases(mention)
            .iter()
            .find(|(n, _)| n == name)
            .map_or(0, |(_, c)| *c)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<(String, u32)>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when `name` is `mention` itself or one of its aliases.
    pub fn matches(dict: Option<&Self>, mention: &str, name: &str) -> bool {
        mention == name || dict.is_some_and(|d| d.count(mention, name) > 0)
    }
}

/// Positions (graph order) of the nodes `mention` refers to in `graph`.
///
/// Exact name matches win outright. Only when there are none are the
/// dictionary aliases tried, one hop, in dictionary order.
pub fn resolve_positions(
    dict: Option<&AliasDictionary>,
    mention: &str,
    graph: &SceneGraph,
) -> Vec<usize> {
    fn by_name<'a>(graph: &'a SceneGraph, name: &'a str) -> impl Iterator<Item = usize> + 'a {
        graph
            .objects()
            .iter()
            .enumerate()
            .filter(move |(_, o)| o.name == name)
            .map(|(i, _)| i)
    }
    let exact: Vec<usize> = by_name(graph, mention).collect();
    if !exact.is_empty() {
        return exact;
    }
    let Some(dict) = dict else {
        return exact;
    };
    let mut out = Vec::new();
    for (alias, _) in dict.aliases(mention) {
        if alias != mention {
            out.extend(by_name(graph, alias));
        }
    }
    out
}

pub fn resolve_name<'g>(
    dict: &AliasDictionary,
    mention: &str,
    graph: &'g SceneGraph,
) -> Vec<&'g ObjectNode> {
    resolve_positions(Some(dict), mention, graph)
        .into_iter()
        .map(|i| &graph.objects()[i])
        .collect()
}

/// Sidecar grounding for a mention when programs carry no embedded ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grounding {
    pub mention: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_id: Option<String>,
    pub object_id: String,
}

/// Example id to its mention groundings.
pub type Alignments = BTreeMap<String, Vec<Grounding>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UngroundableMention {
    pub example_id: String,
    pub mention: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct AliasBuild {
    pub dictionary: AliasDictionary,
    pub ungroundable: Vec<UngroundableMention>,
}

/// Splits a GQA-style grounded mention, `bird(775)` or `bird (775)`.
pub fn split_grounded(mention: &str) -> Option<(&str, &str)> {
    let m = mention.trim();
    let body = m.strip_suffix(')')?;
    let open = body.rfind('(')?;
    let (name, id) = (body[..open].trim(), body[open + 1..].trim());
    (!name.is_empty() && !id.is_empty()).then_some((name, id))
}

/// Builds the alias dictionary from training examples whose gold programs
/// embed object ids in `find` mentions, or from `alignments`.
///
/// Mentions that cannot be grounded are collected in the returned report.
pub fn build_alias_dictionary(
    train: &[QaExample],
    graphs: &GraphMap,
    alignments: Option<&Alignments>,
) -> AliasBuild {
    let mut build = AliasBuild::default();
    for ex in train {
        let mut groundings: Vec<Grounding> = Vec::new();
        let mut bare: Vec<String> = Vec::new();
        if let Some(p) = &ex.gold_program {
            for m in p.find_mentions() {
                match split_grounded(&m) {
                    Some((name, id)) => groundings.push(Grounding {
                        mention: name.into(),
                        image_id: None,
                        object_id: id.into(),
                    }),
                    None => bare.push(m),
                }
            }
        }
        if let Some(side) = alignments.and_then(|a| a.get(&ex.example_id)) {
            groundings.extend(side.iter().cloned());
        }
        for m in bare {
            let m_norm = token::normalize_lossy(&m);
            if !groundings
                .iter()
                .any(|g| token::normalize_lossy(&g.mention) == m_norm)
            {
                build.ungroundable.push(UngroundableMention {
                    example_id: ex.example_id.clone(),
                    mention: m,
                    reason: "no grounding link".into(),
                });
            }
        }
        for g in groundings {
            match locate(ex, graphs, &g) {
                Some(node) => build.dictionary.observe(&g.mention, &node.name),
                None => build.ungroundable.push(UngroundableMention {
                    example_id: ex.example_id.clone(),
                    mention: g.mention.clone(),
                    reason: alloc::format!(
                        "object {} not found in the example's graphs",
                        g.object_id
                    ),
                }),
            }
        }
    }
    build
}

fn locate<'g>(ex: &QaExample, graphs: &'g GraphMap, g: &Grounding) -> Option<&'g ObjectNode> {
    ex.image_ids
        .iter()
        .filter(|id| g.image_id.as_ref().is_none_or(|want| want == *id))
        .filter_map(|id| graphs.get(id))
        .find_map(|graph| graph.get(&g.object_id))
}
