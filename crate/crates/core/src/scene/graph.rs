use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use thiserror::Error;

use crate::token::{self, EmptyToken};

/// Largest image set a query may carry.
pub const MAX_IMAGES: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SceneError {
    #[error("image {image_id}: duplicate object id {object_id}")]
    DuplicateObjectId { image_id: String, object_id: String },
    #[error("image {image_id}: object {object_id} relates to missing object {target}")]
    DanglingRelation {
        image_id: String,
        object_id: String,
        target: String,
    },
    #[error("image {image_id}, object {object_id}: {source}")]
    BadToken {
        image_id: String,
        object_id: String,
        source: EmptyToken,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub predicate: String,
    pub target: String,
}

/// A scene-graph node. Attributes behave as a set but keep first-seen order,
/// which `query(attr)` relies on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObjectNode {
    pub object_id: String,
    pub name: String,
    pub attributes: Vec<String>,
    pub relations: Vec<Relation>,
}

impl ObjectNode {
    /// Normalizes name, attributes and predicates. Duplicate attributes are
    /// dropped with a warning.
    pub fn new<A, R>(
        object_id: &str,
        name: &str,
        attributes: A,
        relations: R,
    ) -> Result<Self, EmptyToken>
    where
        A: IntoIterator,
        A::Item: AsRef<str>,
        R: IntoIterator<Item = (String, String)>,
    {
        let name = token::normalize(name)?;
        let mut attrs: Vec<String> = Vec::new();
        for a in attributes {
            let a = token::normalize(a.as_ref())?;
            if attrs.contains(&a) {
                log::warn!("object {object_id}: duplicate attribute {a:?} dropped");
                continue;
            }
            attrs.push(a);
        }
        let relations = relations
            .into_iter()
            .map(|(p, target)| {
                Ok(Relation {
                    predicate: token::normalize(&p)?,
                    target: target.trim().into(),
                })
            })
            .collect::<Result<Vec<_>, EmptyToken>>()?;
        Ok(ObjectNode {
            object_id: object_id.trim().into(),
            name,
            attributes: attrs,
            relations,
        })
    }

    pub fn has_attribute(&self, attr: &str) -> bool {
        self.attributes.iter().any(|a| a == attr)
    }
}

/// Objects of one image in source order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneGraph {
    image_id: String,
    objects: Vec<ObjectNode>,
    by_id: BTreeMap<String, usize>,
}

impl SceneGraph {
    pub fn new(image_id: impl Into<String>, objects: Vec<ObjectNode>) -> Result<Self, SceneError> {
        let image_id = image_id.into();
        let mut by_id = BTreeMap::new();
        for (i, o) in objects.iter().enumerate() {
            if by_id.insert(o.object_id.clone(), i).is_some() {
                return Err(SceneError::DuplicateObjectId {
                    image_id,
                    object_id: o.object_id.clone(),
                });
            }
        }
        for o in &objects {
            for r in &o.relations {
                if !by_id.contains_key(&r.target) {
                    return Err(SceneError::DanglingRelation {
                        image_id,
                        object_id: o.object_id.clone(),
                        target: r.target.clone(),
                    });
                }
            }
        }
        Ok(SceneGraph {
            image_id,
            objects,
            by_id,
        })
    }

    pub fn image_id(&self) -> &str {
        &self.image_id
    }

    pub fn objects(&self) -> &[ObjectNode] {
        &self.objects
    }

    pub fn len(&self) -> usize {
        self.objects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.objects.is_empty()
    }

    pub fn position(&self, object_id: &str) -> Option<usize> {
        self.by_id.get(object_id).copied()
    }

    pub fn get(&self, object_id: &str) -> Option<&ObjectNode> {
        self.position(object_id).map(|i| &self.objects[i])
    }
}

/// Scene graphs keyed by image id.
pub type GraphMap = BTreeMap<String, Arc<SceneGraph>>;

pub fn graph_map<I: IntoIterator<Item = SceneGraph>>(graphs: I) -> GraphMap {
    graphs
        .into_iter()
        .map(|g| (g.image_id().into(), Arc::new(g)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ImageSetError {
    #[error("image set is empty")]
    Empty,
    #[error("image set has {0} images, at most {MAX_IMAGES} allowed")]
    TooMany(usize),
    #[error("image {0} appears twice in one image set")]
    DuplicateImage(String),
    #[error("no scene graph for image {0}")]
    MissingGraph(String),
}

/// The images of one query, 1 to 5 distinct scene graphs in query order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageSet {
    images: Vec<Arc<SceneGraph>>,
}

impl ImageSet {
    pub fn new(images: Vec<Arc<SceneGraph>>) -> Result<Self, ImageSetError> {
        if images.is_empty() {
            return Err(ImageSetError::Empty);
        }
        if images.len() > MAX_IMAGES {
            return Err(ImageSetError::TooMany(images.len()));
        }
        for (i, g) in images.iter().enumerate() {
            if images[..i].iter().any(|h| h.image_id() == g.image_id()) {
                return Err(ImageSetError::DuplicateImage(g.image_id().into()));
            }
        }
        Ok(ImageSet { images })
    }

    pub fn single(graph: SceneGraph) -> Self {
        ImageSet {
            images: alloc::vec![Arc::new(graph)],
        }
    }

    /// Looks up every id in `graphs`.
    pub fn resolve<S: AsRef<str>>(ids: &[S], graphs: &GraphMap) -> Result<Self, ImageSetError> {
        let images = ids
            .iter()
            .map(|id| {
                graphs
                    .get(id.as_ref())
                    .cloned()
                    .ok_or_else(|| ImageSetError::MissingGraph(id.as_ref().into()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(images)
    }

    pub fn images(&self) -> &[Arc<SceneGraph>] {
        &self.images
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn image_ids(&self) -> Vec<String> {
        self.images.iter().map(|g| g.image_id().into()).collect()
    }
}
