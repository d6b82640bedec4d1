use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::clf::ValueType;
use crate::scene::ImageSet;

/// An object addressed by its position in the image set and in its graph.
/// The derived order is graph order: image first, then source order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectRef {
    pub image: usize,
    pub object: usize,
}

pub type ObjectSet = BTreeSet<ObjectRef>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub image: usize,
    pub members: ObjectSet,
}

/// Runtime value of a step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Objects(ObjectSet),
    /// One group per image, in image-set order.
    Groups(Vec<Group>),
    Integer(i64),
    Boolean(bool),
    Str(String),
    /// Image ids, in image-set order.
    Tokens(Vec<String>),
}

impl Value {
    pub fn value_type(&self) -> ValueType {
        match self {
            Value::Objects(_) => ValueType::ObjectSet,
            Value::Groups(_) => ValueType::GroupedObjects,
            Value::Integer(_) => ValueType::Integer,
            Value::Boolean(_) => ValueType::Boolean,
            Value::Str(_) => ValueType::String,
            Value::Tokens(_) => ValueType::TokenSet,
        }
    }

    pub fn summarize(&self, images: &ImageSet) -> ValueSummary {
        let ids = |r: &ObjectRef| {
            let g = &images.images()[r.image];
            (
                String::from(g.image_id()),
                g.objects()[r.object].object_id.clone(),
            )
        };
        match self {
            Value::Objects(s) => ValueSummary::Objects(s.iter().map(ids).collect()),
            Value::Groups(gs) => ValueSummary::Groups(
                gs.iter()
                    .map(|g| {
                        (
                            String::from(images.images()[g.image].image_id()),
                            g.members.len(),
                        )
                    })
                    .collect(),
            ),
            Value::Integer(n) => ValueSummary::Integer(*n),
            Value::Boolean(b) => ValueSummary::Boolean(*b),
            Value::Str(s) => ValueSummary::Str(s.clone()),
            Value::Tokens(t) => ValueSummary::Tokens(t.clone()),
        }
    }
}

/// Trace form of a value: ids and sizes only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ValueSummary {
    /// `(image_id, object_id)` pairs.
    Objects(Vec<(String, String)>),
    /// `(image_id, group size)` pairs.
    Groups(Vec<(String, usize)>),
    Integer(i64),
    Boolean(bool),
    Str(String),
    Tokens(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("a {0} value is not an answer")]
pub struct NonAnswerValue(pub ValueType);

/// Booleans become `yes`/`no`, integers decimal strings, strings lowercase.
pub fn normalize_answer(v: &Value) -> Result<String, NonAnswerValue> {
    match v {
        Value::Boolean(true) => Ok("yes".into()),
        Value::Boolean(false) => Ok("no".into()),
        Value::Integer(n) => Ok(alloc::format!("{n}")),
        Value::Str(s) => Ok(crate::token::normalize_lossy(s)),
        other => Err(NonAnswerValue(other.value_type())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn answers() {
        assert_eq!(normalize_answer(&Value::Boolean(true)).unwrap(), "yes");
        assert_eq!(normalize_answer(&Value::Boolean(false)).unwrap(), "no");
        assert_eq!(normalize_answer(&Value::Integer(0)).unwrap(), "0");
        assert_eq!(
            normalize_answer(&Value::Str("Parrot".into())).unwrap(),
            "parrot"
        );
        assert_eq!(
            normalize_answer(&Value::Objects(ObjectSet::new())),
            Err(NonAnswerValue(ValueType::ObjectSet))
        );
        assert_eq!(
            normalize_answer(&Value::Tokens(Vec::new())),
            Err(NonAnswerValue(ValueType::TokenSet))
        );
    }
}
