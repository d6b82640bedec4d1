//! Attribute kinds for `query(attr, <kind>)`.

const COLORS: &[&str] = &[
    "beige", "black", "blue", "brown", "gold", "gray", "green", "grey", "orange", "pink", "purple",
    "red", "silver", "tan", "white", "yellow",
];
const MATERIALS: &[&str] = &[
    "brick", "cloth", "concrete", "glass", "leather", "metal", "metallic", "paper", "plastic",
    "stone", "wood", "wooden",
];
const SIZES: &[&str] = &[
    "big", "huge", "large", "little", "short", "small", "tall", "tiny",
];
const SHAPES: &[&str] = &["circular", "rectangular", "round", "square", "triangular"];

pub const KINDS: &[(&str, &[&str])] = &[
    ("color", COLORS),
    ("material", MATERIALS),
    ("size", SIZES),
    ("shape", SHAPES),
];

/// Kind of a known attribute token.
pub fn attribute_kind(attr: &str) -> Option<&'static str> {
    KINDS
        .iter()
        .find(|(_, words)| words.binary_search(&attr).is_ok())
        .map(|(k, _)| *k)
}

/// Whether `attr` answers a query for `kind`; no kind accepts everything.
pub fn kind_matches(kind: Option<&str>, attr: &str) -> bool {
    match kind {
        None => true,
        Some(k) => attribute_kind(attr) == Some(k),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_sorted() {
        for (_, words) in KINDS {
            assert!(words.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn lookup() {
        assert_eq!(attribute_kind("red"), Some("color"));
        assert_eq!(attribute_kind("wooden"), Some("material"));
        assert_eq!(attribute_kind("sitting"), None);
        assert!(kind_matches(None, "sitting"));
        assert!(!kind_matches(Some("color"), "small"));
    }
}
