use core::fmt;
use core::str::FromStr;

/// The 17 CLF operations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum OperationTag {
    Find,
    Scene,
    Filter,
    Choose,
    Query,
    Verify,
    Map,
    LogicNot,
    LogicOr,
    LogicAnd,
    Count,
    Exists,
    Keys,
    UniqueImages,
    GroupByImages,
    KeepIfValuesCount,
    Compare,
}

impl OperationTag {
    pub const ALL: [OperationTag; 17] = [
        OperationTag::Find,
        OperationTag::Scene,
        OperationTag::Filter,
        OperationTag::Choose,
        OperationTag::Query,
        OperationTag::Verify,
        OperationTag::Map,
        OperationTag::LogicNot,
        OperationTag::LogicOr,
        OperationTag::LogicAnd,
        OperationTag::Count,
        OperationTag::Exists,
        OperationTag::Keys,
        OperationTag::UniqueImages,
        OperationTag::GroupByImages,
        OperationTag::KeepIfValuesCount,
        OperationTag::Compare,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OperationTag::Find => "find",
            OperationTag::Scene => "scene",
            OperationTag::Filter => "filter",
            OperationTag::Choose => "choose",
            OperationTag::Query => "query",
            OperationTag::Verify => "verify",
            OperationTag::Map => "map",
            OperationTag::LogicNot => "logic_not",
            OperationTag::LogicOr => "logic_or",
            OperationTag::LogicAnd => "logic_and",
            OperationTag::Count => "count",
            OperationTag::Exists => "exists",
            OperationTag::Keys => "keys",
            OperationTag::UniqueImages => "unique_images",
            OperationTag::GroupByImages => "group_by_images",
            OperationTag::KeepIfValuesCount => "keep_if_values_count",
            OperationTag::Compare => "compare",
        }
    }

    /// Qualifiers the operation accepts; empty means it takes none.
    pub fn qualifiers(self) -> &'static [Qualifier] {
        use Qualifier::*;
        match self {
            OperationTag::Filter => &[Attr, Rel],
            OperationTag::Choose => &[Name, Attr, Rel],
            OperationTag::Query => &[Name, Attr],
            OperationTag::Verify => &[Attr],
            OperationTag::Map => &[Or, And],
            OperationTag::KeepIfValuesCount => &[Eq, Geq, Leq],
            OperationTag::Compare => &[Eq, Geq, Leq, Lt, Gt],
            _ => &[],
        }
    }

    pub fn takes_qualifier(self) -> bool {
        !self.qualifiers().is_empty()
    }
}

impl fmt::Display for OperationTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for OperationTag {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        OperationTag::ALL
            .iter()
            .copied()
            .find(|t| t.as_str() == s)
            .ok_or(())
    }
}

/// The argument that CLF splits off fused OLF operation names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Qualifier {
    Name,
    Attr,
    Rel,
    Or,
    And,
    Eq,
    Geq,
    Leq,
    Lt,
    Gt,
}

impl Qualifier {
    pub const ALL: [Qualifier; 10] = [
        Qualifier::Name,
        Qualifier::Attr,
        Qualifier::Rel,
        Qualifier::Or,
        Qualifier::And,
        Qualifier::Eq,
        Qualifier::Geq,
        Qualifier::Leq,
        Qualifier::Lt,
        Qualifier::Gt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Qualifier::Name => "name",
            Qualifier::Attr => "attr",
            Qualifier::Rel => "rel",
            Qualifier::Or => "or",
            Qualifier::And => "and",
            Qualifier::Eq => "eq",
            Qualifier::Geq => "geq",
            Qualifier::Leq => "leq",
            Qualifier::Lt => "lt",
            Qualifier::Gt => "gt",
        }
    }

    /// Integer comparison for the comparison qualifiers.
    pub fn compare(self, lhs: i64, rhs: i64) -> Option<bool> {
        Some(match self {
            Qualifier::Eq => lhs == rhs,
            Qualifier::Geq => lhs >= rhs,
            Qualifier::Leq => lhs <= rhs,
            Qualifier::Lt => lhs < rhs,
            Qualifier::Gt => lhs > rhs,
            _ => return None,
        })
    }
}

impl fmt::Display for Qualifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Qualifier {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        Qualifier::ALL
            .iter()
            .copied()
            .find(|q| q.as_str() == s)
            .ok_or(())
    }
}
