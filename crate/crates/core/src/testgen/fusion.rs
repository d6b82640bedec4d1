use alloc::string::String;

use thiserror::Error;

use super::templates;

/// How per-image answers of a segment-combine case are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FusionFn {
    Sum,
    Or,
}

impl FusionFn {
    /// `Sum` for counting group-by questions, `Or` for their binary variant.
    pub fn for_template(template_id: &str) -> Option<Self> {
        match template_id {
            templates::COUNT_GROUP_BY => Some(FusionFn::Sum),
            templates::VERIFY_COUNT_GROUP_BY => Some(FusionFn::Or),
            _ => None,
        }
    }

    /// The answer a distractor-only image set must produce.
    pub fn neutral(self) -> &'static str {
        match self {
            FusionFn::Sum => "0",
            FusionFn::Or => "no",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FusionFn::Sum => "SUM",
            FusionFn::Or => "OR",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "SUM" | "sum" => Some(FusionFn::Sum),
            "OR" | "or" => Some(FusionFn::Or),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FusionError {
    #[error("SUM fusion needs decimal answers, got {0:?}")]
    NonNumericAnswer(String),
    #[error("OR fusion needs yes/no answers, got {0:?}")]
    NonBinaryAnswer(String),
}

pub fn fuse_answers<S: AsRef<str>>(answers: &[S], fusion: FusionFn) -> Result<String, FusionError> {
    match fusion {
        FusionFn::Sum => {
            let mut total: u64 = 0;
            for a in answers {
                let a = a.as_ref();
                let n: u64 = a
                    .parse()
                    .map_err(|_| FusionError::NonNumericAnswer(a.into()))?;
                total += n;
            }
            Ok(alloc::format!("{total}"))
        }
        FusionFn::Or => {
            let mut any = false;
            for a in answers {
                match a.as_ref() {
                    "yes" => any = true,
                    "no" => {}
                    other => return Err(FusionError::NonBinaryAnswer(other.into())),
                }
            }
            Ok(if any { "yes" } else { "no" }.into())
        }
    }
}
